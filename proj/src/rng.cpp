#include "seelab/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace seelab {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
}

std::array<std::uint32_t, 4> make_counter(std::uint64_t block, std::uint64_t step,
                                          std::uint64_t path_index, StreamTag tag) {
    if (step > 0xFFFFFFFFull || block > 0xFFFFFFFFull || path_index > 0xFFFFFFFFFFFFull) {
        throw std::out_of_range("counter-based RNG: counter field overflow");
    }
    return {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(step),
            static_cast<std::uint32_t>(path_index),
            static_cast<std::uint32_t>((path_index >> 32) & 0xFFFFu) |
                (static_cast<std::uint32_t>(tag) << 16)};
}

std::array<std::uint32_t, 2> make_key(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

// 53-bit uniform on (0, 1].
inline double open_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

inline std::uint64_t join(std::uint32_t hi, std::uint32_t lo) {
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t lo0, hi0, lo1, hi1;
        mulhilo(kMul0, ctr[0], lo0, hi0);
        mulhilo(kMul1, ctr[2], lo1, hi1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

void gaussian_increments(std::uint64_t seed, std::uint64_t path_index, std::uint64_t step,
                         double dt, std::span<double> out) {
    const double scale = std::sqrt(dt);
    const auto key = make_key(seed);
    for (std::size_t i = 0; i < out.size(); i += 2) {
        const auto r = philox4x32(make_counter(i / 2, step, path_index, StreamTag::brownian), key);
        const double u1 = open_unit(join(r[0], r[1]));
        const double u2 = open_unit(join(r[2], r[3]));
        const double radius = std::sqrt(-2.0 * std::log(u1)) * scale;
        const double angle = 2.0 * std::numbers::pi * u2;
        out[i] = radius * std::cos(angle);
        if (i + 1 < out.size()) out[i + 1] = radius * std::sin(angle);
    }
}

std::vector<double> gaussian_increments(std::uint64_t seed, std::uint64_t path_index,
                                        std::uint64_t step, std::size_t k, double dt) {
    std::vector<double> out(k);
    gaussian_increments(seed, path_index, step, dt, out);
    return out;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream, StreamTag tag)
    : seed_(seed), stream_(stream), tag_(tag) {}

void CounterRng::refill() {
    // The step slot carries the high half of the block index.
    const auto r = philox4x32(make_counter(block_ & 0xFFFFFFFFull, block_ >> 32, stream_, tag_),
                              make_key(seed_));
    ++block_;
    buffer_ = {join(r[0], r[1]), join(r[2], r[3])};
    available_ = 2;
}

CounterRng::result_type CounterRng::operator()() {
    if (available_ == 0) refill();
    return buffer_[2 - available_--];
}

double CounterRng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double CounterRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double CounterRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    const double u1 = open_unit((*this)());
    const double u2 = open_unit((*this)());
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::uint64_t CounterRng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("CounterRng::below: empty range");
    // Lemire's multiply-shift with rejection.
    for (;;) {
        const std::uint64_t x = (*this)();
        const unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
        const auto lo = static_cast<std::uint64_t>(m);
        if (lo >= n || lo >= (-n) % n) return static_cast<std::uint64_t>(m >> 64);
    }
}

}  // namespace seelab
