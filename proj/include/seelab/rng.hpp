#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace seelab {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Stream tags keep Brownian increments and auxiliary sampling apart.
enum class StreamTag : std::uint16_t { brownian = 0, sampling = 1, restart = 2 };

/// Fills `out` with i.i.d. N(0, dt) values fully determined by
/// (seed, path_index, step). Distinct tuples give independent streams.
void gaussian_increments(std::uint64_t seed, std::uint64_t path_index, std::uint64_t step,
                         double dt, std::span<double> out);

std::vector<double> gaussian_increments(std::uint64_t seed, std::uint64_t path_index,
                                        std::uint64_t step, std::size_t k, double dt);

/// Sequential counter-based generator for auxiliary sampling (probe vectors,
/// test functions, pair selection). Satisfies uniform_random_bit_generator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, std::uint64_t stream, StreamTag tag = StreamTag::sampling);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()();

    /// Uniform on [0, 1).
    double uniform();
    /// Uniform on [lo, hi).
    double uniform(double lo, double hi);
    double normal();
    std::uint64_t below(std::uint64_t n);

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    StreamTag tag_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int available_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace seelab
