#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace seelab {

/// A worker failed; carries the lowest failing path index.
class PathFailure : public std::runtime_error {
public:
    PathFailure(std::size_t index, const std::string& what)
        : std::runtime_error("path " + std::to_string(index) + " failed: " + what), index_(index) {}
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

/// Worker count from SEE_LAB_WORKERS, else 1.
std::size_t default_workers();

/// Evaluates fn(0..count-1) on `workers` threads; results come back in index
/// order, so any aggregation over them is independent of the worker count.
template <class Fn>
auto parallel_map(std::size_t count, std::size_t workers, Fn&& fn) -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
    using Result = std::invoke_result_t<Fn&, std::size_t>;
    std::vector<std::optional<Result>> slots(count);
    std::atomic<std::size_t> next{0};
    std::mutex failure_mutex;
    std::optional<std::size_t> failed_index;
    std::string failure_message;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                slots[i].emplace(fn(i));
            } catch (const std::exception& e) {
                std::lock_guard lock(failure_mutex);
                if (!failed_index || i < *failed_index) {
                    failed_index = i;
                    failure_message = e.what();
                }
            }
        }
    };

    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed_index) throw PathFailure(*failed_index, failure_message);

    std::vector<Result> out;
    out.reserve(count);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace seelab
