#pragma once
// Deterministic parallel map: results land in index order, so any reduction
// done afterwards in index order is independent of the worker count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace ssdlasso {

// 0 means "all hardware threads".
void set_worker_count(unsigned count) noexcept;
unsigned worker_count() noexcept;

namespace detail {
bool& inside_worker() noexcept;
}

template <class F>
auto parallel_map(std::size_t count, F&& f) -> std::vector<decltype(f(std::size_t{}))> {
    using R = decltype(f(std::size_t{}));
    std::vector<R> out;
    out.reserve(count);
    unsigned workers = std::min<std::size_t>(worker_count(), count);
    if (workers <= 1 || detail::inside_worker()) {
        for (std::size_t i = 0; i < count; ++i) out.push_back(f(i));
        return out;
    }
    std::vector<std::optional<R>> slots(count);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto body = [&] {
        detail::inside_worker() = true;
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) break;
            try {
                slots[i].emplace(f(i));
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!error) error = std::current_exception();
                next.store(count);
            }
        }
        detail::inside_worker() = false;
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
    pool.clear();
    if (error) std::rethrow_exception(error);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace ssdlasso
