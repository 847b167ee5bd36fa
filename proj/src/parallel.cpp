#include "ssdlasso/parallel.hpp"

namespace ssdlasso {

namespace {
std::atomic<unsigned> g_workers{0};
}

void set_worker_count(unsigned count) noexcept { g_workers.store(count); }

unsigned worker_count() noexcept {
    unsigned w = g_workers.load();
    if (w == 0) w = std::max(1u, std::thread::hardware_concurrency());
    return w;
}

namespace detail {
bool& inside_worker() noexcept {
    thread_local bool flag = false;
    return flag;
}
}  // namespace detail

}  // namespace ssdlasso
