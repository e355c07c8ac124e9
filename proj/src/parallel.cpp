#include "rdx/parallel.hpp"

#include <algorithm>
#include <memory>
#include <mutex>
#include <thread>

#include <tbb/blocked_range.h>
#include <tbb/global_control.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

namespace rdx {

namespace {

struct ArenaState {
    std::mutex mu;
    std::size_t threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    std::unique_ptr<tbb::global_control> limit;  // lets the arena exceed the core count
    std::unique_ptr<tbb::task_arena> arena;
};

ArenaState& state() {
    static ArenaState s;
    return s;
}

tbb::task_arena& arena() {
    auto& s = state();
    std::lock_guard lock(s.mu);
    if (!s.arena) {
        s.limit = std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism, s.threads);
        s.arena = std::make_unique<tbb::task_arena>(static_cast<int>(s.threads));
    }
    return *s.arena;
}

}  // namespace

void set_thread_count(std::size_t n) {
    auto& s = state();
    std::lock_guard lock(s.mu);
    s.threads = std::max<std::size_t>(1, n);
    s.arena.reset();
    s.limit.reset();
}

std::size_t thread_count() noexcept { return state().threads; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    if (n == 0) return;
    if (n == 1 || thread_count() == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    arena().execute([&] {
        tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n), [&](const tbb::blocked_range<std::size_t>& r) {
            for (std::size_t i = r.begin(); i != r.end(); ++i) body(i);
        });
    });
}

}  // namespace rdx
