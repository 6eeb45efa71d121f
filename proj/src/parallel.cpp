#include "kvnmd/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>
#include <vector>

namespace kvnmd {
namespace {

std::atomic<int> g_workers{1};

// Minimal persistent pool: one condition variable round per batch. Workers are
// lazily started on first use after the count is raised above one.
class Pool {
public:
    static Pool& instance() {
        // Leaked on purpose: workers are detached and must never observe a
        // destroyed pool during static teardown.
        static Pool* p = new Pool();
        return *p;
    }

    void run(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn, int workers) {
        ensure_started(workers - 1);
        const int lanes = static_cast<int>(threads_.size()) + 1;
        std::size_t chunk = (n + lanes - 1) / lanes;
        if (chunk == 0) chunk = 1;
        {
            std::unique_lock<std::mutex> lk(m_);
            job_ = &fn;
            job_n_ = n;
            job_chunk_ = chunk;
            pending_ = static_cast<int>(threads_.size());
            ++generation_;
        }
        cv_.notify_all();
        // Lane 0 is the calling thread.
        const std::size_t hi = std::min(chunk, n);
        if (hi > 0) fn(0, hi);
        std::unique_lock<std::mutex> lk(m_);
        done_cv_.wait(lk, [&] { return pending_ == 0; });
        job_ = nullptr;
    }

private:
    void ensure_started(int extra) {
        std::unique_lock<std::mutex> lk(m_);
        while (static_cast<int>(threads_.size()) < extra) {
            const int lane = static_cast<int>(threads_.size()) + 1;
            threads_.emplace_back([this, lane] { worker_loop(lane); });
            threads_.back().detach();
        }
    }

    void worker_loop(int lane) {
        std::uint64_t seen = 0;
        for (;;) {
            const std::function<void(std::size_t, std::size_t)>* job = nullptr;
            std::size_t n = 0, chunk = 0;
            {
                std::unique_lock<std::mutex> lk(m_);
                cv_.wait(lk, [&] { return generation_ != seen; });
                seen = generation_;
                job = job_;
                n = job_n_;
                chunk = job_chunk_;
            }
            if (job) {
                const std::size_t lo = std::min(n, static_cast<std::size_t>(lane) * chunk);
                const std::size_t hi = std::min(n, lo + chunk);
                if (hi > lo) (*job)(lo, hi);
            }
            {
                std::unique_lock<std::mutex> lk(m_);
                if (--pending_ == 0) done_cv_.notify_all();
            }
        }
    }

    std::mutex m_;
    std::condition_variable cv_, done_cv_;
    std::vector<std::thread> threads_;
    const std::function<void(std::size_t, std::size_t)>* job_ = nullptr;
    std::size_t job_n_ = 0, job_chunk_ = 0;
    int pending_ = 0;
    std::uint64_t generation_ = 0;
};

}  // namespace

void set_worker_count(int n) {
    if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    g_workers.store(n);
}

int worker_count() { return g_workers.load(); }

void parallel_for_blocks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    const int w = g_workers.load();
    if (w <= 1 || n == 1) {
        fn(0, n);
        return;
    }
    Pool::instance().run(n, fn, w);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    parallel_for_blocks(n, [&fn](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
}

}  // namespace kvnmd
