#include "panoflow/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace panoflow {

namespace {

std::atomic<int> g_threads{0};

}

void set_thread_count(int threads)
{
    g_threads.store(std::max(0, threads));
}

int thread_count()
{
    const int requested = g_threads.load();
    if(requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_rows(int rows, const std::function<void(int)>& fn)
{
    const int workers = std::min(thread_count(), rows);
    if(workers <= 1)
    {
        for(int r = 0; r < rows; ++r) fn(r);
        return;
    }

    std::exception_ptr failure;
    std::mutex failure_lock;
    {
        std::vector<std::jthread> pool;
        pool.reserve(std::size_t(workers));
        for(int w = 0; w < workers; ++w)
        {
            const int begin = rows * w / workers;
            const int end = rows * (w + 1) / workers;
            pool.emplace_back([&, begin, end] {
                try
                {
                    for(int r = begin; r < end; ++r) fn(r);
                }
                catch(...)
                {
                    std::lock_guard lock(failure_lock);
                    if(!failure) failure = std::current_exception();
                }
            });
        }
    }
    if(failure) std::rethrow_exception(failure);
}

}
