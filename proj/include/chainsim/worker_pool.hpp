#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace chainsim {

/// Fixed set of threads that run one task per worker index and then meet at
/// a barrier. Worker 0 is the calling thread, so a pool of size 1 runs the
/// task inline on exactly the same code path.
class WorkerPool {
public:
    explicit WorkerPool(std::size_t workers);
    ~WorkerPool();

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    std::size_t size() const { return threads_.size() + 1; }

    /// Runs task(w) for every w in [0, size()) and returns once all are done.
    /// The first exception thrown by any worker is rethrown here.
    void run(const std::function<void(std::size_t)>& task);

private:
    void loop(std::size_t index);

    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable start_cv_;
    std::condition_variable done_cv_;
    const std::function<void(std::size_t)>* task_ = nullptr;
    std::size_t generation_ = 0;
    std::size_t remaining_ = 0;
    bool stopping_ = false;
    std::exception_ptr error_;
};

}  // namespace chainsim
