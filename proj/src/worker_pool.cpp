#include "chainsim/worker_pool.hpp"

namespace chainsim {

WorkerPool::WorkerPool(std::size_t workers) {
    if (workers == 0) workers = 1;
    threads_.reserve(workers - 1);
    for (std::size_t i = 1; i < workers; ++i) threads_.emplace_back([this, i] { loop(i); });
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    start_cv_.notify_all();
    for (auto& t : threads_) t.join();
}

void WorkerPool::run(const std::function<void(std::size_t)>& task) {
    if (threads_.empty()) {
        task(0);
        return;
    }
    {
        std::lock_guard lock(mutex_);
        task_ = &task;
        remaining_ = threads_.size();
        error_ = nullptr;
        ++generation_;
    }
    start_cv_.notify_all();

    std::exception_ptr local;
    try {
        task(0);
    } catch (...) {
        local = std::current_exception();
    }

    std::unique_lock lock(mutex_);
    done_cv_.wait(lock, [this] { return remaining_ == 0; });
    task_ = nullptr;
    if (local) std::rethrow_exception(local);
    if (error_) std::rethrow_exception(error_);
}

void WorkerPool::loop(std::size_t index) {
    std::size_t seen = 0;
    for (;;) {
        const std::function<void(std::size_t)>* task;
        {
            std::unique_lock lock(mutex_);
            start_cv_.wait(lock, [&] { return stopping_ || generation_ != seen; });
            if (stopping_) return;
            seen = generation_;
            task = task_;
        }
        std::exception_ptr err;
        try {
            (*task)(index);
        } catch (...) {
            err = std::current_exception();
        }
        {
            std::lock_guard lock(mutex_);
            if (err && !error_) error_ = err;
            if (--remaining_ == 0) done_cv_.notify_one();
        }
    }
}

}  // namespace chainsim
