#pragma once

#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace finbench {

// Persistent worker pool for data-parallel loops over row indices. Work is
// split into static contiguous chunks, one per worker, and every index writes
// only its own outputs, so results are identical for any worker count.
class ThreadPool {
 public:
  explicit ThreadPool(int workers) : workers_(workers < 1 ? 1 : workers) {
    for (int w = 1; w < workers_; ++w) {
      threads_.emplace_back([this, w] { worker_loop(w); });
    }
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  ~ThreadPool() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = true;
      ++generation_;
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
  }

  int workers() const { return workers_; }

  void parallel_for(int n, const std::function<void(int)>& body) {
    if (n <= 0) return;
    if (workers_ == 1) {
      for (int i = 0; i < n; ++i) body(i);
      return;
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      job_ = &body;
      job_n_ = n;
      done_count_ = 0;
      error_ = nullptr;
      ++generation_;
    }
    wake_.notify_all();
    try {
      run_chunk(0, n, body);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
    {
      std::unique_lock<std::mutex> lock(mutex_);
      done_.wait(lock, [this] { return done_count_ == workers_ - 1; });
      job_ = nullptr;
      if (error_) std::rethrow_exception(error_);
    }
  }

 private:
  void worker_loop(int w) {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(int)>* job = nullptr;
      int n = 0;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        job = job_;
        n = job_n_;
      }
      if (job) {
        try {
          run_chunk(w, n, *job);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mutex_);
          if (!error_) error_ = std::current_exception();
        }
      }
      {
        std::lock_guard<std::mutex> lock(mutex_);
        ++done_count_;
        if (done_count_ == workers_ - 1) done_.notify_one();
      }
    }
  }

  void run_chunk(int w, int n, const std::function<void(int)>& body) {
    const auto begin = static_cast<int>(static_cast<std::int64_t>(n) * w / workers_);
    const auto end =
        static_cast<int>(static_cast<std::int64_t>(n) * (w + 1) / workers_);
    for (int i = begin; i < end; ++i) body(i);
  }

  int workers_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(int)>* job_ = nullptr;
  int job_n_ = 0;
  int done_count_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

}  // namespace finbench
