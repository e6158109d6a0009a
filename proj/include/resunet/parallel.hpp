#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace resunet {

/// Worker cap: RESUNET_THREADS if set, else hardware concurrency.
inline int max_threads() {
  static int cached = [] {
    if (const char* env = std::getenv("RESUNET_THREADS")) {
      int v = std::atoi(env);
      if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
  }();
  return cached;
}

/// Fixed-size pool with static index partitioning. Work items must write
/// disjoint state; reductions are the caller's job and must combine partial
/// results in index order so results do not depend on the thread count.
class ThreadPool {
 public:
  static ThreadPool& instance() {
    static ThreadPool pool(max_threads());
    return pool;
  }

  int size() const { return nthreads_; }

  void run(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (nthreads_ == 1 || n == 1) {
      for (std::size_t i = 0; i < n; ++i) fn(i);
      return;
    }
    std::unique_lock<std::mutex> lock(job_mutex_);
    job_fn_ = &fn;
    job_n_ = n;
    pending_ = nthreads_ - 1;
    ++generation_;
    lock.unlock();
    cv_.notify_all();

    work_range(0, n, fn);

    std::unique_lock<std::mutex> wait_lock(job_mutex_);
    done_cv_.wait(wait_lock, [this] { return pending_ == 0; });
    job_fn_ = nullptr;
  }

  ~ThreadPool() {
    {
      std::lock_guard<std::mutex> lock(job_mutex_);
      stop_ = true;
      ++generation_;
    }
    cv_.notify_all();
    for (auto& t : workers_) t.join();
  }

 private:
  explicit ThreadPool(int nthreads) : nthreads_(nthreads) {
    for (int w = 1; w < nthreads_; ++w) {
      workers_.emplace_back([this, w] { worker_loop(w); });
    }
  }

  void worker_loop(int worker_id) {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(std::size_t)>* fn = nullptr;
      std::size_t n = 0;
      {
        std::unique_lock<std::mutex> lock(job_mutex_);
        cv_.wait(lock, [&] { return generation_ != seen; });
        seen = generation_;
        if (stop_) return;
        fn = job_fn_;
        n = job_n_;
      }
      if (fn) {
        work_range(worker_id, n, *fn);
        std::lock_guard<std::mutex> lock(job_mutex_);
        if (--pending_ == 0) done_cv_.notify_one();
      }
    }
  }

  void work_range(int worker_id, std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t begin = n * worker_id / nthreads_;
    const std::size_t end = n * (worker_id + 1) / nthreads_;
    for (std::size_t i = begin; i < end; ++i) fn(i);
  }

  int nthreads_;
  std::vector<std::thread> workers_;
  std::mutex job_mutex_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::size_t)>* job_fn_ = nullptr;
  std::size_t job_n_ = 0;
  int pending_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  ThreadPool::instance().run(n, fn);
}

}  // namespace resunet
