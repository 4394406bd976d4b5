// Copyright 2026 The drot Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "drot/threadpool.hpp"

#include <algorithm>

namespace drot {

std::size_t ThreadPool::hardware_workers() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<std::size_t>(hc);
}

ThreadPool::ThreadPool(std::size_t workers)
    : workers_(std::max<std::size_t>(1, workers)) {
  threads_.reserve(workers_ - 1);
  for (std::size_t w = 1; w < workers_; ++w)
    threads_.emplace_back([this, w] { worker_loop(w); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lk(mutex_);
    stop_ = true;
  }
  start_cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void ThreadPool::worker_loop(std::size_t worker_id) {
  std::uint64_t seen = 0;
  for (;;) {
    const std::function<void(std::size_t, std::size_t)>* job;
    std::size_t tasks;
    {
      std::unique_lock<std::mutex> lk(mutex_);
      start_cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      job = job_;
      tasks = job_tasks_;
      if (job == nullptr) continue;  // generation already retired
      ++active_;
    }
    for (;;) {
      std::size_t t = next_task_.fetch_add(1, std::memory_order_relaxed);
      if (t >= tasks) break;
      (*job)(t, worker_id);
      completed_.fetch_add(1, std::memory_order_acq_rel);
    }
    {
      std::lock_guard<std::mutex> lk(mutex_);
      --active_;
    }
    done_cv_.notify_all();
  }
}

// Single caller at a time; a run is fully retired (no worker still holds a
// claim on its task counter) before the next one can be published.
void ThreadPool::run(std::size_t n_tasks,
                     const std::function<void(std::size_t, std::size_t)>& fn) {
  if (n_tasks == 0) return;
  if (workers_ == 1 || n_tasks == 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) fn(t, 0);
    return;
  }
  {
    std::lock_guard<std::mutex> lk(mutex_);
    job_ = &fn;
    job_tasks_ = n_tasks;
    next_task_.store(0, std::memory_order_relaxed);
    completed_.store(0, std::memory_order_relaxed);
    ++generation_;
  }
  start_cv_.notify_all();
  for (;;) {
    std::size_t t = next_task_.fetch_add(1, std::memory_order_relaxed);
    if (t >= n_tasks) break;
    fn(t, 0);
    completed_.fetch_add(1, std::memory_order_acq_rel);
  }
  std::unique_lock<std::mutex> lk(mutex_);
  done_cv_.wait(lk, [&] {
    return completed_.load(std::memory_order_acquire) == n_tasks &&
           active_ == 0;
  });
  job_ = nullptr;
}

}  // namespace drot
