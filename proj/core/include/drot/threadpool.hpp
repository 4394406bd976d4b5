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

#ifndef DROT_THREADPOOL_HPP_
#define DROT_THREADPOOL_HPP_

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace drot {

// Minimal persistent worker pool. run() hands out task indices through a
// shared atomic counter, so assignment of tasks to workers is dynamic; all
// kernels built on top are written so that results do not depend on that
// assignment. The calling thread participates as worker 0.
class ThreadPool {
 public:
  explicit ThreadPool(std::size_t workers);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  std::size_t workers() const { return workers_; }

  // Invokes fn(task, worker) for every task in [0, n_tasks). Blocks until
  // all tasks have finished. fn must not throw.
  void run(std::size_t n_tasks,
           const std::function<void(std::size_t, std::size_t)>& fn);

  static std::size_t hardware_workers();

 private:
  void worker_loop(std::size_t worker_id);

  std::size_t workers_;
  std::vector<std::thread> threads_;

  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::size_t, std::size_t)>* job_ = nullptr;
  std::size_t job_tasks_ = 0;
  std::atomic<std::size_t> next_task_{0};
  std::atomic<std::size_t> completed_{0};
  std::size_t active_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

}  // namespace drot

#endif  // DROT_THREADPOOL_HPP_
