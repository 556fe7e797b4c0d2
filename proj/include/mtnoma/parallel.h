/*
 * Copyright 2026 The mtnoma Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MTNOMA_PARALLEL_H
#define MTNOMA_PARALLEL_H

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mtnoma
{

/**
 * Fixed set of threads that execute index ranges in lockstep with the caller.
 * Run() partitions [0, count) into contiguous blocks, one per worker, and
 * returns once every block is done. Bodies must write only to per-index
 * outputs; callers reduce in index order so results never depend on the
 * worker count.
 */
class WorkerPool
{
  public:
    explicit WorkerPool(int workers);
    ~WorkerPool();

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    int Workers() const
    {
        return static_cast<int>(m_threads.size()) + 1;
    }

    void Run(std::size_t count, const std::function<void(std::size_t)>& body);

  private:
    void Loop(std::size_t index);
    void RunBlock(std::size_t index);

    std::vector<std::thread> m_threads;
    std::mutex m_mutex;
    std::condition_variable m_start;
    std::condition_variable m_done;
    const std::function<void(std::size_t)>* m_body = nullptr;
    std::size_t m_count = 0;
    std::size_t m_generation = 0;
    std::size_t m_pending = 0;
    bool m_stop = false;
};

/// One-shot convenience over WorkerPool.
void ParallelFor(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

} // namespace mtnoma

#endif // MTNOMA_PARALLEL_H
