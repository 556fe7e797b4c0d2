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

#include "mtnoma/parallel.h"

#include <algorithm>

namespace mtnoma
{

WorkerPool::WorkerPool(int workers)
{
    const int extra = std::max(workers, 1) - 1;
    m_threads.reserve(static_cast<std::size_t>(extra));
    for (int i = 0; i < extra; ++i)
    {
        m_threads.emplace_back([this, i] { Loop(static_cast<std::size_t>(i) + 1); });
    }
}

WorkerPool::~WorkerPool()
{
    {
        std::lock_guard lock(m_mutex);
        m_stop = true;
    }
    m_start.notify_all();
    for (auto& t : m_threads)
    {
        t.join();
    }
}

void
WorkerPool::RunBlock(std::size_t index)
{
    const std::size_t workers = m_threads.size() + 1;
    const std::size_t begin = m_count * index / workers;
    const std::size_t end = m_count * (index + 1) / workers;
    for (std::size_t i = begin; i < end; ++i)
    {
        (*m_body)(i);
    }
}

void
WorkerPool::Loop(std::size_t index)
{
    std::size_t seen = 0;
    while (true)
    {
        {
            std::unique_lock lock(m_mutex);
            m_start.wait(lock, [&] { return m_stop || m_generation != seen; });
            if (m_stop)
            {
                return;
            }
            seen = m_generation;
        }
        RunBlock(index);
        {
            std::lock_guard lock(m_mutex);
            if (--m_pending == 0)
            {
                m_done.notify_one();
            }
        }
    }
}

void
WorkerPool::Run(std::size_t count, const std::function<void(std::size_t)>& body)
{
    if (m_threads.empty() || count <= 1)
    {
        for (std::size_t i = 0; i < count; ++i)
        {
            body(i);
        }
        return;
    }
    {
        std::lock_guard lock(m_mutex);
        m_body = &body;
        m_count = count;
        m_pending = m_threads.size();
        ++m_generation;
    }
    m_start.notify_all();
    RunBlock(0);
    std::unique_lock lock(m_mutex);
    m_done.wait(lock, [&] { return m_pending == 0; });
    m_body = nullptr;
}

void
ParallelFor(std::size_t count, int workers, const std::function<void(std::size_t)>& body)
{
    WorkerPool pool(static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), std::max<std::size_t>(count, 1))));
    pool.Run(count, body);
}

} // namespace mtnoma
