// SPDX-License-Identifier: Apache-2.0
//
// osa-doa: DOA estimation for hybrid massive-MIMO receive arrays with
// overlapped subarrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef OSA_PARALLEL_HPP
#define OSA_PARALLEL_HPP

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace osa
{

// Runs fn(i) for i in [0, n). Each index owns its output slot and derives its
// own RNG stream, so results do not depend on the number of workers; callers
// aggregate in index order afterwards.
inline void parallel_for(int n, const std::function<void(int)> &fn, int workers = 0)
{
    if (n <= 0)
        return;
    if (workers <= 0)
        workers = int(std::thread::hardware_concurrency());
    if (workers < 1)
        workers = 1;
    if (workers > n)
        workers = n;

    if (workers == 1)
    {
        for (int i = 0; i < n; ++i)
            fn(i);
        return;
    }

    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&]
    {
        while (true)
        {
            int i = next.fetch_add(1);
            if (i >= n)
                return;
            try
            {
                fn(i);
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(size_t(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back(worker);
    for (auto &t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace osa

#endif
