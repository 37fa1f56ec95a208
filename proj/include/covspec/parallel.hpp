#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace covspec
{

/// Runs body(i) for i in [0, count) on up to `threads` workers.
///
/// Work is split into contiguous static blocks, so every index is processed
/// exactly once regardless of scheduling. Callers write results into
/// pre-sized per-index slots; the output is then independent of the thread
/// count. If several indices throw, the exception of the lowest index is
/// rethrown.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body &&body)
{
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
    if (workers <= 1)
    {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }

    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
        {
            const std::size_t begin = count * w / workers;
            const std::size_t end = count * (w + 1) / workers;
            pool.emplace_back([&, w, begin, end] {
                for (std::size_t i = begin; i < end; ++i)
                {
                    try
                    {
                        body(i);
                    }
                    catch (...)
                    {
                        errors[w] = std::current_exception();
                        return;
                    }
                }
            });
        }
    }

    // Blocks are ordered, so the first failing worker holds the lowest index.
    for (std::size_t w = 0; w < workers; ++w)
        if (errors[w])
            std::rethrow_exception(errors[w]);
}

} // namespace covspec
