#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace treestrat {

// Runs fn(i) for i in [0, count) on up to `jobs` worker threads. Work items
// must only write state owned by index i, which keeps results independent of
// scheduling. Failures are collected per index; the lowest-index error is
// rethrown unless keep_going, in which case the messages are returned sorted
// by index.
inline std::vector<std::pair<std::size_t, std::string>> parallel_for(
    std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn,
    bool keep_going = false) {
    if (jobs == 0) jobs = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    jobs = std::min(jobs, count);

    std::vector<std::string> errors(count);
    std::vector<std::uint8_t> failed(count, 0);  // not vector<bool>: distinct bytes per worker
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (const std::exception& e) {
                errors[i] = e.what();
                failed[i] = 1;
            } catch (...) {
                errors[i] = "unknown error";
                failed[i] = 1;
            }
        }
    };

    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(jobs);
        for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    std::vector<std::pair<std::size_t, std::string>> failures;
    for (std::size_t i = 0; i < count; ++i)
        if (failed[i]) failures.emplace_back(i, errors[i]);
    if (!failures.empty() && !keep_going) throw std::runtime_error(failures.front().second);
    return failures;
}

}  // namespace treestrat
