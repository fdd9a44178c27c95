#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace epnr {

/// Invalid user-supplied parameters (network sizes, profiles, run configuration).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input files.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a path of indices,
/// e.g. derive_seed(master, scenario, selector).
constexpr std::uint64_t derive_seed(std::uint64_t base) noexcept { return splitmix64(base); }

template <class... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, Rest... rest) noexcept {
    return derive_seed(splitmix64(base ^ splitmix64(index + 0x632be59bd9b4e019ULL)),
                       static_cast<std::uint64_t>(rest)...);
}

/// Runs body(i) for i in [0, n) on up to `threads` workers. Indices are
/// handed out dynamically, so callers give each index its own RNG stream.
template <class Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
    const std::size_t workers =
        std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::vector<std::exception_ptr> errors(workers);
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < n; i = next++) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace epnr
