#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace seqmem {

std::string trim(const std::string& s);
std::string to_lower(std::string s);
/// Trims, lowercases and collapses internal whitespace runs to single spaces.
std::string normalize_text(const std::string& s);

/// Number of whitespace-delimited tokens. Used by local backends for
/// synthetic token accounting.
long long whitespace_token_count(const std::string& s);

std::uint64_t fnv1a64(const std::string& s);

/// Shortest round-trip decimal form of a double, deterministic across runs.
std::string format_double(double v);

/// Deterministic RNG used everywhere randomness is needed. mt19937_64 with
/// explicit modulo reduction so sequences do not depend on the standard
/// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t next() { return engine_(); }
    /// Uniform value in [0, n).
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

/// Random permutation of {0, .., n-1} via Fisher-Yates.
std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed);

/// k distinct elements sampled from pool, returned in pool order.
std::vector<int> sample_without_replacement(const std::vector<int>& pool,
                                            std::size_t k, std::uint64_t seed);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
/// Writes to a sibling temp file then renames, so readers never observe a
/// partially written file.
void write_text_file_atomic(const std::string& path, const std::string& content);

} // namespace seqmem
