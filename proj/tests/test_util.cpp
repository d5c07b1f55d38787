#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <set>

#include "seqmem/errors.hpp"
#include "seqmem/util.hpp"

using namespace seqmem;

TEST_CASE("trim strips surrounding whitespace only") {
    CHECK(trim("  a b  ") == "a b");
    CHECK(trim("\t\nx\r\n") == "x");
    CHECK(trim("") == "");
    CHECK(trim("   ") == "");
}

TEST_CASE("normalize_text lowercases and collapses runs") {
    CHECK(normalize_text("  The   ANSWER\t is\n 42 ") == "the answer is 42");
    CHECK(normalize_text("abc") == "abc");
    CHECK(normalize_text("") == "");
}

TEST_CASE("whitespace_token_count") {
    CHECK(whitespace_token_count("") == 0);
    CHECK(whitespace_token_count("   ") == 0);
    CHECK(whitespace_token_count("one") == 1);
    CHECK(whitespace_token_count("a b  c\nd") == 4);
}

TEST_CASE("fnv1a64 matches reference vectors") {
    // Published FNV-1a test vectors.
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("format_double round-trips and is minimal") {
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
    CHECK(format_double(-2.25) == "-2.25");
}

TEST_CASE("Rng below is deterministic and in range") {
    Rng a(7);
    Rng b(7);
    for (int i = 0; i < 100; ++i) {
        std::uint64_t va = a.below(13);
        CHECK(va == b.below(13));
        CHECK(va < 13);
    }
}

TEST_CASE("random_permutation is a permutation and seed-stable") {
    auto p = random_permutation(10, 3);
    auto q = random_permutation(10, 3);
    CHECK(p == q);
    std::set<std::size_t> seen(p.begin(), p.end());
    CHECK(seen.size() == 10);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 9);
    CHECK(random_permutation(10, 4) != p);
    CHECK(random_permutation(0, 1).empty());
}

TEST_CASE("sample_without_replacement returns distinct items in pool order") {
    std::vector<int> pool{5, 1, 9, 2, 7, 3};
    auto s = sample_without_replacement(pool, 4, 11);
    CHECK(s.size() == 4);
    std::set<int> uniq(s.begin(), s.end());
    CHECK(uniq.size() == 4);
    // pool order preserved
    std::vector<std::size_t> positions;
    for (int v : s) {
        auto it = std::find(pool.begin(), pool.end(), v);
        REQUIRE(it != pool.end());
        positions.push_back(static_cast<std::size_t>(it - pool.begin()));
    }
    CHECK(std::is_sorted(positions.begin(), positions.end()));
    CHECK(s == sample_without_replacement(pool, 4, 11));

    SUBCASE("k == pool size returns the whole pool; larger k is an error") {
        CHECK(sample_without_replacement(pool, 6, 1) == pool);
        CHECK_THROWS_AS((void)sample_without_replacement(pool, 99, 1), ArgumentError);
    }
    SUBCASE("duplicate values in the pool are kept distinct by position") {
        std::vector<int> dup{4, 4, 4, 4};
        auto d = sample_without_replacement(dup, 3, 2);
        CHECK(d == std::vector<int>{4, 4, 4});
    }
}

TEST_CASE("text file round trip, atomic variant included") {
    const std::string path = "util_test_file.txt";
    write_text_file(path, "line\n");
    CHECK(read_text_file(path) == "line\n");
    write_text_file_atomic(path, "other\n");
    CHECK(read_text_file(path) == "other\n");
    std::remove(path.c_str());
    CHECK_THROWS_AS((void)read_text_file(path), Error);
}
