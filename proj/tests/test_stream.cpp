#include <doctest.h>

#include <map>
#include <set>
#include <string>

#include "seqmem/errors.hpp"
#include "seqmem/stream.hpp"

using namespace seqmem;

namespace {

std::vector<Task> make_tasks(int n, const std::string& category = "default") {
    std::vector<Task> tasks;
    for (int i = 1; i <= n; ++i) {
        Task t;
        t.id = category + "-" + std::to_string(i);
        t.prompt = "prompt " + std::to_string(i);
        t.target = "target " + std::to_string(i);
        t.category = category;
        tasks.push_back(t);
    }
    return tasks;
}

} // namespace

TEST_CASE("parse_dataset_text reads tasks in order") {
    std::string text =
        R"({"id":"t1","prompt":"p1","target":"a1"})" "\n"
        "\n"
        R"({"id":"t2","prompt":"p2","target":"a2","category":"math","metadata":{"level":"3"}})" "\n";
    auto tasks = parse_dataset_text(text, "mem.jsonl");
    REQUIRE(tasks.size() == 2);
    CHECK(tasks[0].id == "t1");
    CHECK(tasks[0].category == "default");
    CHECK(tasks[1].category == "math");
    CHECK(tasks[1].metadata.at("level") == "3");
}

TEST_CASE("parse errors carry origin and line number") {
    CHECK_THROWS_WITH_AS((void)parse_dataset_text("{nope\n", "d.jsonl"),
                         doctest::Contains("d.jsonl:1"), ParseError);
    CHECK_THROWS_WITH_AS(
        (void)parse_dataset_text(R"({"id":"a","prompt":"p","target":"t"})" "\n"
                                 R"({"id":"b","prompt":"p"})" "\n",
                                 "d.jsonl"),
        doctest::Contains("d.jsonl:2"), ParseError);
    CHECK_THROWS_AS((void)parse_dataset_text("", "d.jsonl"), ValidationError);
    CHECK_THROWS_WITH_AS(
        (void)parse_dataset_text(R"({"id":"x","prompt":"p","target":"t","extra":1})" "\n",
                                 "d.jsonl"),
        doctest::Contains("unknown field"), ParseError);
}

TEST_CASE("duplicate task ids are rejected with the second line number") {
    std::string text =
        R"({"id":"dup","prompt":"p","target":"t"})" "\n"
        R"({"id":"dup","prompt":"q","target":"u"})" "\n";
    CHECK_THROWS_WITH_AS((void)parse_dataset_text(text, "d.jsonl"),
                         doctest::Contains("d.jsonl:2"), ValidationError);
}

TEST_CASE("TaskStream is 1-based and bounds-checked") {
    TaskStream s(make_tasks(3), std::nullopt);
    CHECK(s.size() == 3);
    CHECK(s.at(1).id == "default-1");
    CHECK(s.at(3).id == "default-3");
    CHECK_THROWS_AS((void)s.at(0), ArgumentError);
    CHECK_THROWS_AS((void)s.at(4), ArgumentError);
    CHECK_THROWS_AS(TaskStream({}, std::nullopt), ValidationError);
}

TEST_CASE("split_tail takes the trailing fraction") {
    auto tasks = make_tasks(7);
    auto [stream, holdout] = split_tail(tasks, 0.2, "seven");
    CHECK(stream.size() == 6);
    CHECK(holdout.tasks.size() == 1);
    CHECK(holdout.tasks[0].id == "default-7");
    CHECK(holdout.source_dataset == "seven");
    CHECK(holdout.tag == DistributionTag::in_distribution);
    CHECK(stream.at(1).id == "default-1");
    CHECK(stream.at(6).id == "default-6");

    SUBCASE("fraction bounds") {
        CHECK_THROWS_AS(split_tail(tasks, 0.0, "x"), ArgumentError);
        CHECK_THROWS_AS(split_tail(tasks, 1.0, "x"), ArgumentError);
    }
    SUBCASE("degenerate splits") {
        CHECK_THROWS_AS(split_tail(make_tasks(2), 0.1, "x"), ValidationError);
        CHECK_THROWS_AS(split_tail(make_tasks(1), 0.9, "x"), ValidationError);
    }
}

TEST_CASE("split_stratified proportions with one-per-category floor") {
    auto pool = make_tasks(8, "alpha");
    auto extra = make_tasks(2, "beta");
    pool.insert(pool.end(), extra.begin(), extra.end());

    auto holdout = split_stratified(pool, 5, 42, "mixed");
    REQUIRE(holdout.tasks.size() == 5);
    std::map<std::string, int> counts;
    for (const auto& t : holdout.tasks) counts[t.category]++;
    CHECK(counts["alpha"] == 4);
    CHECK(counts["beta"] == 1);

    SUBCASE("selection is seed deterministic") {
        auto again = split_stratified(pool, 5, 42, "mixed");
        for (std::size_t i = 0; i < 5; ++i)
            CHECK(again.tasks[i].id == holdout.tasks[i].id);
        auto other = split_stratified(pool, 5, 43, "mixed");
        bool same = true;
        for (std::size_t i = 0; i < 5; ++i)
            same = same && other.tasks[i].id == holdout.tasks[i].id;
        CHECK(!same);
    }
    SUBCASE("rare category still represented") {
        auto one = split_stratified(pool, 2, 7, "mixed");
        std::set<std::string> cats;
        for (const auto& t : one.tasks) cats.insert(t.category);
        CHECK(cats.size() == 2);
    }
    SUBCASE("argument validation") {
        CHECK_THROWS_AS(split_stratified(pool, 0, 1, "x"), ArgumentError);
        CHECK_THROWS_AS(split_stratified(pool, 11, 1, "x"), ArgumentError);
        CHECK_THROWS_AS(split_stratified(pool, 1, 1, "x"), ArgumentError);
        CHECK_THROWS_AS(split_stratified({}, 1, 1, "x"), ArgumentError);
    }
}

TEST_CASE("build_stream permutes only when seeded") {
    auto tasks = make_tasks(12);
    auto plain = build_stream(tasks, std::nullopt);
    for (int i = 1; i <= 12; ++i)
        CHECK(plain.at(i).id == "default-" + std::to_string(i));
    CHECK(!plain.order_seed().has_value());

    auto shuffled = build_stream(tasks, 5);
    auto shuffled2 = build_stream(tasks, 5);
    CHECK(shuffled.order_seed() == 5);
    bool identical = true;
    std::set<std::string> ids;
    for (int i = 1; i <= 12; ++i) {
        identical = identical && shuffled.at(i).id == plain.at(i).id;
        CHECK(shuffled.at(i).id == shuffled2.at(i).id);
        ids.insert(shuffled.at(i).id);
    }
    CHECK(!identical);
    CHECK(ids.size() == 12);
}

TEST_CASE("distribution tags round trip") {
    CHECK(to_string(DistributionTag::in_distribution) == "in_distribution");
    CHECK(to_string(DistributionTag::out_of_distribution) == "out_of_distribution");
    CHECK(distribution_tag_from_string("in_distribution") == DistributionTag::in_distribution);
    CHECK(distribution_tag_from_string("out_of_distribution") ==
          DistributionTag::out_of_distribution);
    CHECK_THROWS_AS((void)distribution_tag_from_string("other"), ParseError);
}
