#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "test_support.hpp"

using namespace aggrecon;
using namespace testing_support;

TEST(RowDistance, IdenticalRowsAreZero) {
    // row 3 of the first example table equals row 1 of the second
    const std::vector<double> a = {0, 0, 1, 1}, b = {0, 0, 1, 1};
    EXPECT_DOUBLE_EQ(row_distance(a, b), 0.0);
}

TEST(RowDistance, OneDifferingAttributeOfFour) {
    const std::vector<double> a = {1, 0, 1, 1}, b = {0, 0, 1, 1};
    EXPECT_DOUBLE_EQ(row_distance(a, b), 0.25);
}

TEST(RowDistance, SelfIsZero) {
    const std::vector<double> a = {0.3, 0.9, 0.0};
    EXPECT_DOUBLE_EQ(row_distance(a, a), 0.0);
}

TEST(Matching, IdentityOnExampleTables) {
    EXPECT_DOUBLE_EQ(match_rows(table_s1(), table_s2(), matching_method::identity).average_distance, 0.375);
}

TEST(Matching, ExactAssignmentOnExampleTables) {
    const auto s1 = table_s1(), s2 = table_s2();
    const auto m = match_rows(s1, s2, matching_method::exact_assignment);
    EXPECT_DOUBLE_EQ(m.average_distance, 0.125);
    // Rows 1 and 3 of the second table are identical, so compare matched row contents
    // against the mapping 1->3, 2->4, 3->1, 4->2.
    const std::vector<std::size_t> reference = {2, 3, 0, 1};
    const auto n2 = min_max_normalize(s2);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto got = n2.row(m.permutation[i]);
        const auto want = n2.row(reference[i]);
        EXPECT_TRUE(std::equal(got.begin(), got.end(), want.begin())) << "row " << i;
    }
    EXPECT_DOUBLE_EQ(similarity(s1, s2, matching_method::exact_assignment), 0.875);
    EXPECT_DOUBLE_EQ(exact_match_fraction(s1, s2, m), 0.5);
}

TEST(Matching, SelfMatchIsPerfect) {
    const auto s1 = table_s1();
    for (auto method : {matching_method::identity, matching_method::greedy_rank, matching_method::exact_assignment}) {
        EXPECT_DOUBLE_EQ(match_rows(s1, s1, method).average_distance, 0.0);
        EXPECT_DOUBLE_EQ(similarity(s1, s1, method), 1.0);
    }
    EXPECT_DOUBLE_EQ(exact_match_fraction(s1, s1, match_rows(s1, s1, matching_method::identity)), 1.0);
}

TEST(Matching, ComplementHasZeroSimilarity) {
    const auto s = small_table_schema();
    const auto a = binary_rows(s, {{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}});
    const auto b = binary_rows(s, {{1, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 1, 1}});
    for (auto method : {matching_method::identity, matching_method::greedy_rank, matching_method::exact_assignment}) {
        EXPECT_DOUBLE_EQ(similarity(a, b, method), 0.0);
        EXPECT_DOUBLE_EQ(exact_match_fraction(a, b, match_rows(a, b, method)), 0.0);
    }
}

TEST(Matching, GreedyIsAPermutation) {
    const auto m = match_rows(table_s1(), table_s2(), matching_method::greedy_rank);
    auto p = m.permutation;
    std::sort(p.begin(), p.end());
    EXPECT_EQ(p, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(Matching, FeatureSubsetRestrictsAttributes) {
    const std::vector<std::string> subset = {"PTT"};
    const auto m = match_rows(table_s1(), table_s2(), matching_method::identity, subset);
    EXPECT_EQ(m.attributes, subset);
    EXPECT_DOUBLE_EQ(m.average_distance, 0.5); // PTT differs in rows 1 and 4
    EXPECT_DOUBLE_EQ(match_rows(table_s1(), table_s2(), matching_method::identity, std::vector<std::string>{"PT"}).average_distance, 0.0);
}

TEST(Matching, RejectsMismatchedInputs) {
    const auto a = table_s1();
    const auto shorter = binary_rows(small_table_schema(), {{0, 0, 0, 0}});
    EXPECT_THROW(match_rows(a, shorter, matching_method::greedy_rank), error);
    const auto other = binary_rows(binary_schema({"X", "Y", "Z"}), {{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}, {1, 1, 1, 1}});
    EXPECT_THROW(match_rows(a, other, matching_method::greedy_rank), schema_error);
    const auto empty = binary_rows(small_table_schema(), {});
    EXPECT_THROW(match_rows(empty, empty, matching_method::greedy_rank), error);
}

TEST(Matching, MethodNames) {
    EXPECT_EQ(parse_matching_method("greedy"), matching_method::greedy_rank);
    EXPECT_EQ(parse_matching_method("exact"), matching_method::exact_assignment);
    EXPECT_EQ(parse_matching_method("hungarian"), matching_method::exact_assignment);
    EXPECT_EQ(parse_matching_method("identity"), matching_method::identity);
    EXPECT_THROW(parse_matching_method("nope"), invalid_argument_error);
    EXPECT_EQ(to_string(matching_method::exact_assignment), "exact");
}

TEST(Matching, ContinuousAttributesUseJointScale) {
    const schema s({feature_spec::continuous("x")}, feature_spec::binary("y"));
    const dataset a(s, {continuous_column{0, 10}}, {0, 1});
    const dataset b(s, {continuous_column{10, 20}}, {0, 1});
    // joint range [0, 20]: a -> {0, .5}, b -> {.5, 1}; outcome identical
    EXPECT_DOUBLE_EQ(match_rows(a, b, matching_method::identity).average_distance, 0.25);
}

namespace {

dataset random_binary(random_engine& rng, std::size_t n, std::size_t features) {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < features; ++j) names.push_back("f" + std::to_string(j));
    const auto s = binary_schema(names);
    std::vector<std::vector<int>> rows(n);
    for (auto& r : rows)
        for (std::size_t j = 0; j <= features; ++j) r.push_back(static_cast<int>(rng.uniform_index(2)));
    return binary_rows(s, rows);
}

dataset random_mixed(random_engine& rng, std::size_t n) {
    const schema s({feature_spec::binary("b"), feature_spec::continuous("x")}, feature_spec::binary("y"));
    binary_column b, y;
    continuous_column x;
    for (std::size_t i = 0; i < n; ++i) {
        b.push_back(static_cast<std::uint8_t>(rng.uniform_index(2)));
        y.push_back(static_cast<std::uint8_t>(rng.uniform_index(2)));
        x.push_back(rng.uniform(0, 100));
    }
    return {s, {b, x}, y};
}

double brute_force_min_total(const dataset& a, const dataset& b) {
    const auto na = min_max_normalize_jointly(std::vector<const dataset*>{&a, &b}, resolve_attributes(a.get_schema(), {}));
    std::vector<std::size_t> perm(a.n_rows());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best = 1e300;
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < perm.size(); ++i) {
            const auto ra = na[0].row(i), rb = na[1].row(perm[i]);
            double d = 0.0;
            for (std::size_t c = 0; c < ra.size(); ++c) d += std::abs(ra[c] - rb[c]);
            total += d / static_cast<double>(ra.size());
        }
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

} // namespace

TEST(Hungarian, MatchesExhaustiveSearchOnSmallInstances) {
    random_engine rng(31);
    for (int t = 0; t < 120; ++t) {
        const std::size_t n = 1 + rng.uniform_index(7);
        const auto a = t % 2 ? random_binary(rng, n, 3) : random_mixed(rng, n);
        const auto b = t % 2 ? random_binary(rng, n, 3) : random_mixed(rng, n);
        const auto m = match_rows(a, b, matching_method::exact_assignment);
        EXPECT_NEAR(m.total_distance, brute_force_min_total(a, b), 1e-9) << "trial " << t;
    }
}

TEST(Hungarian, DominatesGreedyAndIdentity) {
    random_engine rng(32);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 10 + rng.uniform_index(60);
        const auto a = random_mixed(rng, n), b = random_mixed(rng, n);
        const double exact = match_rows(a, b, matching_method::exact_assignment).total_distance;
        EXPECT_LE(exact, match_rows(a, b, matching_method::greedy_rank).total_distance + 1e-9);
        EXPECT_LE(exact, match_rows(a, b, matching_method::identity).total_distance + 1e-9);
    }
}

TEST(Hungarian, RawCostMatrix) {
    // Optimum takes (0,1), (1,0), (2,2): 1 + 2 + 2.
    const std::vector<double> cost = {4, 1, 3, 2, 0, 5, 3, 2, 2};
    const auto p = solve_assignment(cost, 3);
    double total = 0.0;
    for (std::size_t i = 0; i < 3; ++i) total += cost[i * 3 + p[i]];
    EXPECT_DOUBLE_EQ(total, 5.0);
}

TEST(Hungarian, WorkerCountDoesNotChangeResult) {
    random_engine rng(33);
    const auto a = random_mixed(rng, 80), b = random_mixed(rng, 80);
    const auto one = match_rows(a, b, matching_method::exact_assignment, std::nullopt, 1);
    const auto four = match_rows(a, b, matching_method::exact_assignment, std::nullopt, 4);
    EXPECT_EQ(one.permutation, four.permutation);
}

TEST(Report, CompareDatasetsFillsFields) {
    const auto r = compare_datasets(table_s1(), table_s2(), matching_method::exact_assignment);
    EXPECT_EQ(r.n_rows, 4u);
    EXPECT_DOUBLE_EQ(r.similarity, 1.0 - r.average_distance);
    EXPECT_DOUBLE_EQ(r.exact_match_fraction, 0.5);
    EXPECT_EQ(r.feature_subset.size(), 4u);
}
