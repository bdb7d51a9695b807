#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "test_support.hpp"

using namespace aggrecon;
using namespace testing_support;

namespace {

aggregate_spec single_feature_spec(double o, double r1, double f, std::size_t n) {
    aggregate_spec spec;
    spec.columns = binary_schema({"PT"});
    spec.n = n;
    spec.class_fraction = r1;
    spec.features = {binary_aggregate{o, f}};
    return spec;
}

// Roots of the cell quadratic by the textbook formula in long double.
std::vector<long double> textbook_roots(long double o, long double A, long double B, long double N) {
    const long double a = 1 - o, b = N - A - B + o * (A + B), c = -o * A * B;
    if (std::fabs(a) < 1e-15L) return {-c / b};
    const long double disc = b * b - 4 * a * c;
    if (disc < 0) return {};
    const long double s = std::sqrt(disc);
    return {(-b + s) / (2 * a), (-b - s) / (2 * a)};
}

} // namespace

TEST(SolveCells, PublishedProthrombinTable) {
    const auto s = solve_cells(3.58, 1068.0 / 10790.0, 2994.0 / 10790.0, 10790);
    EXPECT_EQ(s.cells, (contingency_table{579, 2415, 489, 7307}));
    EXPECT_NEAR(s.l1, 578.8, 0.1);
}

TEST(SolveCells, IndependenceIsExactProduct) {
    const auto s = solve_cells(1.0, 0.5, 0.5, 100);
    EXPECT_EQ(s.cells, (contingency_table{25, 25, 25, 25}));
    EXPECT_DOUBLE_EQ(s.achieved_or, 1.0);
    EXPECT_DOUBLE_EQ(s.or_deviation, 0.0);
}

TEST(SolveCells, MatchesBruteForceClosestTable) {
    // Enumerate every integer table with margins A = 100, B = 300, N = 1000.
    const std::int64_t A = 100, B = 300, N = 1000;
    std::int64_t best = -1;
    double best_gap = 1e300;
    for (std::int64_t l1 = 0; l1 <= std::min(A, B); ++l1) {
        const double l2 = static_cast<double>(B - l1), l3 = static_cast<double>(A - l1),
                     l4 = static_cast<double>(N - A - B + l1);
        if (l2 <= 0 || l3 <= 0) continue;
        const double gap = std::abs(static_cast<double>(l1) * l4 / (l2 * l3) - 4.0);
        if (gap < best_gap) {
            best_gap = gap;
            best = l1;
        }
    }
    const auto s = solve_cells(4.0, 0.1, 0.3, 1000);
    EXPECT_EQ(s.cells.l1, best);
    EXPECT_GE(s.achieved_or, 3.6);
    EXPECT_LE(s.achieved_or, 4.4);
}

TEST(SolveCells, ExactlyOneRootInFeasibilityInterval) {
    random_engine rng(2024);
    for (int i = 0; i < 3000; ++i) {
        const double o = rng.uniform(1.0, 10.0), r1 = rng.uniform(0.05, 0.5), f = rng.uniform(0.05, 0.5);
        const auto n = static_cast<std::size_t>(100 + rng.uniform_index(9901));
        const long double A = std::llround(r1 * static_cast<double>(n));
        const long double B = std::llround(f * static_cast<double>(n));
        const long double N = static_cast<long double>(n);
        const long double lo = std::max<long double>(0, A + B - N), hi = std::min(A, B);
        std::vector<long double> inside;
        for (auto r : textbook_roots(o, A, B, N))
            if (r >= lo - 1e-6L && r <= hi + 1e-6L) inside.push_back(r);
        ASSERT_EQ(inside.size(), 1u) << "o=" << o << " r1=" << r1 << " f=" << f << " n=" << n;
        cell_solution s;
        ASSERT_NO_THROW(s = solve_cells(o, r1, f, n));
        EXPECT_NEAR(s.l1, static_cast<double>(inside[0]), 1e-6 * std::max(1.0, static_cast<double>(N)));
        EXPECT_EQ(s.cells.l1 + s.cells.l3, static_cast<std::int64_t>(A));
        EXPECT_EQ(s.cells.l1 + s.cells.l2, static_cast<std::int64_t>(B));
        EXPECT_EQ(s.cells.total(), static_cast<std::int64_t>(n));
    }
}

TEST(SolveCells, LargeOddsRatioStaysStable) {
    const auto s = solve_cells(1e6, 0.3, 0.3, 10000);
    EXPECT_GE(s.l1, 0.0);
    EXPECT_LE(s.l1, 3000.0);
    EXPECT_GT(s.cells.l1, 2900);
}

TEST(SolveCells, OddsBelowOneSupported) {
    const auto s = solve_cells(0.25, 0.3, 0.4, 5000);
    EXPECT_NEAR(s.achieved_or, 0.25, 0.01);
}

TEST(SolveCells, InfeasibleMarginsRejected) {
    EXPECT_THROW(solve_cells(2.0, 0.5, 0.01, 10), infeasible_spec_error); // B rounds to 0
    EXPECT_THROW(solve_cells(-1.0, 0.5, 0.5, 10), invalid_spec_error);
    EXPECT_THROW(solve_cells(2.0, 1.0, 0.5, 10), invalid_spec_error);
}

TEST(Reconstruct, PublishedAggregatesReproduceTableForAnySeed) {
    const auto spec = single_feature_spec(3.58, 1068.0 / 10790.0, 2994.0 / 10790.0, 10790);
    for (std::uint64_t seed : {0ULL, 1ULL, 99ULL, 123456789ULL})
        EXPECT_EQ(contingency_table_of(reconstruct(spec, seed), "PT"), (contingency_table{579, 2415, 489, 7307}));
}

TEST(Reconstruct, SmallestBalancedCaseRoundTrips) {
    const auto spec = single_feature_spec(1.0, 0.5, 0.5, 4);
    const auto d = reconstruct(spec, 17);
    EXPECT_EQ(contingency_table_of(d, "PT"), (contingency_table{1, 1, 1, 1}));
    const auto back = summarize(d);
    EXPECT_DOUBLE_EQ(back.class_fraction.value(), 0.5);
    EXPECT_DOUBLE_EQ(std::get<binary_aggregate>(back.features[0]).odds_ratio.value(), 1.0);
    EXPECT_DOUBLE_EQ(std::get<binary_aggregate>(back.features[0]).occurrence_fraction.value(), 0.5);
}

TEST(Reconstruct, FirstConfigHasThousandDeadAndSolverCells) {
    const auto cfg = builtin_config(1);
    const auto spec = to_aggregate_spec(cfg);
    const auto r = reconstruct_detailed(spec, 5);
    EXPECT_EQ(r.data.count_outcome(positive_value), 1000u);
    const auto& s = spec.columns;
    for (std::size_t j = 0; j < s.feature_count(); ++j) {
        if (!s.feature(j).is_binary()) continue;
        const auto& b = std::get<binary_aggregate>(spec.features[j]);
        const auto expect = solve_cells(b.odds_ratio.value(), 0.1, b.occurrence_fraction.value(), 10000);
        EXPECT_EQ(contingency_table_of(r.data, s.feature(j).name), expect.cells);
        EXPECT_EQ(r.cells[j]->cells, expect.cells);
    }
}

TEST(Reconstruct, MarginsExactOnRandomSpecs) {
    random_engine rng(77);
    for (int i = 0; i < 150; ++i) {
        aggregate_spec spec;
        spec.columns = binary_schema({"a", "b", "c"});
        spec.n = 100 + rng.uniform_index(3000);
        const double r1 = rng.uniform(0.05, 0.5);
        spec.class_fraction = r1;
        std::vector<double> fs;
        for (int k = 0; k < 3; ++k) {
            fs.push_back(rng.uniform(0.05, 0.5));
            spec.features.emplace_back(binary_aggregate{rng.uniform(1.0, 10.0), fs.back()});
        }
        const auto d = reconstruct(spec, rng.next());
        const double n = static_cast<double>(spec.n);
        ASSERT_EQ(d.count_outcome(positive_value), static_cast<std::size_t>(std::llround(r1 * n)));
        for (int k = 0; k < 3; ++k) {
            const auto t = contingency_table_of(d, spec.columns.feature(k).name);
            EXPECT_EQ(t.l1 + t.l2, std::llround(fs[k] * n));
            EXPECT_EQ(t.l1 + t.l3, std::llround(r1 * n));
        }
    }
}

TEST(Reconstruct, DeterministicPerSeed) {
    const auto spec = to_aggregate_spec(builtin_config(3));
    EXPECT_EQ(reconstruct(spec, 4), reconstruct(spec, 4));
    EXPECT_FALSE(reconstruct(spec, 4) == reconstruct(spec, 5));
    EXPECT_EQ(reconstruct(spec, 4).seed(), std::optional<std::uint64_t>(4));
}

TEST(Reconstruct, AgeIsTruncatedNormalInWholeYears) {
    const auto d = reconstruct(to_aggregate_spec(builtin_config(1)), 8);
    const auto age = d.continuous(4);
    double sum = 0.0;
    for (double v : age) {
        ASSERT_GE(v, 0.0);
        ASSERT_EQ(v, std::round(v));
        sum += v;
    }
    // Mean of normal(36, 19) truncated below at 0: mu + sigma * phi(alpha) / (1 - Phi(alpha)).
    const double alpha = -36.0 / 19.0;
    const double phi = std::exp(-0.5 * alpha * alpha) / std::sqrt(2.0 * M_PI);
    const double tail = 0.5 * std::erfc(alpha / std::sqrt(2.0));
    EXPECT_NEAR(sum / static_cast<double>(age.size()), 36.0 + 19.0 * phi / tail, 0.6);
}

TEST(Reconstruct, RangesAreDrawnPerSeed) {
    aggregate_spec spec = single_feature_spec(2.0, 0.3, 0.4, 5000);
    spec.features = {binary_aggregate{parameter::range(2.0, 8.0), parameter::range(0.2, 0.4)}};
    spec.class_fraction = parameter::range(0.1, 0.3);
    const auto a = reconstruct_detailed(spec, 1);
    const auto b = reconstruct_detailed(spec, 2);
    const auto& ra = std::get<binary_aggregate>(a.resolved.features[0]);
    EXPECT_FALSE(a.resolved.has_ranges());
    EXPECT_GE(ra.odds_ratio.value(), 2.0);
    EXPECT_LE(ra.odds_ratio.value(), 8.0);
    EXPECT_NE(a.resolved.class_fraction.value(), b.resolved.class_fraction.value());
    EXPECT_NEAR(odds_ratio(contingency_table_of(a.data, "PT")), ra.odds_ratio.value(), 0.1 * ra.odds_ratio.value());
}

TEST(Reconstruct, InfeasibleFeatureIsNamed) {
    const auto spec = single_feature_spec(2.0, 0.5, 0.01, 10);
    try {
        reconstruct(spec, 1);
        FAIL();
    } catch (const infeasible_spec_error& e) {
        EXPECT_NE(std::string(e.what()).find("'PT'"), std::string::npos);
    }
}

TEST(Candidates, SeedsFollowStride) {
    EXPECT_EQ(candidate_seed(10, 0), 10u);
    EXPECT_EQ(candidate_seed(10, 3), 10u + 3 * candidate_seed_stride);
}

TEST(Candidates, SingleCandidateNeedsOneAttempt) {
    candidate_options opt;
    opt.n_candidates = 1;
    const auto set = generate_candidates(single_feature_spec(2.0, 0.3, 0.3, 200), opt);
    EXPECT_EQ(set.candidates.size(), 1u);
    EXPECT_EQ(set.attempts_used, 1u);
}

TEST(Candidates, PairwiseSeparationHolds) {
    auto cfg = builtin_config(4);
    cfg.n = 2000;
    candidate_options opt;
    opt.n_candidates = 5;
    opt.delta = 0.15;
    opt.base_seed = 3;
    const auto set = generate_candidates(to_aggregate_spec(cfg), opt);
    ASSERT_EQ(set.candidates.size(), 5u);
    for (std::size_t a = 0; a < 5; ++a)
        for (std::size_t b = a + 1; b < 5; ++b)
            EXPECT_GE(candidate_distance(set.candidates[a].result.data, set.candidates[b].result.data,
                                         set.distance_attributes),
                      0.15);
}

TEST(Candidates, IndependentOfWorkerCount) {
    auto cfg = builtin_config(2);
    cfg.n = 1500;
    candidate_options opt;
    opt.n_candidates = 4;
    opt.delta = 0.2;
    opt.base_seed = 11;
    opt.workers = 1;
    const auto one = generate_candidates(to_aggregate_spec(cfg), opt);
    opt.workers = 5;
    const auto many = generate_candidates(to_aggregate_spec(cfg), opt);
    ASSERT_EQ(one.candidates.size(), many.candidates.size());
    EXPECT_EQ(one.attempts_used, many.attempts_used);
    for (std::size_t k = 0; k < one.candidates.size(); ++k) {
        EXPECT_EQ(one.candidates[k].seed, many.candidates[k].seed);
        EXPECT_EQ(one.candidates[k].result.data, many.candidates[k].result.data);
    }
}

namespace {

// Rank-sum greedy matching written out directly: sort rows by the sum of
// their values (row index breaks ties) and pair equal ranks.
double greedy_distance_oracle(const std::vector<std::array<int, 2>>& a, const std::vector<std::array<int, 2>>& b) {
    auto order = [](const std::vector<std::array<int, 2>>& rows) {
        std::vector<std::size_t> idx(rows.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t x, std::size_t y) { return rows[x][0] + rows[x][1] < rows[y][0] + rows[y][1]; });
        return idx;
    };
    const auto oa = order(a), ob = order(b);
    double total = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        total += (std::abs(a[oa[k]][0] - b[ob[k]][0]) + std::abs(a[oa[k]][1] - b[ob[k]][1])) / 2.0;
    return total / static_cast<double>(a.size());
}

} // namespace

TEST(Candidates, UnreachableDeltaExhaustsBudget) {
    // n = 4, balanced, odds ratio 1: every valid dataset is an ordering of the
    // four distinct (feature, outcome) rows. Enumerate all pairs of orderings.
    std::vector<std::array<int, 2>> base = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    std::vector<std::vector<std::array<int, 2>>> all;
    std::sort(base.begin(), base.end());
    do all.push_back(base);
    while (std::next_permutation(base.begin(), base.end()));
    double max_distance = 0.0;
    for (const auto& x : all)
        for (const auto& y : all) max_distance = std::max(max_distance, greedy_distance_oracle(x, y));
    ASSERT_LT(max_distance, 0.99);

    const auto spec = single_feature_spec(1.0, 0.5, 0.5, 4);
    for (std::uint64_t seed = 0; seed < 20; ++seed)
        ASSERT_EQ(contingency_table_of(reconstruct(spec, seed), "PT"), (contingency_table{1, 1, 1, 1}));

    candidate_options opt;
    opt.n_candidates = 2;
    opt.delta = 0.99;
    opt.max_attempts = 40;
    try {
        generate_candidates(spec, opt);
        FAIL() << "expected exhaustion";
    } catch (const partial_candidate_set_error& e) {
        EXPECT_EQ(e.partial().candidates.size(), 1u);
        EXPECT_EQ(e.partial().attempts_used, 40u);
    }
}

TEST(Candidates, RejectsBadOptions) {
    const auto spec = single_feature_spec(2.0, 0.3, 0.3, 100);
    candidate_options opt;
    opt.n_candidates = 0;
    EXPECT_THROW(generate_candidates(spec, opt), invalid_argument_error);
    opt.n_candidates = 1;
    opt.delta = 1.0;
    EXPECT_THROW(generate_candidates(spec, opt), invalid_argument_error);
}
