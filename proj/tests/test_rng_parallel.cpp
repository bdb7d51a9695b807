#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include <aggrecon/parallel.hpp>
#include <aggrecon/rng.hpp>

using namespace aggrecon;

TEST(Rng, EngineMatchesStandardTenThousandthValue) {
    // The standard pins the 10000th output of mt19937_64 seeded with 5489.
    random_engine rng(5489);
    for (int i = 0; i < 9999; ++i) rng.next();
    EXPECT_EQ(rng.next(), 9981545732273789042ULL);
}

TEST(Rng, SameSeedSameStream) {
    random_engine a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(a.uniform_index(17), b.uniform_index(17));
        EXPECT_EQ(a.normal(), b.normal());
    }
}

TEST(Rng, UniformIndexStaysInBoundsAndIsRoughlyFlat) {
    random_engine rng(7);
    constexpr int bins = 10, draws = 100'000;
    std::vector<int> counts(bins);
    for (int i = 0; i < draws; ++i) {
        const auto v = rng.uniform_index(bins);
        ASSERT_LT(v, static_cast<std::uint64_t>(bins));
        ++counts[v];
    }
    double chi2 = 0.0;
    for (int c : counts) chi2 += std::pow(c - draws / bins, 2) / (draws / bins);
    EXPECT_LT(chi2, 27.9); // 99.9th percentile of chi-square with 9 dof
    EXPECT_EQ(rng.uniform_index(0), 0u);
    EXPECT_EQ(rng.uniform_index(1), 0u);
}

TEST(Rng, Uniform01HalfOpen) {
    random_engine rng(3);
    for (int i = 0; i < 10'000; ++i) {
        const double u = rng.uniform01();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Rng, NormalMoments) {
    random_engine rng(11);
    constexpr int n = 200'000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = rng.normal(36.0, 19.0);
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    EXPECT_NEAR(mean, 36.0, 0.2);
    EXPECT_NEAR(sd, 19.0, 0.2);
}

TEST(Rng, PartialShuffleIsPermutation) {
    random_engine rng(5);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    rng.partial_shuffle(std::span(v), 20);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> expect(50);
    std::iota(expect.begin(), expect.end(), 0);
    EXPECT_EQ(sorted, expect);
    rng.partial_shuffle(std::span(v), 500); // k beyond size clamps
}

TEST(Rng, PartialShuffleSubsetIsUniform) {
    // Each of 5 items should land in a 2-subset with probability 2/5.
    random_engine rng(9);
    std::vector<int> hits(5);
    constexpr int trials = 50'000;
    for (int t = 0; t < trials; ++t) {
        std::vector<int> v = {0, 1, 2, 3, 4};
        rng.partial_shuffle(std::span(v), 2);
        ++hits[v[0]];
        ++hits[v[1]];
    }
    for (int h : hits) EXPECT_NEAR(static_cast<double>(h) / trials, 0.4, 0.01);
}

TEST(Rng, DerivedSeedsDistinct) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t base : {0ULL, 1ULL, 2ULL})
        for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(base, i));
    EXPECT_EQ(seen.size(), 3000u);
    EXPECT_EQ(derive_seed(4, 9), derive_seed(4, 9));
}

TEST(Parallel, VisitsEveryIndexOnce) {
    for (std::size_t workers : {1u, 2u, 8u, 64u}) {
        std::vector<std::atomic<int>> seen(1000);
        parallel_for(seen.size(), workers, [&](std::size_t i) { seen[i].fetch_add(1); });
        for (const auto& s : seen) ASSERT_EQ(s.load(), 1);
    }
    parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(Parallel, ResultIndependentOfWorkerCount) {
    auto run = [](std::size_t workers) {
        std::vector<std::uint64_t> out(257);
        parallel_for(out.size(), workers, [&](std::size_t i) {
            random_engine rng(derive_seed(1, i));
            out[i] = rng.next();
        });
        return out;
    };
    EXPECT_EQ(run(1), run(3));
    EXPECT_EQ(run(1), run(16));
}

TEST(Parallel, RethrowsLowestFailingIndex) {
    for (std::size_t workers : {1u, 4u}) {
        try {
            parallel_for(100, workers, [](std::size_t i) {
                if (i == 37 || i == 80) throw std::runtime_error("item " + std::to_string(i));
            });
            FAIL() << "no exception";
        } catch (const std::runtime_error& e) {
            EXPECT_STREQ(e.what(), "item 37");
        }
    }
}

TEST(Parallel, WorkerCountFromEnvironment) {
    ::setenv("AGGRECON_WORKERS", "3", 1);
    EXPECT_EQ(default_workers(), 3u);
    ::setenv("AGGRECON_WORKERS", "bogus", 1);
    EXPECT_GE(default_workers(), 1u);
    ::unsetenv("AGGRECON_WORKERS");
    EXPECT_GE(default_workers(), 1u);
}
