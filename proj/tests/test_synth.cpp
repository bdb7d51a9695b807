#include <gtest/gtest.h>

#include <sstream>

#include "test_support.hpp"

using namespace aggrecon;

TEST(Configs, TenBuiltins) { EXPECT_EQ(builtin_configs().size(), 10u); }

TEST(Configs, FirstRow) {
    const auto c = builtin_config(1);
    EXPECT_EQ((std::vector<double>{c.gender_or, c.gender_fraction, c.pt_or, c.pt_fraction, c.ptt_or, c.ptt_fraction,
                                   c.plate_or, c.plate_fraction, c.doa_fraction}),
              (std::vector<double>{2, 0.6, 4, 0.3, 6, 0.2, 8, 0.1, 0.1}));
    EXPECT_EQ(c.n, 10000u);
}

TEST(Configs, LastRow) {
    const auto c = builtin_config(10);
    EXPECT_EQ((std::vector<double>{c.gender_or, c.gender_fraction, c.pt_or, c.pt_fraction, c.ptt_or, c.ptt_fraction,
                                   c.plate_or, c.plate_fraction, c.doa_fraction}),
              (std::vector<double>{10, 0.5, 6, 0.4, 10, 0.3, 10, 0.3, 0.49}));
}

TEST(Configs, IndexOutOfRange) {
    EXPECT_THROW(builtin_config(0), invalid_argument_error);
    EXPECT_THROW(builtin_config(11), invalid_argument_error);
}

TEST(Configs, ParameterAccess) {
    auto c = with_parameter(builtin_config(1), "pt_or", 9.0);
    EXPECT_DOUBLE_EQ(c.pt_or, 9.0);
    EXPECT_THROW(with_parameter(c, "bogus", 1.0), invalid_argument_error);
    EXPECT_THROW(validate_config(with_parameter(c, "doa_fraction", 1.0)), invalid_argument_error);
    EXPECT_THROW(validate_config(with_parameter(c, "ptt_or", 0.0)), invalid_argument_error);
}

TEST(GroundTruth, FirstConfigHasThousandDead) {
    const auto d = generate_ground_truth(builtin_config(1));
    EXPECT_EQ(d.n_rows(), 10000u);
    EXPECT_EQ(d.count_outcome(positive_value), 1000u);
    EXPECT_TRUE(validate(d).ok());
}

TEST(GroundTruth, SummaryOddsRatiosWithinTwoPercent) {
    for (const auto& c : builtin_configs()) {
        const auto spec = summarize(generate_ground_truth(c));
        const std::vector<double> target = {c.gender_or, c.pt_or, c.ptt_or, c.plate_or};
        for (std::size_t j = 0; j < 4; ++j) {
            const double got = std::get<binary_aggregate>(spec.features[j]).odds_ratio.value();
            EXPECT_NEAR(got / target[j], 1.0, 0.02) << c.name << " feature " << j;
        }
        EXPECT_NEAR(spec.class_fraction.value(), c.doa_fraction, 1e-12);
    }
}

TEST(GroundTruth, SameConfigSameBytes) {
    std::ostringstream a, b;
    write_csv(a, generate_ground_truth(builtin_config(2)));
    write_csv(b, generate_ground_truth(builtin_config(2)));
    EXPECT_EQ(a.str(), b.str());
}

TEST(GroundTruth, SchemaLabels) {
    const auto s = atc_schema();
    EXPECT_EQ(s.feature_count(), 5u);
    EXPECT_EQ(s.feature(0).positive_label, "male");
    EXPECT_EQ(s.outcome().positive_label, "dead");
    EXPECT_FALSE(s.feature(4).is_binary());
    EXPECT_TRUE(s.feature(4).integral);
}
