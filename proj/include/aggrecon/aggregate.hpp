#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "error.hpp"
#include "rng.hpp"
#include "tabular.hpp"

namespace aggrecon {

// 2x2 table of one binary feature against the outcome.
//               outcome=c1 (0)   outcome=c2 (1)
//  feature = 0        l1               l2
//  feature = 1        l3               l4
struct contingency_table {
    std::int64_t l1 = 0;
    std::int64_t l2 = 0;
    std::int64_t l3 = 0;
    std::int64_t l4 = 0;

    [[nodiscard]] std::int64_t total() const noexcept { return l1 + l2 + l3 + l4; }
    bool operator==(const contingency_table&) const = default;
};

inline std::string to_string(const contingency_table& t) {
    return "(" + std::to_string(t.l1) + ", " + std::to_string(t.l2) + ", " + std::to_string(t.l3) + ", " +
           std::to_string(t.l4) + ")";
}

class undefined_odds_ratio : public error {
public:
    explicit undefined_odds_ratio(const contingency_table& t, const std::string& feature = {})
        : error("odds ratio undefined for table " + to_string(t) + (feature.empty() ? "" : " of '" + feature + "'") +
                ": l2*l3 == 0"),
          table_(t) {}

    [[nodiscard]] const contingency_table& table() const noexcept { return table_; }

private:
    contingency_table table_;
};

class invalid_spec_error : public error {
public:
    using error::error;
};

inline contingency_table contingency_table_of(const dataset& data, std::string_view feature) {
    const auto& s = data.get_schema();
    const auto j = s.feature_index(feature);
    if (!s.feature(j).is_binary()) throw schema_error("feature '" + std::string(feature) + "' is not binary");
    const auto x = data.binary(j);
    const auto y = data.outcome();
    contingency_table t;
    for (std::size_t r = 0; r < x.size(); ++r) {
        const bool pos_x = x[r] == positive_value;
        const bool pos_y = y[r] == positive_value;
        if (pos_x)
            (pos_y ? t.l1 : t.l2) += 1;
        else
            (pos_y ? t.l3 : t.l4) += 1;
    }
    return t;
}

inline double odds_ratio(const contingency_table& t) {
    if (t.l2 == 0 || t.l3 == 0) throw undefined_odds_ratio(t);
    return (static_cast<double>(t.l1) * static_cast<double>(t.l4)) /
           (static_cast<double>(t.l2) * static_cast<double>(t.l3));
}

// A scalar input, or a closed range [lo, hi] from which each reconstruction
// draws its own value.
class parameter {
public:
    parameter() = default;
    parameter(double v) : lo_(v), hi_(v) {} // NOLINT(google-explicit-constructor)
    static parameter range(double lo, double hi) {
        if (!(lo <= hi)) throw invalid_spec_error("range lower bound exceeds upper bound");
        parameter p;
        p.lo_ = lo;
        p.hi_ = hi;
        p.is_range_ = true;
        return p;
    }

    [[nodiscard]] bool is_range() const noexcept { return is_range_; }
    [[nodiscard]] double lo() const noexcept { return lo_; }
    [[nodiscard]] double hi() const noexcept { return hi_; }

    [[nodiscard]] double value() const {
        if (is_range_) throw invalid_spec_error("parameter is a range; resolve it first");
        return lo_;
    }

    double resolve(random_engine& rng) const { return is_range_ ? rng.uniform(lo_, hi_) : lo_; }

    bool operator==(const parameter&) const = default;

private:
    double lo_ = 0.0;
    double hi_ = 0.0;
    bool is_range_ = false;
};

struct binary_aggregate {
    parameter odds_ratio;
    parameter occurrence_fraction; // rows with the feature at its positive level, over N
    bool operator==(const binary_aggregate&) const = default;
};

struct continuous_aggregate {
    double mean = 0.0;
    double stddev = 0.0;
    bool operator==(const continuous_aggregate&) const = default;
};

using feature_aggregate = std::variant<binary_aggregate, continuous_aggregate>;

// Everything reconstruction is allowed to see: N, the outcome class fraction,
// and one aggregate entry per schema feature (same order).
struct aggregate_spec {
    schema columns;
    std::size_t n = 0;
    parameter class_fraction; // fraction of rows with outcome c1 (encoded 0)
    std::vector<feature_aggregate> features;

    [[nodiscard]] bool has_ranges() const {
        if (class_fraction.is_range()) return true;
        for (const auto& f : features)
            if (const auto* b = std::get_if<binary_aggregate>(&f))
                if (b->odds_ratio.is_range() || b->occurrence_fraction.is_range()) return true;
        return false;
    }

    bool operator==(const aggregate_spec&) const = default;
};

inline void validate_spec(const aggregate_spec& spec) {
    auto in_open_unit = [](const parameter& p) { return p.lo() > 0.0 && p.hi() < 1.0; };
    if (spec.n < 1) throw invalid_spec_error("spec: n must be >= 1");
    if (!in_open_unit(spec.class_fraction)) throw invalid_spec_error("spec: class_fraction must lie in (0,1)");
    if (spec.features.size() != spec.columns.feature_count())
        throw invalid_spec_error("spec: feature aggregates do not match the schema");
    for (std::size_t j = 0; j < spec.features.size(); ++j) {
        const auto& fs = spec.columns.feature(j);
        if (const auto* b = std::get_if<binary_aggregate>(&spec.features[j])) {
            if (!fs.is_binary()) throw invalid_spec_error("spec: '" + fs.name + "' has binary aggregates");
            if (!(b->odds_ratio.lo() > 0.0) || !std::isfinite(b->odds_ratio.hi()))
                throw invalid_spec_error("spec: odds ratio of '" + fs.name + "' must be positive");
            if (!in_open_unit(b->occurrence_fraction))
                throw invalid_spec_error("spec: occurrence fraction of '" + fs.name + "' must lie in (0,1)");
        } else {
            const auto& c = std::get<continuous_aggregate>(spec.features[j]);
            if (fs.is_binary()) throw invalid_spec_error("spec: '" + fs.name + "' has continuous aggregates");
            if (!std::isfinite(c.mean) || !(c.stddev >= 0.0) || !std::isfinite(c.stddev))
                throw invalid_spec_error("spec: moments of '" + fs.name + "' must be finite, stddev >= 0");
        }
    }
}

inline double class_fraction_of(const dataset& data) {
    if (data.n_rows() == 0) throw invalid_argument_error("class fraction of an empty dataset");
    return static_cast<double>(data.count_outcome(positive_value)) / static_cast<double>(data.n_rows());
}

inline double occurrence_fraction_of(const dataset& data, std::string_view feature) {
    if (data.n_rows() == 0) throw invalid_argument_error("occurrence fraction of an empty dataset");
    const auto x = data.binary(data.get_schema().feature_index(feature));
    return static_cast<double>(std::count(x.begin(), x.end(), positive_value)) / static_cast<double>(x.size());
}

inline aggregate_spec summarize(const dataset& data) {
    const auto& s = data.get_schema();
    aggregate_spec spec;
    spec.columns = s;
    spec.n = data.n_rows();
    spec.class_fraction = class_fraction_of(data);
    for (std::size_t j = 0; j < s.feature_count(); ++j) {
        const auto& fs = s.feature(j);
        if (fs.is_binary()) {
            const auto t = contingency_table_of(data, fs.name);
            if (t.l2 == 0 || t.l3 == 0) throw undefined_odds_ratio(t, fs.name);
            spec.features.emplace_back(binary_aggregate{odds_ratio(t), occurrence_fraction_of(data, fs.name)});
        } else {
            const auto v = data.continuous(j);
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
            spec.features.emplace_back(continuous_aggregate{mean, sd});
        }
    }
    validate_spec(spec);
    return spec;
}

} // namespace aggrecon
