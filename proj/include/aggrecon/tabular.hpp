#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace aggrecon {

enum class feature_kind { binary, continuous };

// Binary encoding: 0 is the positive level (abnormal / dead / male), 1 the negative.
inline constexpr std::uint8_t positive_value = 0;
inline constexpr std::uint8_t negative_value = 1;

struct feature_spec {
    std::string name;
    feature_kind kind = feature_kind::binary;
    std::string positive_label = "abnormal"; // rendered for encoded 0
    std::string negative_label = "normal";   // rendered for encoded 1
    std::optional<std::string> unit;
    bool integral = false; // continuous only: values are whole numbers

    static feature_spec binary(std::string name, std::string positive = "abnormal",
                               std::string negative = "normal") {
        return {std::move(name), feature_kind::binary, std::move(positive), std::move(negative), {}, false};
    }

    static feature_spec continuous(std::string name, std::optional<std::string> unit = {},
                                   bool integral = false) {
        return {std::move(name), feature_kind::continuous, {}, {}, std::move(unit), integral};
    }

    [[nodiscard]] bool is_binary() const noexcept { return kind == feature_kind::binary; }

    bool operator==(const feature_spec&) const = default;
};

// Ordered predictor features plus a binary outcome. In attribute indexing the
// outcome comes last, at index feature_count().
class schema {
public:
    schema() = default;

    schema(std::vector<feature_spec> features, feature_spec outcome)
        : features_(std::move(features)), outcome_(std::move(outcome)) {
        if (!outcome_.is_binary())
            throw schema_error("outcome '" + outcome_.name + "' must be binary");
        std::unordered_set<std::string> seen;
        for (const auto& f : features_) {
            if (f.name.empty()) throw schema_error("feature with empty name");
            if (!seen.insert(f.name).second) throw schema_error("duplicate feature name '" + f.name + "'");
        }
        if (seen.contains(outcome_.name))
            throw schema_error("outcome '" + outcome_.name + "' duplicated among features");
    }

    [[nodiscard]] const std::vector<feature_spec>& features() const noexcept { return features_; }
    [[nodiscard]] const feature_spec& feature(std::size_t j) const { return features_.at(j); }
    [[nodiscard]] const feature_spec& outcome() const noexcept { return outcome_; }
    [[nodiscard]] std::size_t feature_count() const noexcept { return features_.size(); }
    [[nodiscard]] std::size_t attribute_count() const noexcept { return features_.size() + 1; }

    [[nodiscard]] const feature_spec& attribute(std::size_t a) const {
        return a == features_.size() ? outcome_ : features_.at(a);
    }

    [[nodiscard]] std::optional<std::size_t> find_feature(std::string_view name) const {
        for (std::size_t j = 0; j < features_.size(); ++j)
            if (features_[j].name == name) return j;
        return std::nullopt;
    }

    [[nodiscard]] std::size_t feature_index(std::string_view name) const {
        if (auto j = find_feature(name)) return *j;
        throw schema_error("unknown feature '" + std::string(name) + "'");
    }

    // Feature or outcome name -> attribute index.
    [[nodiscard]] std::size_t attribute_index(std::string_view name) const {
        if (name == outcome_.name) return features_.size();
        if (auto j = find_feature(name)) return *j;
        throw schema_error("unknown attribute '" + std::string(name) + "'");
    }

    [[nodiscard]] std::vector<std::string> attribute_names() const {
        std::vector<std::string> names;
        for (const auto& f : features_) names.push_back(f.name);
        names.push_back(outcome_.name);
        return names;
    }

    // Binary features followed by the outcome.
    [[nodiscard]] std::vector<std::string> binary_attribute_names() const {
        std::vector<std::string> names;
        for (const auto& f : features_)
            if (f.is_binary()) names.push_back(f.name);
        names.push_back(outcome_.name);
        return names;
    }

    bool operator==(const schema&) const = default;

private:
    std::vector<feature_spec> features_;
    feature_spec outcome_ = feature_spec::binary("outcome", "dead", "alive");
};

using binary_column = std::vector<std::uint8_t>;
using continuous_column = std::vector<double>;
using column = std::variant<binary_column, continuous_column>;

// Immutable columnar table. The constructor checks structure (column count and
// kinds against the schema); value-level invariants are reported by validate().
class dataset {
public:
    dataset() = default;

    dataset(schema s, std::vector<column> columns, binary_column outcome,
            std::optional<std::uint64_t> seed = std::nullopt)
        : schema_(std::move(s)), columns_(std::move(columns)), outcome_(std::move(outcome)), seed_(seed) {
        if (columns_.size() != schema_.feature_count())
            throw schema_error("dataset has " + std::to_string(columns_.size()) + " columns, schema declares " +
                               std::to_string(schema_.feature_count()));
        for (std::size_t j = 0; j < columns_.size(); ++j) {
            const bool is_binary = std::holds_alternative<binary_column>(columns_[j]);
            if (is_binary != schema_.feature(j).is_binary())
                throw schema_error("column '" + schema_.feature(j).name + "' storage does not match its kind");
        }
    }

    [[nodiscard]] const schema& get_schema() const noexcept { return schema_; }
    [[nodiscard]] std::size_t n_rows() const noexcept { return outcome_.size(); }
    [[nodiscard]] std::optional<std::uint64_t> seed() const noexcept { return seed_; }

    [[nodiscard]] const column& feature_column(std::size_t j) const { return columns_.at(j); }

    [[nodiscard]] std::span<const std::uint8_t> binary(std::size_t j) const {
        const auto* c = std::get_if<binary_column>(&columns_.at(j));
        if (!c) throw schema_error("feature '" + schema_.feature(j).name + "' is not binary");
        return *c;
    }

    [[nodiscard]] std::span<const double> continuous(std::size_t j) const {
        const auto* c = std::get_if<continuous_column>(&columns_.at(j));
        if (!c) throw schema_error("feature '" + schema_.feature(j).name + "' is not continuous");
        return *c;
    }

    [[nodiscard]] std::span<const std::uint8_t> outcome() const noexcept { return outcome_; }

    // Attribute index as in schema::attribute_index.
    [[nodiscard]] double value(std::size_t row, std::size_t attribute) const {
        if (attribute == columns_.size()) return outcome_[row];
        return std::visit([row](const auto& c) { return static_cast<double>(c[row]); }, columns_[attribute]);
    }

    [[nodiscard]] std::size_t count_outcome(std::uint8_t cls) const {
        return static_cast<std::size_t>(std::count(outcome_.begin(), outcome_.end(), cls));
    }

    // New dataset holding the given rows in the given order.
    [[nodiscard]] dataset select_rows(std::span<const std::size_t> rows) const {
        std::vector<column> cols;
        cols.reserve(columns_.size());
        for (const auto& c : columns_) {
            cols.push_back(std::visit(
                [&](const auto& src) -> column {
                    std::decay_t<decltype(src)> out;
                    out.reserve(rows.size());
                    for (auto r : rows) out.push_back(src.at(r));
                    return out;
                },
                c));
        }
        binary_column y;
        y.reserve(rows.size());
        for (auto r : rows) y.push_back(outcome_.at(r));
        return {schema_, std::move(cols), std::move(y), seed_};
    }

    // Compares contents; the generating seed is metadata.
    bool operator==(const dataset& o) const {
        return schema_ == o.schema_ && columns_ == o.columns_ && outcome_ == o.outcome_;
    }

private:
    schema schema_;
    std::vector<column> columns_;
    binary_column outcome_;
    std::optional<std::uint64_t> seed_;
};

struct violation {
    std::string column;
    std::optional<std::size_t> row;
    std::string message;
};

struct validation_result {
    std::vector<violation> violations;

    [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
};

inline validation_result validate(const dataset& data) {
    validation_result result;
    const auto& s = data.get_schema();
    const std::size_t n = data.n_rows();

    auto check_binary = [&](std::span<const std::uint8_t> values, const std::string& name) {
        for (std::size_t r = 0; r < values.size(); ++r)
            if (values[r] > 1)
                result.violations.push_back(
                    {name, r, "binary value " + std::to_string(values[r]) + " outside {0,1}"});
    };

    for (std::size_t j = 0; j < s.feature_count(); ++j) {
        const auto& name = s.feature(j).name;
        const std::size_t len = std::visit([](const auto& c) { return c.size(); }, data.feature_column(j));
        if (len != n)
            result.violations.push_back(
                {name, std::nullopt, "length " + std::to_string(len) + " != n_rows " + std::to_string(n)});
        if (s.feature(j).is_binary()) {
            check_binary(data.binary(j), name);
        } else {
            const auto values = data.continuous(j);
            for (std::size_t r = 0; r < values.size(); ++r)
                if (!std::isfinite(values[r])) result.violations.push_back({name, r, "non-finite value"});
        }
    }
    check_binary(data.outcome(), s.outcome().name);
    return result;
}

// Resolves attribute names (features or outcome); nullopt selects every attribute.
inline std::vector<std::size_t> resolve_attributes(const schema& s,
                                                   const std::optional<std::vector<std::string>>& subset) {
    std::vector<std::size_t> idx;
    if (!subset) {
        for (std::size_t a = 0; a < s.attribute_count(); ++a) idx.push_back(a);
        return idx;
    }
    for (const auto& name : *subset) idx.push_back(s.attribute_index(name));
    return idx;
}

// Row-major matrix of normalized attribute values.
struct normalized_matrix {
    std::vector<std::string> attributes;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    [[nodiscard]] std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
    [[nodiscard]] double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

// Min-max scaling with min/max taken over all given datasets together.
// A constant attribute maps to 0.
inline std::vector<normalized_matrix> min_max_normalize_jointly(std::span<const dataset* const> tables,
                                                                const std::vector<std::size_t>& attributes) {
    std::vector<normalized_matrix> out;
    if (tables.empty()) return out;
    const auto& s = tables.front()->get_schema();
    for (const auto* t : tables)
        if (!(t->get_schema() == s)) throw schema_error("datasets have different schemas");

    const std::size_t cols = attributes.size();
    std::vector<double> lo(cols, std::numeric_limits<double>::infinity());
    std::vector<double> hi(cols, -std::numeric_limits<double>::infinity());
    for (const auto* t : tables)
        for (std::size_t c = 0; c < cols; ++c)
            for (std::size_t r = 0; r < t->n_rows(); ++r) {
                const double v = t->value(r, attributes[c]);
                lo[c] = std::min(lo[c], v);
                hi[c] = std::max(hi[c], v);
            }

    std::vector<std::string> names;
    for (auto a : attributes) names.push_back(s.attribute(a).name);

    for (const auto* t : tables) {
        normalized_matrix m{names, t->n_rows(), cols, std::vector<double>(t->n_rows() * cols)};
        for (std::size_t r = 0; r < t->n_rows(); ++r)
            for (std::size_t c = 0; c < cols; ++c) {
                const double span = hi[c] - lo[c];
                m.values[r * cols + c] = span > 0.0 ? (t->value(r, attributes[c]) - lo[c]) / span : 0.0;
            }
        out.push_back(std::move(m));
    }
    return out;
}

inline normalized_matrix min_max_normalize(const dataset& data,
                                           const std::optional<std::vector<std::string>>& feature_subset = {}) {
    if (data.n_rows() == 0) throw invalid_argument_error("min_max_normalize: dataset has no rows");
    const auto attributes = resolve_attributes(data.get_schema(), feature_subset);
    const dataset* tables[] = {&data};
    return std::move(min_max_normalize_jointly(tables, attributes).front());
}

// Keeps every row outside `majority_class` and floor(rate * count) uniformly
// chosen rows of it, preserving the original row order.
inline dataset undersample(const dataset& data, std::uint8_t majority_class, double rate, std::uint64_t seed) {
    if (!(rate > 0.0 && rate <= 1.0))
        throw invalid_argument_error("undersample: rate " + std::to_string(rate) + " outside (0,1]");
    const auto y = data.outcome();
    std::vector<std::size_t> majority;
    for (std::size_t r = 0; r < y.size(); ++r)
        if (y[r] == majority_class) majority.push_back(r);
    if (majority.empty()) throw invalid_argument_error("undersample: majority class not present");

    // The epsilon absorbs representation error such as 0.3 * 90 = 26.999...
    const auto keep = static_cast<std::size_t>(std::floor(rate * static_cast<double>(majority.size()) + 1e-9));
    std::vector<std::uint8_t> selected(y.size(), 1);
    if (keep < majority.size()) {
        random_engine rng(seed);
        rng.partial_shuffle(std::span(majority), keep);
        for (std::size_t i = keep; i < majority.size(); ++i) selected[majority[i]] = 0;
    }
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < y.size(); ++r)
        if (selected[r]) rows.push_back(r);
    return data.select_rows(rows);
}

} // namespace aggrecon
