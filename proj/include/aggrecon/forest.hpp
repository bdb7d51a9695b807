#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "tabular.hpp"

namespace aggrecon {

struct forest_params {
    std::size_t n_trees = 50;
    std::size_t max_depth = 8;
    std::size_t min_samples_split = 2;
    std::size_t features_per_split = 0; // 0 selects ceil(sqrt(feature count))
    bool bootstrap = true;
    std::uint64_t seed = 0;
    std::size_t max_thresholds = 32; // candidate cut points per continuous feature and node
    std::uint8_t tie_class = positive_value;

    bool operator==(const forest_params&) const = default;
};

struct tree_node {
    std::int32_t feature = -1; // -1 marks a leaf
    double threshold = 0.0;    // rows with value <= threshold go left
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::array<std::uint32_t, 2> class_counts{};
    std::uint8_t predicted = positive_value;

    [[nodiscard]] bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const tree_node&) const = default;
};

class decision_tree {
public:
    decision_tree() = default;
    explicit decision_tree(std::vector<tree_node> nodes) : nodes_(std::move(nodes)) {
        if (nodes_.empty()) throw invalid_argument_error("decision tree without nodes");
    }

    [[nodiscard]] const std::vector<tree_node>& nodes() const noexcept { return nodes_; }

    template <typename Row>
    [[nodiscard]] const tree_node& leaf_for(const Row& row) const {
        std::size_t i = 0;
        while (!nodes_[i].is_leaf()) {
            const auto& nd = nodes_[i];
            i = row(static_cast<std::size_t>(nd.feature)) <= nd.threshold ? nd.left : nd.right;
        }
        return nodes_[i];
    }

    [[nodiscard]] std::size_t depth() const { return nodes_.empty() ? 0 : depth_from(0); }

    bool operator==(const decision_tree&) const = default;

private:
    [[nodiscard]] std::size_t depth_from(std::size_t i) const {
        const auto& nd = nodes_[i];
        if (nd.is_leaf()) return 0;
        return 1 + std::max(depth_from(nd.left), depth_from(nd.right));
    }

    std::vector<tree_node> nodes_;
};

namespace detail {

// Feature columns prepared once per training set. Continuous columns also get
// value ranks so node statistics can be histogrammed instead of sorted.
struct training_view {
    std::size_t rows = 0;
    std::vector<std::vector<double>> values;
    std::vector<char> binary;
    std::vector<std::vector<double>> uniques;
    std::vector<std::vector<std::uint32_t>> ranks;
    std::vector<std::uint8_t> labels;

    explicit training_view(const dataset& data) : rows(data.n_rows()) {
        const auto& s = data.get_schema();
        for (std::size_t j = 0; j < s.feature_count(); ++j) {
            std::vector<double> v(rows);
            for (std::size_t r = 0; r < rows; ++r) v[r] = data.value(r, j);
            binary.push_back(s.feature(j).is_binary() ? 1 : 0);
            std::vector<double> u;
            std::vector<std::uint32_t> rk;
            if (!binary.back()) {
                u = v;
                std::sort(u.begin(), u.end());
                u.erase(std::unique(u.begin(), u.end()), u.end());
                rk.resize(rows);
                for (std::size_t r = 0; r < rows; ++r)
                    rk[r] = static_cast<std::uint32_t>(std::lower_bound(u.begin(), u.end(), v[r]) - u.begin());
            }
            values.push_back(std::move(v));
            uniques.push_back(std::move(u));
            ranks.push_back(std::move(rk));
        }
        labels.assign(data.outcome().begin(), data.outcome().end());
    }
};

inline double gini(double c0, double c1) {
    const double n = c0 + c1;
    if (n <= 0.0) return 0.0;
    const double p0 = c0 / n, p1 = c1 / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

inline std::uint8_t majority_class(const std::array<std::uint32_t, 2>& counts, std::uint8_t tie_class) {
    if (counts[0] == counts[1]) return tie_class;
    return counts[0] > counts[1] ? 0 : 1;
}

class tree_builder {
public:
    tree_builder(const training_view& view, const forest_params& params, std::size_t features_per_split,
                 std::uint64_t seed)
        : view_(view), params_(params), features_per_split_(features_per_split), rng_(seed) {
        std::size_t max_unique = 0;
        for (const auto& u : view_.uniques) max_unique = std::max(max_unique, u.size());
        hist_.resize(max_unique);
    }

    decision_tree build() {
        const std::size_t n = view_.rows;
        samples_.resize(n);
        if (params_.bootstrap) {
            for (auto& s : samples_) s = static_cast<std::uint32_t>(rng_.uniform_index(n));
        } else {
            std::iota(samples_.begin(), samples_.end(), 0u);
        }
        feature_order_.resize(view_.values.size());
        grow(0, n, 0);
        return decision_tree(std::move(nodes_));
    }

private:
    struct split {
        std::int32_t feature = -1;
        double threshold = 0.0;
        double gain = 0.0;
    };

    std::uint32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
        std::array<std::uint32_t, 2> counts{};
        for (std::size_t i = begin; i < end; ++i) ++counts[view_.labels[samples_[i]]];

        const auto id = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back();
        nodes_[id].class_counts = counts;
        nodes_[id].predicted = majority_class(counts, params_.tie_class);

        const std::size_t n = end - begin;
        if (depth >= params_.max_depth || n < params_.min_samples_split || counts[0] == 0 || counts[1] == 0)
            return id;

        const split best = find_split(begin, end, counts);
        if (best.feature < 0 || best.gain <= 1e-12) return id;

        const auto& col = view_.values[static_cast<std::size_t>(best.feature)];
        const auto mid = std::stable_partition(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                                               samples_.begin() + static_cast<std::ptrdiff_t>(end),
                                               [&](std::uint32_t r) { return col[r] <= best.threshold; });
        const auto cut = static_cast<std::size_t>(mid - samples_.begin());

        nodes_[id].feature = best.feature;
        nodes_[id].threshold = best.threshold;
        const auto left = grow(begin, cut, depth + 1);
        const auto right = grow(cut, end, depth + 1);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    split find_split(std::size_t begin, std::size_t end, const std::array<std::uint32_t, 2>& counts) {
        const double n = static_cast<double>(end - begin);
        const double parent = gini(counts[0], counts[1]);
        std::iota(feature_order_.begin(), feature_order_.end(), std::size_t{0});
        rng_.shuffle(std::span(feature_order_));

        split best;
        bool found_valid = false;
        for (std::size_t k = 0; k < feature_order_.size(); ++k) {
            // Past the sampled features, keep searching only until one valid split exists.
            if (k >= features_per_split_ && found_valid) break;
            const std::size_t j = feature_order_[k];
            auto consider = [&](double l0, double l1, double threshold) {
                const double nl = l0 + l1;
                const double nr = n - nl;
                if (nl <= 0.0 || nr <= 0.0) return;
                found_valid = true;
                const double r0 = counts[0] - l0, r1 = counts[1] - l1;
                const double gain = parent - (nl * gini(l0, l1) + nr * gini(r0, r1)) / n;
                if (best.feature < 0 || gain > best.gain) best = {static_cast<std::int32_t>(j), threshold, gain};
            };

            if (view_.binary[j]) {
                double l0 = 0, l1 = 0;
                const auto& col = view_.values[j];
                for (std::size_t i = begin; i < end; ++i) {
                    const auto r = samples_[i];
                    if (col[r] <= 0.5) (view_.labels[r] == 0 ? l0 : l1) += 1;
                }
                consider(l0, l1, 0.5);
            } else {
                collect_present(j, begin, end);
                const std::size_t m = present_.size();
                if (m < 2) continue;
                const std::size_t cuts = m - 1;
                const std::size_t t = std::min(cuts, std::max<std::size_t>(1, params_.max_thresholds));
                // prefix counts over present values
                prefix_.resize(m);
                std::array<double, 2> acc{0, 0};
                for (std::size_t i = 0; i < m; ++i) {
                    acc[0] += present_[i].counts[0];
                    acc[1] += present_[i].counts[1];
                    prefix_[i] = acc;
                }
                const auto& u = view_.uniques[j];
                for (std::size_t k2 = 0; k2 < t; ++k2) {
                    const std::size_t pos = cuts == t ? k2 : ((2 * k2 + 1) * cuts) / (2 * t);
                    const double threshold = 0.5 * (u[present_[pos].rank] + u[present_[pos + 1].rank]);
                    consider(prefix_[pos][0], prefix_[pos][1], threshold);
                }
            }
        }
        return best;
    }

    struct present_value {
        std::uint32_t rank;
        std::array<std::uint32_t, 2> counts;
    };

    // Distinct values of feature j among the node's samples, ascending, with class counts.
    void collect_present(std::size_t j, std::size_t begin, std::size_t end) {
        present_.clear();
        const auto& rk = view_.ranks[j];
        const std::size_t uniq = view_.uniques[j].size();
        const std::size_t n = end - begin;
        if (uniq <= 4 * n) {
            std::fill(hist_.begin(), hist_.begin() + static_cast<std::ptrdiff_t>(uniq), std::array<std::uint32_t, 2>{});
            for (std::size_t i = begin; i < end; ++i) {
                const auto r = samples_[i];
                ++hist_[rk[r]][view_.labels[r]];
            }
            for (std::size_t v = 0; v < uniq; ++v)
                if (hist_[v][0] + hist_[v][1] > 0)
                    present_.push_back({static_cast<std::uint32_t>(v), hist_[v]});
        } else {
            sorted_.clear();
            for (std::size_t i = begin; i < end; ++i) {
                const auto r = samples_[i];
                sorted_.push_back((static_cast<std::uint64_t>(rk[r]) << 1) | view_.labels[r]);
            }
            std::sort(sorted_.begin(), sorted_.end());
            for (auto key : sorted_) {
                const auto rank = static_cast<std::uint32_t>(key >> 1);
                if (present_.empty() || present_.back().rank != rank) present_.push_back({rank, {0, 0}});
                ++present_.back().counts[key & 1];
            }
        }
    }

    const training_view& view_;
    const forest_params& params_;
    std::size_t features_per_split_;
    random_engine rng_;
    std::vector<tree_node> nodes_;
    std::vector<std::uint32_t> samples_;
    std::vector<std::size_t> feature_order_;
    std::vector<std::array<std::uint32_t, 2>> hist_;
    std::vector<present_value> present_;
    std::vector<std::array<double, 2>> prefix_;
    std::vector<std::uint64_t> sorted_;
};

inline bool same_features(const schema& a, const schema& b) { return a.features() == b.features(); }

} // namespace detail

class random_forest {
public:
    random_forest() = default;
    random_forest(schema columns, forest_params params, std::vector<decision_tree> trees)
        : schema_(std::move(columns)), params_(params), trees_(std::move(trees)) {
        if (trees_.empty()) throw invalid_argument_error("random forest without trees");
    }

    [[nodiscard]] const schema& get_schema() const noexcept { return schema_; }
    [[nodiscard]] const forest_params& params() const noexcept { return params_; }
    [[nodiscard]] const std::vector<decision_tree>& trees() const noexcept { return trees_; }

    // Number of trees voting for the positive class on one row of feature values.
    [[nodiscard]] std::size_t positive_votes(std::span<const double> row) const {
        std::size_t votes = 0;
        auto at = [&](std::size_t j) { return row[j]; };
        for (const auto& t : trees_)
            if (t.leaf_for(at).predicted == positive_value) ++votes;
        return votes;
    }

    // Hard majority over tree votes; an even split goes to tie_class.
    [[nodiscard]] std::uint8_t predict_row(std::span<const double> row) const {
        const std::size_t pos = positive_votes(row);
        const std::size_t neg = trees_.size() - pos;
        if (pos == neg) return params_.tie_class;
        return pos > neg ? positive_value : negative_value;
    }

    [[nodiscard]] std::vector<std::uint8_t> predict(const dataset& rows) const {
        return map_rows<std::uint8_t>(rows, [&](std::span<const double> r) { return predict_row(r); });
    }

    // Fraction of trees voting positive, per row.
    [[nodiscard]] std::vector<double> predict_score(const dataset& rows) const {
        return map_rows<double>(rows, [&](std::span<const double> r) {
            return static_cast<double>(positive_votes(r)) / static_cast<double>(trees_.size());
        });
    }

    bool operator==(const random_forest&) const = default;

private:
    template <typename T, typename Fn>
    std::vector<T> map_rows(const dataset& rows, Fn fn) const {
        if (!detail::same_features(rows.get_schema(), schema_))
            throw schema_error("prediction rows do not match the model's features");
        const std::size_t f = schema_.feature_count();
        std::vector<double> row(f);
        std::vector<T> out(rows.n_rows());
        for (std::size_t r = 0; r < rows.n_rows(); ++r) {
            for (std::size_t j = 0; j < f; ++j) row[j] = rows.value(r, j);
            out[r] = fn(row);
        }
        return out;
    }

    schema schema_;
    forest_params params_;
    std::vector<decision_tree> trees_;
};

inline std::size_t resolved_features_per_split(const forest_params& p, std::size_t feature_count) {
    if (p.features_per_split > 0) return std::min(p.features_per_split, feature_count);
    return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(feature_count))));
}

// CART trees on bootstrap resamples with Gini splits over a random feature
// subset per node. Tree t uses derive_seed(params.seed, t), so the forest does
// not depend on `workers`.
inline random_forest train_forest(const dataset& data, const forest_params& params, std::size_t workers = 1) {
    if (params.n_trees < 1) throw invalid_argument_error("train_forest: n_trees must be >= 1");
    if (params.max_depth < 1) throw invalid_argument_error("train_forest: max_depth must be >= 1");
    if (data.get_schema().feature_count() == 0) throw invalid_argument_error("train_forest: no features");
    if (data.count_outcome(0) == 0 || data.count_outcome(1) == 0)
        throw invalid_argument_error("train_forest: training data must contain both outcome classes");

    const detail::training_view view(data);
    const std::size_t per_split = resolved_features_per_split(params, data.get_schema().feature_count());
    std::vector<decision_tree> trees(params.n_trees);
    parallel_for(params.n_trees, workers, [&](std::size_t t) {
        detail::tree_builder builder(view, params, per_split, derive_seed(params.seed, t));
        trees[t] = builder.build();
    });
    return {data.get_schema(), params, std::move(trees)};
}

} // namespace aggrecon
