#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "hungarian.hpp"
#include "parallel.hpp"
#include "tabular.hpp"

namespace aggrecon {

enum class matching_method { greedy_rank, exact_assignment, identity };

inline std::string to_string(matching_method m) {
    switch (m) {
    case matching_method::greedy_rank: return "greedy";
    case matching_method::exact_assignment: return "exact";
    case matching_method::identity: return "identity";
    }
    return "unknown";
}

inline matching_method parse_matching_method(std::string_view s) {
    if (s == "greedy" || s == "greedy_rank") return matching_method::greedy_rank;
    if (s == "exact" || s == "exact_assignment" || s == "hungarian") return matching_method::exact_assignment;
    if (s == "identity") return matching_method::identity;
    throw invalid_argument_error("unknown matching method '" + std::string(s) + "'");
}

struct row_matching {
    std::vector<std::size_t> permutation; // row of A -> row of B
    matching_method method = matching_method::greedy_rank;
    std::vector<std::string> attributes;  // attributes the distances were taken over
    double total_distance = 0.0;
    double average_distance = 0.0;
};

// Scaled Manhattan distance between two rows that were normalized jointly.
inline double row_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw schema_error("row_distance: rows have different widths");
    if (a.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
    return sum / static_cast<double>(a.size());
}

namespace detail {

inline std::pair<normalized_matrix, normalized_matrix>
normalize_pair(const dataset& a, const dataset& b, const std::optional<std::vector<std::string>>& subset) {
    if (!(a.get_schema() == b.get_schema())) throw schema_error("datasets have different schemas");
    if (a.n_rows() != b.n_rows())
        throw invalid_argument_error("datasets differ in size: " + std::to_string(a.n_rows()) + " vs " +
                                     std::to_string(b.n_rows()));
    if (a.n_rows() == 0) throw invalid_argument_error("cannot match empty datasets");
    const auto attributes = resolve_attributes(a.get_schema(), subset);
    const dataset* tables[] = {&a, &b};
    auto m = min_max_normalize_jointly(tables, attributes);
    return {std::move(m[0]), std::move(m[1])};
}

// Row order by (sum of normalized values, row index).
inline std::vector<std::size_t> rank_rows(const normalized_matrix& m) {
    std::vector<double> sums(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (double v : m.row(r)) sums[r] += v;
    std::vector<std::size_t> order(m.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sums[x] < sums[y]; });
    return order;
}

} // namespace detail

// Pairs rows by the matching at `method` and reports the distances.
// Greedy rank pairing sorts both sides by row sum; exact assignment runs the
// Hungarian method on the full distance matrix (an O(n^3) oracle).
inline row_matching match_rows(const dataset& a, const dataset& b, matching_method method,
                               const std::optional<std::vector<std::string>>& feature_subset = {},
                               std::size_t workers = 1) {
    auto [na, nb] = detail::normalize_pair(a, b, feature_subset);
    const std::size_t n = na.rows;

    row_matching m;
    m.method = method;
    m.attributes = na.attributes;
    m.permutation.resize(n);

    switch (method) {
    case matching_method::identity:
        std::iota(m.permutation.begin(), m.permutation.end(), std::size_t{0});
        break;
    case matching_method::greedy_rank: {
        const auto ra = detail::rank_rows(na);
        const auto rb = detail::rank_rows(nb);
        for (std::size_t k = 0; k < n; ++k) m.permutation[ra[k]] = rb[k];
        break;
    }
    case matching_method::exact_assignment: {
        std::vector<double> cost(n * n);
        parallel_for(n, workers, [&](std::size_t i) {
            for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = row_distance(na.row(i), nb.row(j));
        });
        m.permutation = solve_assignment(cost, n);
        break;
    }
    }

    for (std::size_t i = 0; i < n; ++i) m.total_distance += row_distance(na.row(i), nb.row(m.permutation[i]));
    m.average_distance = m.total_distance / static_cast<double>(n);
    return m;
}

inline double similarity(const dataset& a, const dataset& b, matching_method method,
                         const std::optional<std::vector<std::string>>& feature_subset = {}) {
    return 1.0 - match_rows(a, b, method, feature_subset).average_distance;
}

// Fraction of matched pairs that agree on every matched attribute.
inline double exact_match_fraction(const dataset& a, const dataset& b, const row_matching& matching) {
    auto [na, nb] = detail::normalize_pair(a, b, matching.attributes);
    if (matching.permutation.size() != na.rows) throw invalid_argument_error("matching does not fit the datasets");
    std::size_t exact = 0;
    for (std::size_t i = 0; i < na.rows; ++i)
        if (row_distance(na.row(i), nb.row(matching.permutation[i])) == 0.0) ++exact;
    return static_cast<double>(exact) / static_cast<double>(na.rows);
}

struct similarity_report {
    matching_method method = matching_method::greedy_rank;
    double average_distance = 0.0;
    double similarity = 0.0;
    double exact_match_fraction = 0.0;
    std::size_t n_rows = 0;
    std::vector<std::string> feature_subset;
};

inline similarity_report compare_datasets(const dataset& a, const dataset& b, matching_method method,
                                          const std::optional<std::vector<std::string>>& feature_subset = {},
                                          std::size_t workers = 1) {
    const auto m = match_rows(a, b, method, feature_subset, workers);
    return {method, m.average_distance, 1.0 - m.average_distance, exact_match_fraction(a, b, m), a.n_rows(),
            m.attributes};
}

} // namespace aggrecon
