#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aggregate.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "similarity.hpp"
#include "tabular.hpp"

namespace aggrecon {

class infeasible_spec_error : public error {
public:
    using error::error;
};

class ambiguous_root_error : public error {
public:
    ambiguous_root_error(double root_a, double root_b)
        : error("two admissible roots " + std::to_string(root_a) + " and " + std::to_string(root_b) +
                " inside the feasibility interval"),
          roots_{root_a, root_b} {}

    [[nodiscard]] std::pair<double, double> roots() const noexcept { return roots_; }

private:
    std::pair<double, double> roots_;
};

// Real-valued and integer solutions of one feature's 2x2 table.
struct cell_solution {
    double l1 = 0.0;
    double l2 = 0.0;
    double l3 = 0.0;
    double l4 = 0.0;
    contingency_table cells;
    double achieved_or = 0.0;
    double or_deviation = 0.0; // |achieved / target - 1|
};

// Solves l1*l4 / (l2*l3) = o under the margins l1+l3 = round(r1*n) and
// l1+l2 = round(f*n). With a = l1 this is the quadratic
//   (1-o) a^2 + (n - A - B + o(A+B)) a - o A B = 0,
// whose admissible root lies in [max(0, A+B-n), min(A, B)]. The root is
// rounded to the nearest integer and the other cells follow from the margins,
// so the margins are exact and only the odds ratio absorbs the rounding.
inline cell_solution solve_cells(double o, double r1, double f, std::size_t n) {
    if (!(o > 0.0) || !std::isfinite(o)) throw invalid_spec_error("solve_cells: odds ratio must be positive");
    if (!(r1 > 0.0 && r1 < 1.0)) throw invalid_spec_error("solve_cells: class fraction must lie in (0,1)");
    if (!(f > 0.0 && f < 1.0)) throw invalid_spec_error("solve_cells: occurrence fraction must lie in (0,1)");
    if (n < 1) throw invalid_spec_error("solve_cells: n must be >= 1");

    const auto total = static_cast<std::int64_t>(n);
    const std::int64_t class_total = std::llround(r1 * static_cast<double>(n));
    const std::int64_t feature_total = std::llround(f * static_cast<double>(n));
    const std::int64_t lo = std::max<std::int64_t>(0, class_total + feature_total - total);
    const std::int64_t hi = std::min(class_total, feature_total);
    if (hi <= lo)
        throw infeasible_spec_error("solve_cells: margins (" + std::to_string(class_total) + ", " +
                                    std::to_string(feature_total) + ") of n=" + std::to_string(n) +
                                    " admit no table with a finite positive odds ratio");

    const double A = static_cast<double>(class_total);
    const double B = static_cast<double>(feature_total);
    const double N = static_cast<double>(total);
    const double flo = static_cast<double>(lo);
    const double fhi = static_cast<double>(hi);

    double a = 0.0;
    if (std::abs(1.0 - o) < 1e-12) {
        a = A * B / N;
    } else {
        const double qa = 1.0 - o;
        const double qb = N - A - B + o * (A + B);
        const double qc = -o * A * B;
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc < 0.0) throw infeasible_spec_error("solve_cells: quadratic has no real root");
        const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
        std::vector<double> roots;
        if (q != 0.0) {
            roots.push_back(q / qa);
            roots.push_back(qc / q);
        } else {
            roots.push_back(0.0);
        }

        const double tol = 1e-9 * std::max(1.0, N);
        std::vector<double> admissible;
        std::vector<double> interior;
        for (double r : roots) {
            if (r >= flo - tol && r <= fhi + tol) admissible.push_back(r);
            if (r > flo + tol && r < fhi - tol) interior.push_back(r);
        }
        if (admissible.empty())
            throw infeasible_spec_error("solve_cells: no root in [" + std::to_string(lo) + ", " +
                                        std::to_string(hi) + "]");
        if (interior.size() == 2 && std::abs(interior[0] - interior[1]) > tol)
            throw ambiguous_root_error(interior[0], interior[1]);
        a = interior.empty() ? admissible.front() : interior.front();
    }
    a = std::clamp(a, flo, fhi);

    // Keep all four integer cells positive whenever the margins allow it.
    std::int64_t l1 = std::llround(a);
    if (hi - lo >= 2) l1 = std::clamp(l1, lo + 1, hi - 1);
    else l1 = std::clamp(l1, lo, hi);

    cell_solution s;
    s.l1 = a;
    s.l2 = B - a;
    s.l3 = A - a;
    s.l4 = N - A - B + a;
    s.cells = {l1, feature_total - l1, class_total - l1, total - class_total - feature_total + l1};
    const auto& c = s.cells;
    const double denom = static_cast<double>(c.l2) * static_cast<double>(c.l3);
    s.achieved_or = denom > 0.0 ? static_cast<double>(c.l1) * static_cast<double>(c.l4) / denom
                                : std::numeric_limits<double>::infinity();
    s.or_deviation = std::abs(s.achieved_or / o - 1.0);
    return s;
}

// One reconstructed dataset together with the values it was built from.
struct reconstruction {
    dataset data;
    aggregate_spec resolved;                    // ranges replaced by the drawn values
    std::vector<std::optional<cell_solution>> cells; // per schema feature; empty for continuous

    [[nodiscard]] double max_or_deviation() const {
        double worst = 0.0;
        for (const auto& c : cells)
            if (c) worst = std::max(worst, c->or_deviation);
        return worst;
    }
};

namespace detail {

inline aggregate_spec resolve_ranges(const aggregate_spec& spec, random_engine& rng) {
    aggregate_spec out = spec;
    out.class_fraction = spec.class_fraction.resolve(rng);
    for (auto& f : out.features)
        if (auto* b = std::get_if<binary_aggregate>(&f)) {
            b->odds_ratio = b->odds_ratio.resolve(rng);
            b->occurrence_fraction = b->occurrence_fraction.resolve(rng);
        }
    return out;
}

inline double truncated_normal(random_engine& rng, double mean, double sd) {
    if (sd == 0.0) return std::max(mean, 0.0);
    for (;;) {
        const double v = rng.normal(mean, sd);
        if (v >= 0.0) return v;
    }
}

} // namespace detail

// Fixes the outcome column first, then fills each binary feature class by
// class from its solved cells. Continuous features are drawn independently of
// the outcome from a normal truncated at 0. Deterministic in `seed`.
inline reconstruction reconstruct_detailed(const aggregate_spec& spec, std::uint64_t seed) {
    validate_spec(spec);
    for (const auto& f : spec.features)
        if (const auto* c = std::get_if<continuous_aggregate>(&f))
            if (c->stddev > 0.0 && c->mean + 8.0 * c->stddev < 0.0)
                throw invalid_spec_error("continuous feature lies almost entirely below 0");

    random_engine rng(seed);
    reconstruction out;
    out.resolved = detail::resolve_ranges(spec, rng);
    const auto& s = spec.columns;
    const std::size_t n = spec.n;
    const double r1 = out.resolved.class_fraction.value();

    out.cells.resize(s.feature_count());
    for (std::size_t j = 0; j < s.feature_count(); ++j)
        if (const auto* b = std::get_if<binary_aggregate>(&out.resolved.features[j])) {
            try {
                out.cells[j] = solve_cells(b->odds_ratio.value(), r1, b->occurrence_fraction.value(), n);
            } catch (const infeasible_spec_error& e) {
                throw infeasible_spec_error("feature '" + s.feature(j).name + "': " + e.what());
            }
        }

    const auto class_total = static_cast<std::size_t>(std::llround(r1 * static_cast<double>(n)));
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    rng.partial_shuffle(std::span(rows), class_total);
    binary_column outcome(n, negative_value);
    for (std::size_t i = 0; i < class_total; ++i) outcome[rows[i]] = positive_value;

    std::vector<std::size_t> class1, class2;
    for (std::size_t r = 0; r < n; ++r) (outcome[r] == positive_value ? class1 : class2).push_back(r);

    std::vector<column> columns;
    columns.reserve(s.feature_count());
    std::vector<std::size_t> scratch;
    for (std::size_t j = 0; j < s.feature_count(); ++j) {
        if (const auto& cell = out.cells[j]) {
            binary_column x(n, negative_value);
            auto assign = [&](const std::vector<std::size_t>& members, std::int64_t count) {
                scratch = members;
                rng.partial_shuffle(std::span(scratch), static_cast<std::size_t>(count));
                for (std::int64_t i = 0; i < count; ++i) x[scratch[static_cast<std::size_t>(i)]] = positive_value;
            };
            assign(class1, cell->cells.l1);
            assign(class2, cell->cells.l2);
            columns.emplace_back(std::move(x));
        } else {
            const auto& moments = std::get<continuous_aggregate>(out.resolved.features[j]);
            continuous_column x(n);
            for (auto& v : x) {
                v = detail::truncated_normal(rng, moments.mean, moments.stddev);
                if (s.feature(j).integral) v = std::round(v);
            }
            columns.emplace_back(std::move(x));
        }
    }

    out.data = dataset(s, std::move(columns), std::move(outcome), seed);
    return out;
}

inline dataset reconstruct(const aggregate_spec& spec, std::uint64_t seed) {
    return std::move(reconstruct_detailed(spec, seed).data);
}

inline constexpr std::uint64_t candidate_seed_stride = 0x9E3779B9ULL;

constexpr std::uint64_t candidate_seed(std::uint64_t base_seed, std::uint64_t attempt) noexcept {
    return base_seed + attempt * candidate_seed_stride;
}

struct candidate {
    std::uint64_t seed = 0;
    std::size_t attempt = 0;
    reconstruction result;
};

struct candidate_set {
    aggregate_spec spec;
    double delta = 0.0;
    std::vector<candidate> candidates;
    std::size_t attempts_used = 0;
    std::vector<std::string> distance_attributes;
};

class partial_candidate_set_error : public error {
public:
    partial_candidate_set_error(candidate_set partial, std::size_t wanted)
        : error("attempt budget exhausted after " + std::to_string(partial.attempts_used) + " attempts: accepted " +
                std::to_string(partial.candidates.size()) + " of " + std::to_string(wanted) + " candidates"),
          partial_(std::move(partial)) {}

    [[nodiscard]] const candidate_set& partial() const noexcept { return partial_; }

private:
    candidate_set partial_;
};

struct candidate_options {
    std::size_t n_candidates = 9;
    double delta = 0.15;
    std::uint64_t base_seed = 0;
    std::size_t max_attempts = 1000;
    std::size_t workers = 1;
    // Attributes for the separation distance; defaults to the binary ones.
    std::optional<std::vector<std::string>> distance_attributes;
};

inline double candidate_distance(const dataset& a, const dataset& b, const std::vector<std::string>& attributes) {
    return match_rows(a, b, matching_method::greedy_rank, attributes).average_distance;
}

// Rejection sampling over derived seeds: attempt k reconstructs with
// candidate_seed(base_seed, k) and is kept only if its greedy average distance
// to every kept candidate is at least delta. Attempts are generated in
// parallel batches but accepted strictly in attempt order, so the result does
// not depend on the worker count.
inline candidate_set generate_candidates(const aggregate_spec& spec, const candidate_options& opt) {
    if (opt.n_candidates < 1) throw invalid_argument_error("generate_candidates: n_candidates must be >= 1");
    if (!(opt.delta >= 0.0 && opt.delta < 1.0)) throw invalid_argument_error("generate_candidates: delta outside [0,1)");
    if (opt.max_attempts < 1) throw invalid_argument_error("generate_candidates: max_attempts must be >= 1");

    candidate_set out;
    out.spec = spec;
    out.delta = opt.delta;
    out.distance_attributes = opt.distance_attributes ? *opt.distance_attributes : spec.columns.binary_attribute_names();

    const std::size_t batch = std::max<std::size_t>(1, opt.workers);
    std::size_t next = 0;
    while (out.candidates.size() < opt.n_candidates && next < opt.max_attempts) {
        const std::size_t count = std::min(batch, opt.max_attempts - next);
        std::vector<candidate> fresh(count);
        const std::size_t kept_before = out.candidates.size();
        // distances[i][k]: fresh i vs kept candidate k (kept before this batch)
        std::vector<std::vector<double>> distances(count);
        parallel_for(count, opt.workers, [&](std::size_t i) {
            const std::size_t attempt = next + i;
            fresh[i].attempt = attempt;
            fresh[i].seed = candidate_seed(opt.base_seed, attempt);
            fresh[i].result = reconstruct_detailed(spec, fresh[i].seed);
            if (opt.delta > 0.0) {
                distances[i].resize(kept_before);
                for (std::size_t k = 0; k < kept_before; ++k)
                    distances[i][k] = candidate_distance(fresh[i].result.data, out.candidates[k].result.data,
                                                         out.distance_attributes);
            }
        });

        for (std::size_t i = 0; i < count && out.candidates.size() < opt.n_candidates; ++i) {
            bool accept = true;
            if (opt.delta > 0.0) {
                for (std::size_t k = 0; k < kept_before && accept; ++k) accept = distances[i][k] >= opt.delta;
                for (std::size_t k = kept_before; k < out.candidates.size() && accept; ++k)
                    accept = candidate_distance(fresh[i].result.data, out.candidates[k].result.data,
                                                out.distance_attributes) >= opt.delta;
            }
            out.attempts_used = next + i + 1;
            if (accept) out.candidates.push_back(std::move(fresh[i]));
        }
        next += count;
    }

    if (out.candidates.size() < opt.n_candidates) {
        out.attempts_used = opt.max_attempts;
        throw partial_candidate_set_error(std::move(out), opt.n_candidates);
    }
    return out;
}

} // namespace aggrecon
