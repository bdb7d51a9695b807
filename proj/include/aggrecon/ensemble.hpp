#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "error.hpp"
#include "forest.hpp"
#include "tabular.hpp"

namespace aggrecon {

enum class task_kind { classification, regression };

// One trained model per candidate dataset.
struct ensemble_model {
    std::vector<random_forest> models;
    task_kind task = task_kind::classification;
};

// Mode of binary votes; an even split goes to tie_class.
inline std::uint8_t majority_vote(std::span<const std::uint8_t> votes, std::uint8_t tie_class = positive_value) {
    std::size_t positive = 0;
    for (auto v : votes) positive += v == positive_value;
    const std::size_t negative = votes.size() - positive;
    if (positive == negative) return tie_class;
    return positive > negative ? positive_value : negative_value;
}

inline double arithmetic_mean(std::span<const double> values) {
    if (values.empty()) throw invalid_argument_error("mean of no values");
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

// Row-wise mode of per-model label vectors.
inline std::vector<std::uint8_t> combine_votes(const std::vector<std::vector<std::uint8_t>>& per_model,
                                               std::uint8_t tie_class = positive_value) {
    if (per_model.empty()) throw invalid_argument_error("ensemble has no models");
    const std::size_t rows = per_model.front().size();
    std::vector<std::uint8_t> out(rows), votes(per_model.size());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t m = 0; m < per_model.size(); ++m) votes[m] = per_model[m].at(r);
        out[r] = majority_vote(votes, tie_class);
    }
    return out;
}

// Row-wise arithmetic mean of per-model outputs.
inline std::vector<double> combine_means(const std::vector<std::vector<double>>& per_model) {
    if (per_model.empty()) throw invalid_argument_error("ensemble has no models");
    const std::size_t rows = per_model.front().size();
    std::vector<double> out(rows), values(per_model.size());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t m = 0; m < per_model.size(); ++m) values[m] = per_model[m].at(r);
        out[r] = arithmetic_mean(values);
    }
    return out;
}

using ensemble_output = std::variant<std::vector<std::uint8_t>, std::vector<double>>;

// Classification: mode of the models' labels. Regression: mean of the models'
// positive-vote fractions.
inline ensemble_output ensemble_predict(const ensemble_model& ensemble, const dataset& rows, std::size_t workers = 1) {
    if (ensemble.models.empty()) throw invalid_argument_error("ensemble has no models");
    const std::size_t k = ensemble.models.size();
    if (ensemble.task == task_kind::classification) {
        std::vector<std::vector<std::uint8_t>> labels(k);
        parallel_for(k, workers, [&](std::size_t m) { labels[m] = ensemble.models[m].predict(rows); });
        return combine_votes(labels, ensemble.models.front().params().tie_class);
    }
    std::vector<std::vector<double>> scores(k);
    parallel_for(k, workers, [&](std::size_t m) { scores[m] = ensemble.models[m].predict_score(rows); });
    return combine_means(scores);
}

inline std::vector<std::uint8_t> ensemble_classify(const ensemble_model& ensemble, const dataset& rows,
                                                   std::size_t workers = 1) {
    if (ensemble.task != task_kind::classification) throw invalid_argument_error("ensemble is not a classifier");
    return std::get<std::vector<std::uint8_t>>(ensemble_predict(ensemble, rows, workers));
}

} // namespace aggrecon
