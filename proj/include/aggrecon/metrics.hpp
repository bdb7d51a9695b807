#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "error.hpp"
#include "tabular.hpp"

namespace aggrecon {

struct metrics {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
    double accuracy = 0.0;
    std::optional<double> precision; // absent when nothing was predicted positive
    std::optional<double> recall;    // absent when no row is actually positive

    [[nodiscard]] std::size_t total() const noexcept { return tp + fp + tn + fn; }
    bool operator==(const metrics&) const = default;
};

inline metrics evaluate(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth,
                        std::uint8_t positive_class = positive_value) {
    if (predicted.size() != truth.size())
        throw invalid_argument_error("evaluate: " + std::to_string(predicted.size()) + " predictions for " +
                                     std::to_string(truth.size()) + " labels");
    if (truth.empty()) throw invalid_argument_error("evaluate: no labels");
    metrics m;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool p = predicted[i] == positive_class;
        const bool t = truth[i] == positive_class;
        if (p && t) ++m.tp;
        else if (p) ++m.fp;
        else if (t) ++m.fn;
        else ++m.tn;
    }
    m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.total());
    if (m.tp + m.fp > 0) m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
    if (m.tp + m.fn > 0) m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
    return m;
}

} // namespace aggrecon
