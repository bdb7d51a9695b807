#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "aggregate.hpp"
#include "error.hpp"
#include "reconstruct.hpp"
#include "tabular.hpp"

namespace aggrecon {

// Parameters of one synthetic ground-truth population (ATC-style schema).
struct ground_truth_config {
    std::string name;
    double gender_or = 1.0;
    double gender_fraction = 0.5;
    double pt_or = 1.0;
    double pt_fraction = 0.5;
    double ptt_or = 1.0;
    double ptt_fraction = 0.5;
    double plate_or = 1.0;
    double plate_fraction = 0.5;
    double doa_fraction = 0.5;
    std::size_t n = 10'000;
    double age_mean = 36.0;
    double age_sd = 19.0;
    std::uint64_t seed = 0;

    bool operator==(const ground_truth_config&) const = default;
};

inline const std::vector<std::string>& config_parameter_names() {
    static const std::vector<std::string> names = {"gender_or",  "gender_fraction", "pt_or",    "pt_fraction",
                                                   "ptt_or",     "ptt_fraction",    "plate_or", "plate_fraction",
                                                   "doa_fraction", "age_mean",      "age_sd"};
    return names;
}

inline double& config_parameter(ground_truth_config& c, std::string_view name) {
    if (name == "gender_or") return c.gender_or;
    if (name == "gender_fraction") return c.gender_fraction;
    if (name == "pt_or") return c.pt_or;
    if (name == "pt_fraction") return c.pt_fraction;
    if (name == "ptt_or") return c.ptt_or;
    if (name == "ptt_fraction") return c.ptt_fraction;
    if (name == "plate_or") return c.plate_or;
    if (name == "plate_fraction") return c.plate_fraction;
    if (name == "doa_fraction") return c.doa_fraction;
    if (name == "age_mean") return c.age_mean;
    if (name == "age_sd") return c.age_sd;
    throw invalid_argument_error("unknown config parameter '" + std::string(name) + "'");
}

inline ground_truth_config with_parameter(ground_truth_config c, std::string_view name, double value) {
    config_parameter(c, name) = value;
    return c;
}

inline void validate_config(const ground_truth_config& c) {
    auto frac = [](double f) { return f > 0.0 && f < 1.0; };
    if (!frac(c.gender_fraction) || !frac(c.pt_fraction) || !frac(c.ptt_fraction) || !frac(c.plate_fraction) ||
        !frac(c.doa_fraction))
        throw invalid_argument_error("config '" + c.name + "': fractions must lie in (0,1)");
    if (!(c.gender_or > 0.0) || !(c.pt_or > 0.0) || !(c.ptt_or > 0.0) || !(c.plate_or > 0.0))
        throw invalid_argument_error("config '" + c.name + "': odds ratios must be positive");
    if (c.n < 1) throw invalid_argument_error("config '" + c.name + "': n must be >= 1");
    if (!(c.age_sd >= 0.0)) throw invalid_argument_error("config '" + c.name + "': age_sd must be >= 0");
}

// Gender, PT, PTT, Platelet (binary) and Age (whole years); outcome Dead.
inline schema atc_schema() {
    return schema({feature_spec::binary("Gender", "male", "female"), feature_spec::binary("PT"),
                   feature_spec::binary("PTT"), feature_spec::binary("Platelet"),
                   feature_spec::continuous("Age", "years", true)},
                  feature_spec::binary("Dead", "dead", "alive"));
}

// The ten ground-truth parameter sets; seed = config number.
inline std::vector<ground_truth_config> builtin_configs() {
    struct row {
        double gor, gf, ptor, ptf, pttor, pttf, plor, plf, doa;
    };
    static constexpr std::array<row, 10> table = {{
        {2, 0.6, 4, 0.3, 6, 0.2, 8, 0.1, 0.1},
        {6, 0.7, 2, 0.2, 4, 0.1, 6, 0.3, 0.1},
        {8, 0.8, 8, 0.1, 2, 0.3, 4, 0.4, 0.2},
        {10, 0.9, 8, 0.2, 4, 0.4, 2, 0.5, 0.2},
        {10, 0.6, 4, 0.1, 2, 0.2, 6, 0.5, 0.3},
        {4, 0.5, 2, 0.3, 6, 0.1, 8, 0.2, 0.3},
        {2, 0.5, 6, 0.3, 8, 0.2, 10, 0.1, 0.4},
        {6, 0.5, 4, 0.2, 8, 0.1, 10, 0.5, 0.4},
        {8, 0.5, 2, 0.4, 10, 0.3, 10, 0.4, 0.45},
        {10, 0.5, 6, 0.4, 10, 0.3, 10, 0.3, 0.49},
    }};
    std::vector<ground_truth_config> out;
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& r = table[i];
        ground_truth_config c;
        c.name = "config" + std::to_string(i + 1);
        c.gender_or = r.gor;
        c.gender_fraction = r.gf;
        c.pt_or = r.ptor;
        c.pt_fraction = r.ptf;
        c.ptt_or = r.pttor;
        c.ptt_fraction = r.pttf;
        c.plate_or = r.plor;
        c.plate_fraction = r.plf;
        c.doa_fraction = r.doa;
        c.seed = i + 1;
        out.push_back(std::move(c));
    }
    return out;
}

inline ground_truth_config builtin_config(std::size_t number) {
    const auto all = builtin_configs();
    if (number < 1 || number > all.size())
        throw invalid_argument_error("builtin config number must be in [1, " + std::to_string(all.size()) + "]");
    return all[number - 1];
}

inline aggregate_spec to_aggregate_spec(const ground_truth_config& c) {
    validate_config(c);
    aggregate_spec spec;
    spec.columns = atc_schema();
    spec.n = c.n;
    spec.class_fraction = c.doa_fraction;
    spec.features = {binary_aggregate{c.gender_or, c.gender_fraction}, binary_aggregate{c.pt_or, c.pt_fraction},
                     binary_aggregate{c.ptt_or, c.ptt_fraction}, binary_aggregate{c.plate_or, c.plate_fraction},
                     continuous_aggregate{c.age_mean, c.age_sd}};
    return spec;
}

// Ground truth is a reconstruction of the config's target aggregates with the config seed.
inline dataset generate_ground_truth(const ground_truth_config& c) {
    return reconstruct(to_aggregate_spec(c), c.seed);
}

} // namespace aggrecon
