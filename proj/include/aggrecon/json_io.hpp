#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "aggregate.hpp"
#include "ensemble.hpp"
#include "error.hpp"
#include "forest.hpp"
#include "metrics.hpp"
#include "reconstruct.hpp"
#include "similarity.hpp"
#include "synth.hpp"
#include "tabular.hpp"

namespace aggrecon {

using json = nlohmann::ordered_json;

inline void write_json_file(const std::filesystem::path& path, const json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw io_error(path.string() + ": " + e.what());
    }
}

// Non-finite numbers serialize as null.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// ---- schema ---------------------------------------------------------------

inline void to_json(json& j, const feature_spec& f) {
    j = json::object();
    j["name"] = f.name;
    j["kind"] = f.is_binary() ? "binary" : "continuous";
    if (f.is_binary()) {
        j["positive_label"] = f.positive_label;
        j["negative_label"] = f.negative_label;
    } else {
        if (f.unit) j["unit"] = *f.unit;
        j["integral"] = f.integral;
    }
}

inline feature_kind parse_kind(const std::string& k) {
    if (k == "binary") return feature_kind::binary;
    if (k == "continuous") return feature_kind::continuous;
    throw schema_error("unknown feature kind '" + k + "'");
}

inline void from_json(const json& j, feature_spec& f) {
    f = {};
    f.name = j.at("name").get<std::string>();
    f.kind = parse_kind(j.value("kind", std::string("binary")));
    if (f.is_binary()) {
        f.positive_label = j.value("positive_label", std::string("abnormal"));
        f.negative_label = j.value("negative_label", std::string("normal"));
    } else {
        f.positive_label.clear();
        f.negative_label.clear();
        if (j.contains("unit")) f.unit = j.at("unit").get<std::string>();
        f.integral = j.value("integral", false);
    }
}

inline void to_json(json& j, const schema& s) {
    j = json::object();
    j["features"] = s.features();
    j["outcome"] = s.outcome();
}

inline void from_json(const json& j, schema& s) {
    s = schema(j.at("features").get<std::vector<feature_spec>>(), j.at("outcome").get<feature_spec>());
}

// ---- aggregate spec -------------------------------------------------------

inline json to_json_value(const parameter& p) {
    if (!p.is_range()) return p.lo();
    return json{{"min", p.lo()}, {"max", p.hi()}};
}

inline parameter parameter_from_json(const json& j, const std::string& what) {
    if (j.is_number()) return j.get<double>();
    if (j.is_object()) return parameter::range(j.at("min").get<double>(), j.at("max").get<double>());
    throw invalid_spec_error(what + ": expected a number or {\"min\", \"max\"}");
}

inline void to_json(json& j, const contingency_table& t) { j = json{{"l1", t.l1}, {"l2", t.l2}, {"l3", t.l3}, {"l4", t.l4}}; }

inline void from_json(const json& j, contingency_table& t) {
    t.l1 = j.at("l1").get<std::int64_t>();
    t.l2 = j.at("l2").get<std::int64_t>();
    t.l3 = j.at("l3").get<std::int64_t>();
    t.l4 = j.at("l4").get<std::int64_t>();
}

inline void to_json(json& j, const aggregate_spec& spec) {
    j = json::object();
    j["n"] = spec.n;
    j["class_fraction"] = to_json_value(spec.class_fraction);
    j["outcome"] = spec.columns.outcome();
    json features = json::array();
    for (std::size_t k = 0; k < spec.features.size(); ++k) {
        json f = spec.columns.feature(k);
        if (const auto* b = std::get_if<binary_aggregate>(&spec.features[k])) {
            f["odds_ratio"] = to_json_value(b->odds_ratio);
            f["occurrence_fraction"] = to_json_value(b->occurrence_fraction);
        } else {
            const auto& c = std::get<continuous_aggregate>(spec.features[k]);
            f["mean"] = c.mean;
            f["stddev"] = c.stddev;
        }
        features.push_back(std::move(f));
    }
    j["features"] = std::move(features);
}

inline void from_json(const json& j, aggregate_spec& spec) {
    spec = {};
    spec.n = j.at("n").get<std::size_t>();
    const auto& cf = j.at("class_fraction");
    if (cf.is_array()) {
        // Per-class fractions; only two outcome classes are supported.
        if (cf.size() > 2) throw unsupported_error("outcomes with more than two classes are not supported");
        if (cf.size() != 2) throw invalid_spec_error("class_fraction array must list both classes");
        const double a = cf[0].get<double>(), b = cf[1].get<double>();
        if (std::abs(a + b - 1.0) > 1e-9) throw invalid_spec_error("class fractions must sum to 1");
        spec.class_fraction = a;
    } else {
        spec.class_fraction = parameter_from_json(cf, "class_fraction");
    }
    std::vector<feature_spec> fs;
    for (const auto& f : j.at("features")) {
        auto spec_f = f.get<feature_spec>();
        if (spec_f.is_binary()) {
            spec.features.emplace_back(binary_aggregate{parameter_from_json(f.at("odds_ratio"), spec_f.name),
                                                        parameter_from_json(f.at("occurrence_fraction"), spec_f.name)});
        } else {
            spec.features.emplace_back(continuous_aggregate{f.at("mean").get<double>(), f.at("stddev").get<double>()});
        }
        fs.push_back(std::move(spec_f));
    }
    const feature_spec outcome =
        j.contains("outcome") ? j.at("outcome").get<feature_spec>() : feature_spec::binary("Dead", "dead", "alive");
    spec.columns = schema(std::move(fs), outcome);
    validate_spec(spec);
}

inline void to_json(json& j, const cell_solution& c) {
    j = json{{"real", {c.l1, c.l2, c.l3, c.l4}},
             {"cells", c.cells},
             {"achieved_or", number_or_null(c.achieved_or)},
             {"or_deviation", number_or_null(c.or_deviation)}};
}

// ---- ground-truth configs ---------------------------------------------------

inline void to_json(json& j, const ground_truth_config& c) {
    j = json{{"name", c.name},
             {"gender_or", c.gender_or},
             {"gender_fraction", c.gender_fraction},
             {"pt_or", c.pt_or},
             {"pt_fraction", c.pt_fraction},
             {"ptt_or", c.ptt_or},
             {"ptt_fraction", c.ptt_fraction},
             {"plate_or", c.plate_or},
             {"plate_fraction", c.plate_fraction},
             {"doa_fraction", c.doa_fraction},
             {"n", c.n},
             {"age_mean", c.age_mean},
             {"age_sd", c.age_sd},
             {"seed", c.seed}};
}

inline void from_json(const json& j, ground_truth_config& c) {
    c = {};
    c.name = j.value("name", std::string("custom"));
    for (const auto& key : config_parameter_names())
        if (j.contains(key)) config_parameter(c, key) = j.at(key).get<double>();
    c.n = j.value("n", c.n);
    c.seed = j.value("seed", c.seed);
    validate_config(c);
}

// ---- models -----------------------------------------------------------------

inline void to_json(json& j, const forest_params& p) {
    j = json{{"n_trees", p.n_trees},
             {"max_depth", p.max_depth},
             {"min_samples_split", p.min_samples_split},
             {"features_per_split", p.features_per_split},
             {"bootstrap", p.bootstrap},
             {"seed", p.seed},
             {"max_thresholds", p.max_thresholds},
             {"tie_class", p.tie_class}};
}

inline void from_json(const json& j, forest_params& p) {
    p = {};
    p.n_trees = j.value("n_trees", p.n_trees);
    p.max_depth = j.value("max_depth", p.max_depth);
    p.min_samples_split = j.value("min_samples_split", p.min_samples_split);
    p.features_per_split = j.value("features_per_split", p.features_per_split);
    p.bootstrap = j.value("bootstrap", p.bootstrap);
    p.seed = j.value("seed", p.seed);
    p.max_thresholds = j.value("max_thresholds", p.max_thresholds);
    p.tie_class = j.value("tie_class", p.tie_class);
}

// Nodes as parallel arrays; leaves carry feature -1.
inline void to_json(json& j, const decision_tree& t) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         counts = json::array();
    for (const auto& n : t.nodes()) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        counts.push_back({n.class_counts[0], n.class_counts[1]});
    }
    j = json{{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"class_counts", counts}};
}

inline decision_tree tree_from_json(const json& j, std::uint8_t tie_class) {
    const auto& feature = j.at("feature");
    std::vector<tree_node> nodes(feature.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        auto& n = nodes[i];
        n.feature = feature[i].get<std::int32_t>();
        n.threshold = j.at("threshold")[i].get<double>();
        n.left = j.at("left")[i].get<std::uint32_t>();
        n.right = j.at("right")[i].get<std::uint32_t>();
        n.class_counts = {j.at("class_counts")[i][0].get<std::uint32_t>(), j.at("class_counts")[i][1].get<std::uint32_t>()};
        n.predicted = detail::majority_class(n.class_counts, tie_class);
        if (!n.is_leaf() && (n.left >= nodes.size() || n.right >= nodes.size()))
            throw io_error("model: node " + std::to_string(i) + " has an out-of-range child");
    }
    return decision_tree(std::move(nodes));
}

inline void to_json(json& j, const random_forest& f) {
    j = json{{"schema", f.get_schema()}, {"params", f.params()}, {"trees", f.trees()}};
}

inline random_forest forest_from_json(const json& j) {
    const auto params = j.at("params").get<forest_params>();
    std::vector<decision_tree> trees;
    for (const auto& t : j.at("trees")) trees.push_back(tree_from_json(t, params.tie_class));
    return {j.at("schema").get<schema>(), params, std::move(trees)};
}

inline void to_json(json& j, const ensemble_model& e) {
    j = json{{"format", "aggrecon-ensemble/1"},
             {"task", e.task == task_kind::classification ? "classification" : "regression"},
             {"models", e.models}};
}

inline ensemble_model ensemble_from_json(const json& j) {
    ensemble_model e;
    const auto task = j.value("task", std::string("classification"));
    if (task == "classification") e.task = task_kind::classification;
    else if (task == "regression") e.task = task_kind::regression;
    else throw io_error("model: unknown task '" + task + "'");
    for (const auto& m : j.at("models")) e.models.push_back(forest_from_json(m));
    if (e.models.empty()) throw io_error("model: ensemble has no models");
    for (const auto& m : e.models)
        if (!detail::same_features(m.get_schema(), e.models.front().get_schema()))
            throw io_error("model: ensemble members disagree on features");
    return e;
}

// ---- reports ----------------------------------------------------------------

inline void to_json(json& j, const metrics& m) {
    j = json{{"accuracy", m.accuracy},
             {"precision", optional_number(m.precision)},
             {"recall", optional_number(m.recall)},
             {"tp", m.tp},
             {"fp", m.fp},
             {"tn", m.tn},
             {"fn", m.fn}};
}

inline void to_json(json& j, const similarity_report& r) {
    j = json{{"method", to_string(r.method)},
             {"average_distance", r.average_distance},
             {"similarity", r.similarity},
             {"exact_match_fraction", r.exact_match_fraction},
             {"n_rows", r.n_rows},
             {"feature_subset", r.feature_subset}};
}

} // namespace aggrecon
