#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "aggregate.hpp"
#include "candidate_store.hpp"
#include "csv.hpp"
#include "ensemble.hpp"
#include "error.hpp"
#include "forest.hpp"
#include "json_io.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "reconstruct.hpp"
#include "rng.hpp"
#include "similarity.hpp"
#include "synth.hpp"
#include "tabular.hpp"

namespace aggrecon {

struct builtin_source {
    std::size_t number = 1;
};

// Where the ground truth comes from. An aggregate spec is first reconstructed
// into a ground-truth population with the plan's ground-truth seed.
using ground_truth_source = std::variant<builtin_source, ground_truth_config, aggregate_spec, dataset>;

struct controlled_sweep {
    std::string parameter;
    std::vector<double> values;
};

struct experiment_plan {
    ground_truth_source source = builtin_source{1};
    std::size_t n_candidates = 9;
    double delta = 0.15;
    std::size_t max_attempts = 1000;
    forest_params forest;
    std::size_t repetitions = 3;
    std::uint64_t base_seed = 0;
    std::optional<std::uint64_t> ground_truth_seed; // overrides the config seed
    std::size_t workers = 1;
    std::optional<std::filesystem::path> output_dir;
    bool persist_candidates = true;
    std::optional<std::vector<double>> undersampling_rates;
    std::optional<controlled_sweep> controlled;
};

inline const std::vector<std::string>& controllable_parameters() {
    static const std::vector<std::string> names = {"gender_or", "gender_fraction", "pt_or",          "pt_fraction",
                                                   "ptt_or",    "ptt_fraction",    "plate_or",       "plate_fraction",
                                                   "doa_fraction"};
    return names;
}

inline void validate_plan(const experiment_plan& p) {
    if (p.n_candidates < 1) throw invalid_argument_error("plan: n_candidates must be >= 1");
    if (p.repetitions < 1) throw invalid_argument_error("plan: repetitions must be >= 1");
    if (!(p.delta >= 0.0 && p.delta < 1.0)) throw invalid_argument_error("plan: delta outside [0,1)");
    if (p.max_attempts < p.n_candidates) throw invalid_argument_error("plan: max_attempts below n_candidates");
    if (p.undersampling_rates) {
        if (p.undersampling_rates->empty()) throw invalid_argument_error("plan: undersampling rate list is empty");
        for (double r : *p.undersampling_rates)
            if (!(r > 0.0 && r <= 1.0)) throw invalid_argument_error("plan: undersampling rate outside (0,1]");
    }
    if (p.controlled) {
        if (p.controlled->values.empty()) throw invalid_argument_error("plan: controlled sweep has no values");
        const auto& names = controllable_parameters();
        if (std::find(names.begin(), names.end(), p.controlled->parameter) == names.end())
            throw invalid_argument_error("plan: unknown sweep parameter '" + p.controlled->parameter + "'");
    }
}

// ---- report types -------------------------------------------------------------

struct stat_summary {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 0;

    bool operator==(const stat_summary&) const = default;
};

inline stat_summary summarize_values(std::span<const double> v) {
    stat_summary s;
    if (v.empty()) return s;
    s.count = v.size();
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = std::clamp(sum / static_cast<double>(v.size()), s.min, s.max);
    return s;
}

struct candidate_eval {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::size_t attempt = 0;
    std::uint64_t forest_seed = 0;
    std::uint64_t sample_seed = 0;
    std::size_t training_rows = 0;
    similarity_report binary_similarity;
    similarity_report all_similarity;
    metrics forest;
    std::vector<std::pair<std::string, double>> or_deviation;
};

struct repetition_eval {
    std::size_t repetition = 0;
    std::uint64_t seed = 0;
    std::size_t attempts_used = 0;
    std::vector<candidate_eval> candidates;
    metrics ensemble;
    stat_summary similarity_binary;
    stat_summary similarity_all;
    stat_summary exact_match_binary;
    stat_summary exact_match_all;
    // Over ground-truth rows: ensemble labels, then one vector per candidate forest.
    std::vector<std::uint8_t> ensemble_predictions;
    std::vector<std::vector<std::uint8_t>> candidate_predictions;
};

struct eval_report {
    std::string label;
    std::string source;
    std::optional<ground_truth_config> config;
    std::optional<std::uint64_t> ground_truth_seed;
    aggregate_spec spec; // aggregates of the ground truth
    std::size_t n_rows = 0;
    std::optional<double> undersampling_rate;
    std::size_t n_candidates = 0;
    double delta = 0.0;
    std::size_t max_attempts = 0;
    std::uint64_t base_seed = 0;
    forest_params forest;
    std::vector<repetition_eval> repetitions;

    stat_summary accuracy;
    stat_summary precision; // over repetitions where it is defined
    stat_summary recall;
    stat_summary similarity_binary; // over every candidate of every repetition
    stat_summary similarity_all;
    stat_summary exact_match_binary;
    stat_summary exact_match_all;

    // Wall-clock seconds per stage plus the worker count. Kept out of report.json.
    std::vector<std::pair<std::string, double>> timings;
};

// ---- seeding ------------------------------------------------------------------

inline constexpr std::uint64_t forest_seed_salt = 0xF0125EEDULL;
inline constexpr std::uint64_t sample_seed_salt = 0x5A3B1E00ULL;

inline std::uint64_t repetition_seed(std::uint64_t base, std::size_t rep) { return derive_seed(base, rep); }
inline std::uint64_t forest_seed_for(std::uint64_t rep_seed, std::size_t k) {
    return derive_seed(rep_seed ^ forest_seed_salt, k);
}
inline std::uint64_t sample_seed_for(std::uint64_t rep_seed, std::size_t k) {
    return derive_seed(rep_seed ^ sample_seed_salt, k);
}

// ---- JSON -----------------------------------------------------------------------

inline void to_json(json& j, const stat_summary& s) {
    if (s.count == 0) {
        j = json{{"mean", nullptr}, {"min", nullptr}, {"max", nullptr}, {"count", 0}};
        return;
    }
    j = json{{"mean", s.mean}, {"min", s.min}, {"max", s.max}, {"count", s.count}};
}

inline void to_json(json& j, const candidate_eval& c) {
    json dev = json::object();
    for (const auto& [name, v] : c.or_deviation) dev[name] = number_or_null(v);
    j = json{{"index", c.index},
             {"seed", c.seed},
             {"attempt", c.attempt},
             {"forest_seed", c.forest_seed},
             {"sample_seed", c.sample_seed},
             {"training_rows", c.training_rows},
             {"similarity_binary", c.binary_similarity},
             {"similarity_all", c.all_similarity},
             {"metrics", c.forest},
             {"or_deviation", dev}};
}

inline void to_json(json& j, const repetition_eval& r) {
    j = json{{"repetition", r.repetition},
             {"seed", r.seed},
             {"attempts_used", r.attempts_used},
             {"ensemble", r.ensemble},
             {"similarity_binary", r.similarity_binary},
             {"similarity_all", r.similarity_all},
             {"exact_match_binary", r.exact_match_binary},
             {"exact_match_all", r.exact_match_all},
             {"candidates", r.candidates}};
}

inline void to_json(json& j, const eval_report& r) {
    j = json::object();
    j["label"] = r.label;
    j["source"] = r.source;
    j["config"] = r.config ? json(*r.config) : json(nullptr);
    j["ground_truth_seed"] = r.ground_truth_seed ? json(*r.ground_truth_seed) : json(nullptr);
    j["n_rows"] = r.n_rows;
    j["undersampling_rate"] = optional_number(r.undersampling_rate);
    j["plan"] = json{{"n_candidates", r.n_candidates},
                     {"delta", r.delta},
                     {"max_attempts", r.max_attempts},
                     {"repetitions", r.repetitions.size()},
                     {"base_seed", r.base_seed},
                     {"forest", r.forest}};
    j["spec"] = r.spec;
    j["summary"] = json{{"accuracy", r.accuracy},
                        {"precision", r.precision},
                        {"recall", r.recall},
                        {"similarity_binary", r.similarity_binary},
                        {"similarity_all", r.similarity_all},
                        {"exact_match_binary", r.exact_match_binary},
                        {"exact_match_all", r.exact_match_all}};
    j["repetitions"] = r.repetitions;
}

inline json timings_json(const eval_report& r) {
    json t = json::object();
    for (const auto& [stage, seconds] : r.timings) t[stage] = seconds;
    return t;
}

// ---- output files -----------------------------------------------------------------

namespace detail {

inline std::string csv_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    out << text;
}

inline std::string stat_cells(const stat_summary& s) {
    if (s.count == 0) return ",,";
    return format_number(s.mean) + "," + format_number(s.min) + "," + format_number(s.max);
}

} // namespace detail

inline std::string similarity_csv(const eval_report& r) {
    std::string out = "repetition,candidate,seed,similarity_binary,similarity_all,exact_match_binary,exact_match_all\n";
    for (const auto& rep : r.repetitions)
        for (const auto& c : rep.candidates)
            out += std::to_string(rep.repetition) + "," + std::to_string(c.index) + "," + std::to_string(c.seed) + "," +
                   format_number(c.binary_similarity.similarity) + "," + format_number(c.all_similarity.similarity) +
                   "," + format_number(c.binary_similarity.exact_match_fraction) + "," +
                   format_number(c.all_similarity.exact_match_fraction) + "\n";
    return out;
}

inline std::string metrics_csv(const eval_report& r) {
    std::string out = "repetition,model,accuracy,precision,recall,tp,fp,tn,fn\n";
    auto row = [&](std::size_t rep, const std::string& model, const metrics& m) {
        out += std::to_string(rep) + "," + model + "," + format_number(m.accuracy) + "," +
               detail::csv_optional(m.precision) + "," + detail::csv_optional(m.recall) + "," + std::to_string(m.tp) +
               "," + std::to_string(m.fp) + "," + std::to_string(m.tn) + "," + std::to_string(m.fn) + "\n";
    };
    for (const auto& rep : r.repetitions) {
        for (const auto& c : rep.candidates) row(rep.repetition, "candidate_" + std::to_string(c.index), c.forest);
        row(rep.repetition, "ensemble", rep.ensemble);
    }
    return out;
}

inline std::string predictions_csv(const repetition_eval& rep, std::span<const std::uint8_t> truth) {
    std::string out = "row,truth,ensemble";
    for (std::size_t k = 0; k < rep.candidate_predictions.size(); ++k) out += ",candidate_" + std::to_string(k);
    out += '\n';
    for (std::size_t i = 0; i < truth.size(); ++i) {
        out += std::to_string(i) + "," + std::to_string(truth[i]) + "," + std::to_string(rep.ensemble_predictions[i]);
        for (const auto& p : rep.candidate_predictions) out += "," + std::to_string(p[i]);
        out += '\n';
    }
    return out;
}

// Writes report.json, timings.json, the figure CSVs and per-repetition predictions.
inline void write_report_outputs(const std::filesystem::path& dir, const eval_report& r, std::span<const std::uint8_t> truth) {
    write_json_file(dir / "report.json", json(r));
    write_json_file(dir / "timings.json", timings_json(r));
    detail::write_text(dir / "fig4_similarity.csv", similarity_csv(r));
    detail::write_text(dir / "fig5_metrics.csv", metrics_csv(r));
    for (const auto& rep : r.repetitions)
        detail::write_text(dir / ("predictions_rep" + std::to_string(rep.repetition) + ".csv"),
                           predictions_csv(rep, truth));
}

// One row per sweep point: value, then mean/min/max of each ensemble metric and
// of the binary similarity.
inline std::string sweep_csv(const std::string& key, const std::vector<double>& values,
                             const std::vector<eval_report>& reports) {
    std::string out = key +
                      ",accuracy_mean,accuracy_min,accuracy_max,precision_mean,precision_min,precision_max,"
                      "recall_mean,recall_min,recall_max,similarity_mean,similarity_min,similarity_max\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        out += format_number(values[i]) + "," + detail::stat_cells(r.accuracy) + "," + detail::stat_cells(r.precision) +
               "," + detail::stat_cells(r.recall) + "," + detail::stat_cells(r.similarity_binary) + "\n";
    }
    return out;
}

// ---- execution ------------------------------------------------------------------------

namespace detail {

class stage_clock {
public:
    explicit stage_clock(std::vector<std::pair<std::string, double>>& sink) : sink_(sink) {}

    template <typename Fn>
    decltype(auto) run(const std::string& stage, Fn&& fn) {
        const auto start = std::chrono::steady_clock::now();
        struct record {
            stage_clock& self;
            const std::string& stage;
            std::chrono::steady_clock::time_point start;
            ~record() {
                const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start;
                self.add(stage, d.count());
            }
        } rec{*this, stage, start};
        try {
            return fn();
        } catch (const stage_error&) {
            throw;
        } catch (const std::exception& e) {
            throw stage_error(stage, e.what());
        }
    }

    void add(const std::string& stage, double seconds) {
        for (auto& [name, total] : sink_)
            if (name == stage) {
                total += seconds;
                return;
            }
        sink_.emplace_back(stage, seconds);
    }

private:
    std::vector<std::pair<std::string, double>>& sink_;
};

struct prepared_truth {
    std::string label;
    std::string source;
    std::optional<ground_truth_config> config;
    std::optional<std::uint64_t> seed;
    dataset data;
    aggregate_spec spec;
};

inline prepared_truth prepare_truth(const experiment_plan& plan, stage_clock& clock) {
    prepared_truth t;
    clock.run("ground_truth", [&] {
        if (const auto* b = std::get_if<builtin_source>(&plan.source)) {
            t.config = builtin_config(b->number);
            t.source = "builtin:" + std::to_string(b->number);
        } else if (const auto* c = std::get_if<ground_truth_config>(&plan.source)) {
            t.config = *c;
            t.source = "config";
        }
        if (t.config) {
            if (plan.ground_truth_seed) t.config->seed = *plan.ground_truth_seed;
            t.label = t.config->name;
            t.seed = t.config->seed;
            t.data = generate_ground_truth(*t.config);
        } else if (const auto* s = std::get_if<aggregate_spec>(&plan.source)) {
            t.source = "spec";
            t.label = "spec";
            t.seed = plan.ground_truth_seed.value_or(plan.base_seed);
            t.data = reconstruct(*s, *t.seed);
        } else {
            t.source = "dataset";
            t.label = "dataset";
            t.data = std::get<dataset>(plan.source);
            if (t.data.seed()) t.seed = t.data.seed();
        }
    });
    if (plan.output_dir)
        clock.run("write", [&] { save_dataset(*plan.output_dir / "ground_truth.csv", t.data); });
    t.spec = clock.run("summarize", [&] { return summarize(t.data); });
    if (plan.output_dir) clock.run("write", [&] { write_json_file(*plan.output_dir / "spec.json", json(t.spec)); });
    return t;
}

inline std::uint8_t majority_class_of(const dataset& d) {
    const auto pos = d.count_outcome(positive_value);
    return pos > d.n_rows() - pos ? positive_value : negative_value;
}

inline stat_summary stat_of(const std::vector<candidate_eval>& cs, double (*get)(const candidate_eval&)) {
    std::vector<double> v;
    for (const auto& c : cs) v.push_back(get(c));
    return summarize_values(v);
}

inline void fill_summary(eval_report& r) {
    std::vector<double> acc, prec, rec;
    std::vector<candidate_eval> all;
    for (const auto& rep : r.repetitions) {
        acc.push_back(rep.ensemble.accuracy);
        if (rep.ensemble.precision) prec.push_back(*rep.ensemble.precision);
        if (rep.ensemble.recall) rec.push_back(*rep.ensemble.recall);
        all.insert(all.end(), rep.candidates.begin(), rep.candidates.end());
    }
    r.accuracy = summarize_values(acc);
    r.precision = summarize_values(prec);
    r.recall = summarize_values(rec);
    r.similarity_binary = stat_of(all, [](const candidate_eval& c) { return c.binary_similarity.similarity; });
    r.similarity_all = stat_of(all, [](const candidate_eval& c) { return c.all_similarity.similarity; });
    r.exact_match_binary =
        stat_of(all, [](const candidate_eval& c) { return c.binary_similarity.exact_match_fraction; });
    r.exact_match_all = stat_of(all, [](const candidate_eval& c) { return c.all_similarity.exact_match_fraction; });
}

// Core loop: candidates are generated once per repetition and reused for every
// undersampling rate (nullopt = no undersampling). Forest and sampling seeds
// depend only on the repetition and candidate index.
inline std::vector<eval_report> evaluate_rates(const experiment_plan& plan, const prepared_truth& truth,
                                               const std::vector<std::optional<double>>& rates,
                                               std::vector<std::pair<std::string, double>>& timings) {
    stage_clock clock(timings);
    const std::size_t workers = std::max<std::size_t>(1, plan.workers);
    const auto binary_attrs = truth.data.get_schema().binary_attribute_names();

    std::vector<eval_report> reports(rates.size());
    for (std::size_t ri = 0; ri < rates.size(); ++ri) {
        auto& r = reports[ri];
        r.label = truth.label;
        r.source = truth.source;
        r.config = truth.config;
        r.ground_truth_seed = truth.seed;
        r.spec = truth.spec;
        r.n_rows = truth.data.n_rows();
        r.undersampling_rate = rates[ri];
        r.n_candidates = plan.n_candidates;
        r.delta = plan.delta;
        r.max_attempts = plan.max_attempts;
        r.base_seed = plan.base_seed;
        r.forest = plan.forest;
    }

    for (std::size_t rep = 0; rep < plan.repetitions; ++rep) {
        const std::uint64_t rep_seed = repetition_seed(plan.base_seed, rep);
        const std::filesystem::path cand_dir =
            plan.output_dir ? *plan.output_dir / "candidates" / ("rep" + std::to_string(rep)) : std::filesystem::path{};

        candidate_options opt;
        opt.n_candidates = plan.n_candidates;
        opt.delta = plan.delta;
        opt.base_seed = rep_seed;
        opt.max_attempts = plan.max_attempts;
        opt.workers = workers;
        const candidate_set set = clock.run("reconstruct", [&] {
            try {
                return generate_candidates(truth.spec, opt);
            } catch (const partial_candidate_set_error& e) {
                if (plan.output_dir) save_candidate_set(cand_dir, e.partial());
                throw;
            }
        });
        const std::size_t k_count = set.candidates.size();
        if (plan.output_dir && plan.persist_candidates)
            clock.run("write", [&] { save_candidate_set(cand_dir, set); });

        // Similarity against the ground truth does not depend on the rate.
        std::vector<similarity_report> sim_bin(k_count), sim_all(k_count);
        clock.run("similarity", [&] {
            parallel_for(k_count, workers, [&](std::size_t k) {
                const auto& d = set.candidates[k].result.data;
                sim_bin[k] = compare_datasets(truth.data, d, matching_method::greedy_rank, binary_attrs);
                sim_all[k] = compare_datasets(truth.data, d, matching_method::greedy_rank, std::nullopt);
            });
        });

        for (std::size_t ri = 0; ri < rates.size(); ++ri) {
            repetition_eval ev;
            ev.repetition = rep;
            ev.seed = rep_seed;
            ev.attempts_used = set.attempts_used;
            ev.candidates.resize(k_count);
            ev.candidate_predictions.resize(k_count);

            clock.run("train", [&] {
                parallel_for(k_count, workers, [&](std::size_t k) {
                    const auto& cand = set.candidates[k];
                    auto& ce = ev.candidates[k];
                    ce.index = k;
                    ce.seed = cand.seed;
                    ce.attempt = cand.attempt;
                    ce.forest_seed = forest_seed_for(rep_seed, k);
                    ce.sample_seed = sample_seed_for(rep_seed, k);
                    ce.binary_similarity = sim_bin[k];
                    ce.all_similarity = sim_all[k];
                    const auto& s = set.spec.columns;
                    for (std::size_t j = 0; j < s.feature_count(); ++j)
                        if (const auto& cell = cand.result.cells[j])
                            ce.or_deviation.emplace_back(s.feature(j).name, cell->or_deviation);

                    const dataset* train = &cand.result.data;
                    std::optional<dataset> reduced;
                    if (rates[ri] && *rates[ri] < 1.0) {
                        reduced = undersample(*train, majority_class_of(*train), *rates[ri], ce.sample_seed);
                        train = &*reduced;
                    }
                    ce.training_rows = train->n_rows();
                    forest_params fp = plan.forest;
                    fp.seed = ce.forest_seed;
                    const auto model = train_forest(*train, fp, 1);
                    ev.candidate_predictions[k] = model.predict(truth.data);
                    ce.forest = evaluate(ev.candidate_predictions[k], truth.data.outcome());
                });
            });

            clock.run("evaluate", [&] {
                ev.ensemble_predictions = combine_votes(ev.candidate_predictions, plan.forest.tie_class);
                ev.ensemble = evaluate(ev.ensemble_predictions, truth.data.outcome());
                ev.similarity_binary = stat_of(ev.candidates, [](const candidate_eval& c) { return c.binary_similarity.similarity; });
                ev.similarity_all = stat_of(ev.candidates, [](const candidate_eval& c) { return c.all_similarity.similarity; });
                ev.exact_match_binary = stat_of(
                    ev.candidates, [](const candidate_eval& c) { return c.binary_similarity.exact_match_fraction; });
                ev.exact_match_all = stat_of(
                    ev.candidates, [](const candidate_eval& c) { return c.all_similarity.exact_match_fraction; });
            });
            reports[ri].repetitions.push_back(std::move(ev));
        }
    }
    for (auto& r : reports) fill_summary(r);
    return reports;
}

inline std::string rate_dir_name(double rate) { return "rate_" + format_number(rate); }

} // namespace detail

// Ground truth -> aggregates -> delta-separated candidates -> one forest per
// candidate -> ensemble vote, evaluated against the ground truth. Failures are
// rethrown as stage_error; files written before the failure are kept.
inline eval_report run_experiment(const experiment_plan& plan) {
    std::vector<std::pair<std::string, double>> timings;
    detail::stage_clock clock(timings);
    clock.run("plan", [&] { validate_plan(plan); });
    const auto wall_start = std::chrono::steady_clock::now();
    const auto truth = detail::prepare_truth(plan, clock);
    auto reports = detail::evaluate_rates(plan, truth, {std::nullopt}, timings);
    auto report = std::move(reports.front());
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - wall_start;
    report.timings = timings;
    report.timings.emplace_back("total", wall.count());
    report.timings.emplace_back("workers", static_cast<double>(plan.workers));
    if (plan.output_dir)
        clock.run("write", [&] { write_report_outputs(*plan.output_dir, report, truth.data.outcome()); });
    return report;
}

namespace detail {

inline void write_sweep(const std::filesystem::path& dir, const std::string& file, const std::string& key,
                        const std::vector<double>& values, const std::vector<eval_report>& reports) {
    json all = json::array();
    for (const auto& r : reports) all.push_back(r);
    write_json_file(dir / "sweep.json", all);
    write_text(dir / file, sweep_csv(key, values, reports));
}

} // namespace detail

// For each rate, every candidate's majority class is undersampled before
// training. Candidates are shared across rates.
inline std::vector<eval_report> run_undersampling_sweep(const experiment_plan& plan) {
    std::vector<std::pair<std::string, double>> timings;
    detail::stage_clock clock(timings);
    clock.run("plan", [&] {
        validate_plan(plan);
        if (!plan.undersampling_rates) throw invalid_argument_error("plan: no undersampling rates");
    });
    const auto wall_start = std::chrono::steady_clock::now();
    const auto truth = detail::prepare_truth(plan, clock);
    std::vector<std::optional<double>> rates(plan.undersampling_rates->begin(), plan.undersampling_rates->end());
    auto reports = detail::evaluate_rates(plan, truth, rates, timings);
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - wall_start;
    for (auto& r : reports) {
        r.timings = timings;
        r.timings.emplace_back("total", wall.count());
        r.timings.emplace_back("workers", static_cast<double>(plan.workers));
    }
    if (plan.output_dir)
        clock.run("write", [&] {
            for (const auto& r : reports)
                write_report_outputs(*plan.output_dir / detail::rate_dir_name(*r.undersampling_rate), r,
                                     truth.data.outcome());
            detail::write_sweep(*plan.output_dir, "fig6_undersampling.csv", "rate", *plan.undersampling_rates,
                                reports);
            write_json_file(*plan.output_dir / "timings.json", timings_json(reports.front()));
        });
    return reports;
}

// One experiment per value of a single config parameter, all else held fixed.
// The base must be a builtin index or a config.
inline std::vector<eval_report> run_controlled_sweep(const ground_truth_config& base, const std::string& parameter,
                                                     const std::vector<double>& values, experiment_plan plan) {
    plan.controlled = controlled_sweep{parameter, values};
    plan.undersampling_rates.reset();
    try {
        validate_plan(plan);
    } catch (const error& e) {
        throw stage_error("plan", e.what());
    }
    const auto root = plan.output_dir;
    std::vector<eval_report> reports;
    for (std::size_t i = 0; i < values.size(); ++i) {
        experiment_plan point = plan;
        ground_truth_config cfg;
        try {
            cfg = with_parameter(base, parameter, values[i]);
            cfg.name = base.name + ":" + parameter + "=" + format_number(values[i]);
            validate_config(cfg);
        } catch (const error& e) {
            throw stage_error("plan", e.what());
        }
        point.source = cfg;
        if (root) point.output_dir = *root / ("point_" + std::to_string(i));
        reports.push_back(run_experiment(point));
    }
    if (root) {
        try {
            detail::write_sweep(*root, "fig8_controlled_" + parameter + ".csv", parameter, values, reports);
        } catch (const std::exception& e) {
            throw stage_error("write", e.what());
        }
    }
    return reports;
}

inline std::vector<eval_report> run_controlled_sweep(const experiment_plan& plan) {
    if (!plan.controlled) throw stage_error("plan", "plan has no controlled sweep");
    ground_truth_config base;
    if (const auto* b = std::get_if<builtin_source>(&plan.source)) {
        try {
            base = builtin_config(b->number);
        } catch (const error& e) {
            throw stage_error("plan", e.what());
        }
    } else if (const auto* c = std::get_if<ground_truth_config>(&plan.source)) {
        base = *c;
    } else {
        throw stage_error("plan", "controlled sweeps need a builtin or config source");
    }
    if (plan.ground_truth_seed) base.seed = *plan.ground_truth_seed;
    return run_controlled_sweep(base, plan.controlled->parameter, plan.controlled->values, plan);
}

} // namespace aggrecon
