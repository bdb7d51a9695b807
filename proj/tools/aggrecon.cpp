// Command-line front end: synth, summarize, reconstruct, similarity, train,
// predict, experiment, sweep.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <aggrecon/aggrecon.hpp>

using namespace aggrecon;
namespace fs = std::filesystem;

namespace {

template <typename Fn>
decltype(auto) stage(const std::string& name, Fn&& fn) {
    try {
        return fn();
    } catch (const stage_error&) {
        throw;
    } catch (const std::exception& e) {
        throw stage_error(name, e.what());
    }
}

void emit_json(const json& j, const std::string& out) {
    stage("write", [&] {
        if (out.empty()) std::cout << j.dump(2) << '\n';
        else write_json_file(out, j);
    });
}

bool is_number(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

// --config accepts a builtin config number or a config JSON file.
ground_truth_config load_config(const std::string& value) {
    return stage("load", [&] {
        if (is_number(value)) return builtin_config(std::stoul(value));
        return read_json_file(value).get<ground_truth_config>();
    });
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) out.push_back(parse_number(item, "list"));
    return out;
}

struct common_options {
    std::optional<std::uint64_t> seed;
    std::size_t workers = default_workers();
};

struct forest_options {
    std::size_t trees = forest_params{}.n_trees;
    std::size_t depth = forest_params{}.max_depth;
    std::size_t min_split = forest_params{}.min_samples_split;
    std::size_t features_per_split = 0;

    void add(CLI::App* cmd) {
        cmd->add_option("--trees", trees, "trees per forest")->capture_default_str();
        cmd->add_option("--depth", depth, "maximum tree depth")->capture_default_str();
        cmd->add_option("--min-split", min_split, "minimum samples to split a node")->capture_default_str();
        cmd->add_option("--features-per-split", features_per_split, "0 selects ceil(sqrt(F))")->capture_default_str();
    }

    forest_params params(std::uint64_t seed) const {
        forest_params p;
        p.n_trees = trees;
        p.max_depth = depth;
        p.min_samples_split = min_split;
        p.features_per_split = features_per_split;
        p.seed = seed;
        return p;
    }
};

std::vector<dataset> load_training_sets(const std::string& path) {
    return stage("load", [&] {
        std::vector<dataset> out;
        if (fs::is_directory(path)) {
            if (fs::exists(fs::path(path) / "manifest.json")) return load_candidate_set(path).candidates;
            for (std::size_t k = 0; fs::exists(fs::path(path) / candidate_file_name(k)); ++k)
                out.push_back(load_dataset(fs::path(path) / candidate_file_name(k)));
            if (out.empty()) throw io_error(path + ": no candidate_<k>.csv files");
        } else {
            out.push_back(load_dataset(path));
        }
        return out;
    });
}

struct experiment_options {
    std::string config = "1";
    std::string spec_file;
    std::string data_file;
    std::optional<std::size_t> n;
    std::size_t candidates = 9;
    double delta = 0.15;
    std::size_t max_attempts = 1000;
    std::size_t repetitions = 3;
    std::optional<std::uint64_t> gt_seed;
    bool no_persist = false;
    std::string out;
    forest_options forest;

    void add(CLI::App* cmd) {
        cmd->add_option("--config", config, "builtin config number or config JSON file")->capture_default_str();
        cmd->add_option("--spec", spec_file, "aggregate spec JSON used instead of a config");
        cmd->add_option("--data", data_file, "ground-truth CSV used instead of a config");
        cmd->add_option("--n", n, "override the config's row count");
        cmd->add_option("--candidates", candidates, "candidate datasets per repetition")->capture_default_str();
        cmd->add_option("--delta", delta, "minimum pairwise candidate distance")->capture_default_str();
        cmd->add_option("--max-attempts", max_attempts, "reconstruction attempts per repetition")->capture_default_str();
        cmd->add_option("--repetitions", repetitions, "independent repetitions")->capture_default_str();
        cmd->add_option("--gt-seed", gt_seed, "ground-truth seed (config seed by default)");
        cmd->add_flag("--no-persist", no_persist, "do not write candidate datasets");
        cmd->add_option("--out", out, "output directory");
        forest.add(cmd);
    }

    experiment_plan plan(const common_options& common) const {
        experiment_plan p;
        stage("load", [&] {
            if (!data_file.empty()) {
                p.source = load_dataset(data_file);
            } else if (!spec_file.empty()) {
                p.source = read_json_file(spec_file).get<aggregate_spec>();
            } else {
                auto cfg = load_config(config);
                if (n) cfg.n = *n;
                p.source = cfg;
            }
        });
        p.n_candidates = candidates;
        p.delta = delta;
        p.max_attempts = max_attempts;
        p.repetitions = repetitions;
        p.base_seed = common.seed.value_or(0);
        p.ground_truth_seed = gt_seed;
        p.workers = common.workers;
        p.forest = forest.params(0);
        p.persist_candidates = !no_persist;
        if (!out.empty()) p.output_dir = out;
        return p;
    }
};

void print_summary(const eval_report& r) {
    auto stat = [](const stat_summary& s) {
        if (s.count == 0) return std::string("absent");
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.4f [%.4f, %.4f]", s.mean, s.min, s.max);
        return std::string(buf);
    };
    std::cout << r.label;
    if (r.undersampling_rate) std::cout << " rate " << format_number(*r.undersampling_rate);
    std::cout << ": accuracy " << stat(r.accuracy) << ", precision " << stat(r.precision) << ", recall "
              << stat(r.recall) << ", similarity " << stat(r.similarity_binary) << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reconstruct individual-level tabular data from aggregate statistics"};
    app.require_subcommand(1);
    common_options common;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", common.seed, "base seed");
        cmd->add_option("--workers", common.workers, "worker threads (default: AGGRECON_WORKERS or core count)")
            ->capture_default_str();
    };

    // synth
    auto* synth = app.add_subcommand("synth", "generate a ground-truth dataset from a config");
    std::string synth_config = "1", synth_out;
    std::optional<std::size_t> synth_n;
    synth->add_option("--config", synth_config, "builtin config number or config JSON file")->capture_default_str();
    synth->add_option("--n", synth_n, "override the config's row count");
    synth->add_option("--out", synth_out, "output CSV")->required();
    add_common(synth);
    synth->callback([&] {
        auto cfg = load_config(synth_config);
        if (synth_n) cfg.n = *synth_n;
        if (common.seed) cfg.seed = *common.seed;
        const auto d = stage("reconstruct", [&] { return generate_ground_truth(cfg); });
        stage("write", [&] { save_dataset(synth_out, d); });
    });

    // summarize
    auto* summ = app.add_subcommand("summarize", "compute the aggregate spec of a dataset");
    std::string summ_in, summ_out;
    summ->add_option("data", summ_in, "input CSV")->required();
    summ->add_option("--out", summ_out, "output JSON (stdout if omitted)");
    summ->callback([&] {
        const auto d = stage("load", [&] { return load_dataset(summ_in); });
        const auto spec = stage("summarize", [&] { return summarize(d); });
        emit_json(json(spec), summ_out);
    });

    // reconstruct
    auto* rec = app.add_subcommand("reconstruct", "generate delta-separated candidate datasets from a spec");
    std::string rec_spec, rec_out;
    std::size_t rec_candidates = 9, rec_attempts = 1000;
    double rec_delta = 0.15;
    rec->add_option("spec", rec_spec, "aggregate spec JSON")->required();
    rec->add_option("--candidates", rec_candidates, "number of candidates")->capture_default_str();
    rec->add_option("--delta", rec_delta, "minimum pairwise greedy distance")->capture_default_str();
    rec->add_option("--max-attempts", rec_attempts, "attempt budget")->capture_default_str();
    rec->add_option("--out", rec_out, "output directory")->required();
    add_common(rec);
    rec->callback([&] {
        const auto spec = stage("load", [&] { return read_json_file(rec_spec).get<aggregate_spec>(); });
        candidate_options opt;
        opt.n_candidates = rec_candidates;
        opt.delta = rec_delta;
        opt.max_attempts = rec_attempts;
        opt.base_seed = common.seed.value_or(0);
        opt.workers = common.workers;
        try {
            const auto set = generate_candidates(spec, opt);
            stage("write", [&] { save_candidate_set(rec_out, set); });
            std::cout << set.candidates.size() << " candidates after " << set.attempts_used << " attempts\n";
        } catch (const partial_candidate_set_error& e) {
            stage("write", [&] { save_candidate_set(rec_out, e.partial()); });
            throw stage_error("reconstruct", e.what());
        } catch (const std::exception& e) {
            throw stage_error("reconstruct", e.what());
        }
    });

    // similarity
    auto* sim = app.add_subcommand("similarity", "compare two datasets");
    std::string sim_a, sim_b, sim_method = "greedy", sim_features, sim_out;
    sim->add_option("a", sim_a, "first CSV")->required();
    sim->add_option("b", sim_b, "second CSV")->required();
    sim->add_option("--method", sim_method, "greedy | exact | identity")->capture_default_str();
    sim->add_option("--features", sim_features, "comma-separated attribute subset");
    sim->add_option("--out", sim_out, "output JSON (stdout if omitted)");
    add_common(sim);
    sim->callback([&] {
        const auto a = stage("load", [&] { return load_dataset(sim_a); });
        const auto b = stage("load", [&] { return load_dataset(sim_b); });
        const auto method = stage("cli", [&] { return parse_matching_method(sim_method); });
        std::optional<std::vector<std::string>> subset;
        if (!sim_features.empty()) {
            subset.emplace();
            std::istringstream in(sim_features);
            for (std::string f; std::getline(in, f, ',');) subset->push_back(f);
        }
        const auto report =
            stage("similarity", [&] { return compare_datasets(a, b, method, subset, common.workers); });
        emit_json(json(report), sim_out);
    });

    // train
    auto* train = app.add_subcommand("train", "train one forest per candidate dataset");
    std::string train_in, train_out;
    forest_options train_forest_opts;
    train->add_option("data", train_in, "candidate directory or training CSV")->required();
    train->add_option("--out", train_out, "output model JSON")->required();
    train_forest_opts.add(train);
    add_common(train);
    train->callback([&] {
        const auto sets = load_training_sets(train_in);
        const std::uint64_t seed = common.seed.value_or(0);
        ensemble_model e;
        e.models.resize(sets.size());
        stage("train", [&] {
            parallel_for(sets.size(), common.workers, [&](std::size_t k) {
                e.models[k] = train_forest(sets[k], train_forest_opts.params(forest_seed_for(seed, k)));
            });
        });
        stage("write", [&] { write_json_file(train_out, json(e)); });
    });

    // predict
    auto* pred = app.add_subcommand("predict", "apply a trained ensemble to a dataset");
    std::string pred_model, pred_in, pred_out, pred_metrics, pred_task = "classification";
    pred->add_option("model", pred_model, "model JSON")->required();
    pred->add_option("data", pred_in, "input CSV")->required();
    pred->add_option("--out", pred_out, "per-row predictions CSV (stdout if omitted)");
    pred->add_option("--metrics", pred_metrics, "write metrics against the data's outcome column");
    pred->add_option("--task", pred_task, "classification | regression")->capture_default_str();
    add_common(pred);
    pred->callback([&] {
        auto model = stage("load", [&] { return ensemble_from_json(read_json_file(pred_model)); });
        const auto d = stage("load", [&] { return load_dataset(pred_in); });
        if (pred_task == "regression") model.task = task_kind::regression;
        else if (pred_task != "classification") throw stage_error("cli", "unknown task '" + pred_task + "'");
        const auto output = stage("predict", [&] { return ensemble_predict(model, d, common.workers); });
        std::string text = "row,prediction\n";
        std::visit(
            [&](const auto& values) {
                for (std::size_t r = 0; r < values.size(); ++r)
                    text += std::to_string(r) + "," + format_number(static_cast<double>(values[r])) + "\n";
            },
            output);
        stage("write", [&] {
            if (pred_out.empty()) {
                std::cout << text;
            } else {
                if (fs::path(pred_out).has_parent_path()) fs::create_directories(fs::path(pred_out).parent_path());
                std::ofstream(pred_out, std::ios::binary) << text;
            }
        });
        if (const auto* labels = std::get_if<std::vector<std::uint8_t>>(&output)) {
            const auto m = stage("evaluate", [&] { return evaluate(*labels, d.outcome()); });
            if (!pred_metrics.empty()) emit_json(json(m), pred_metrics);
            else if (!pred_out.empty()) std::cout << json(m).dump() << '\n';
        }
    });

    // experiment
    auto* exp = app.add_subcommand("experiment", "full pipeline with reports");
    experiment_options exp_opts;
    exp_opts.add(exp);
    add_common(exp);
    exp->callback([&] { print_summary(run_experiment(exp_opts.plan(common))); });

    // sweep
    auto* sweep = app.add_subcommand("sweep", "undersampling or controlled single-parameter sweep");
    experiment_options sweep_opts;
    std::string sweep_rates, sweep_param, sweep_values;
    sweep_opts.add(sweep);
    sweep->add_option("--rates", sweep_rates, "undersampling rates, e.g. 0.1,0.2,1.0");
    sweep->add_option("--parameter", sweep_param, "config parameter to vary, e.g. pt_or");
    sweep->add_option("--values", sweep_values, "values for --parameter");
    add_common(sweep);
    sweep->callback([&] {
        auto plan = sweep_opts.plan(common);
        std::vector<eval_report> reports;
        if (!sweep_rates.empty() == !sweep_param.empty())
            throw stage_error("cli", "give exactly one of --rates or --parameter");
        if (!sweep_rates.empty()) {
            plan.undersampling_rates = stage("cli", [&] { return parse_list(sweep_rates); });
            reports = run_undersampling_sweep(plan);
        } else {
            plan.controlled = controlled_sweep{sweep_param, stage("cli", [&] { return parse_list(sweep_values); })};
            reports = run_controlled_sweep(plan);
        }
        for (const auto& r : reports) print_summary(r);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "aggrecon: [cli] " << e.what() << '\n';
        return 2;
    } catch (const stage_error& e) {
        std::cerr << "aggrecon: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "aggrecon: [internal] " << e.what() << '\n';
        return 1;
    }
    return 0;
}
