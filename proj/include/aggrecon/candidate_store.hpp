#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "csv.hpp"
#include "json_io.hpp"
#include "reconstruct.hpp"

namespace aggrecon {

inline std::string candidate_file_name(std::size_t k) { return "candidate_" + std::to_string(k) + ".csv"; }

inline json candidate_manifest(const candidate_set& set) {
    json cands = json::array();
    for (std::size_t k = 0; k < set.candidates.size(); ++k) {
        const auto& c = set.candidates[k];
        json dev = json::object();
        json cells = json::object();
        const auto& s = set.spec.columns;
        for (std::size_t j = 0; j < s.feature_count(); ++j)
            if (const auto& cell = c.result.cells[j]) {
                dev[s.feature(j).name] = number_or_null(cell->or_deviation);
                cells[s.feature(j).name] = cell->cells;
            }
        cands.push_back(json{{"file", candidate_file_name(k)},
                             {"seed", c.seed},
                             {"attempt", c.attempt},
                             {"or_deviation", dev},
                             {"cells", cells}});
    }
    return json{{"delta", set.delta},
                {"attempts_used", set.attempts_used},
                {"distance_attributes", set.distance_attributes},
                {"candidates", cands}};
}

// dir/spec.json, dir/candidate_<k>.csv (+ schema sidecars), dir/manifest.json
inline void save_candidate_set(const std::filesystem::path& dir, const candidate_set& set) {
    std::filesystem::create_directories(dir);
    write_json_file(dir / "spec.json", json(set.spec));
    for (std::size_t k = 0; k < set.candidates.size(); ++k)
        save_dataset(dir / candidate_file_name(k), set.candidates[k].result.data);
    write_json_file(dir / "manifest.json", candidate_manifest(set));
}

struct stored_candidates {
    aggregate_spec spec;
    json manifest;
    std::vector<dataset> candidates;
};

inline stored_candidates load_candidate_set(const std::filesystem::path& dir) {
    stored_candidates out;
    out.spec = read_json_file(dir / "spec.json").get<aggregate_spec>();
    out.manifest = read_json_file(dir / "manifest.json");
    for (const auto& c : out.manifest.at("candidates"))
        out.candidates.push_back(load_dataset(dir / c.at("file").get<std::string>()));
    return out;
}

} // namespace aggrecon
