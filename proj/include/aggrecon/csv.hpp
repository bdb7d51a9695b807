#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "error.hpp"
#include "json_io.hpp"
#include "tabular.hpp"

namespace aggrecon {

// Shortest round-trip decimal form, locale independent.
inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

inline double parse_number(std::string_view text, const std::string& where) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw io_error(where + ": cannot parse '" + std::string(text) + "' as a number");
    return v;
}

// Header = feature names then the outcome name; binary cells 0/1, LF endings.
inline void write_csv(std::ostream& out, const dataset& data) {
    const auto& s = data.get_schema();
    const auto names = s.attribute_names();
    for (std::size_t a = 0; a < names.size(); ++a) out << (a ? "," : "") << names[a];
    out << '\n';
    for (std::size_t r = 0; r < data.n_rows(); ++r) {
        for (std::size_t j = 0; j < s.feature_count(); ++j) {
            if (j) out << ',';
            if (s.feature(j).is_binary()) out << static_cast<int>(data.binary(j)[r]);
            else out << format_number(data.continuous(j)[r]);
        }
        out << (s.feature_count() ? "," : "") << static_cast<int>(data.outcome()[r]) << '\n';
    }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline dataset read_csv(std::istream& in, const schema& s, const std::string& source = "csv") {
    std::string line;
    if (!std::getline(in, line)) throw io_error(source + ": missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);
    const auto names = s.attribute_names();
    if (header != names) throw io_error(source + ": header does not match the schema");

    std::vector<column> cols;
    for (const auto& f : s.features()) {
        if (f.is_binary()) cols.emplace_back(binary_column{});
        else cols.emplace_back(continuous_column{});
    }
    binary_column outcome;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        const std::string where = source + ":" + std::to_string(line_no);
        if (cells.size() != names.size())
            throw io_error(where + ": expected " + std::to_string(names.size()) + " cells, got " +
                           std::to_string(cells.size()));
        auto to_binary = [&](const std::string& c) {
            const double v = parse_number(c, where);
            if (v != 0.0 && v != 1.0) throw io_error(where + ": binary cell '" + c + "' is not 0 or 1");
            return static_cast<std::uint8_t>(v);
        };
        for (std::size_t j = 0; j < s.feature_count(); ++j) {
            if (auto* b = std::get_if<binary_column>(&cols[j])) b->push_back(to_binary(cells[j]));
            else std::get<continuous_column>(cols[j]).push_back(parse_number(cells[j], where));
        }
        outcome.push_back(to_binary(cells.back()));
    }
    return {s, std::move(cols), std::move(outcome)};
}

// data.csv -> data.schema.json
inline std::filesystem::path schema_sidecar_path(const std::filesystem::path& csv_path) {
    auto p = csv_path;
    p.replace_extension(".schema.json");
    return p;
}

inline void save_dataset(const std::filesystem::path& csv_path, const dataset& data) {
    if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw io_error("cannot write " + csv_path.string());
    write_csv(out, data);
    write_json_file(schema_sidecar_path(csv_path), nlohmann::ordered_json(data.get_schema()));
}

// Reads a CSV with its schema sidecar. Without a sidecar, columns holding
// only 0/1 are binary and the last column is the outcome.
inline dataset load_dataset(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw io_error("cannot read " + csv_path.string());
    const auto sidecar = schema_sidecar_path(csv_path);
    if (std::filesystem::exists(sidecar)) {
        const schema s = read_json_file(sidecar).get<schema>();
        return read_csv(in, s, csv_path.string());
    }

    std::string line;
    if (!std::getline(in, line)) throw io_error(csv_path.string() + ": missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);
    if (header.size() < 1) throw io_error(csv_path.string() + ": empty header");
    std::vector<char> binary(header.size(), 1);
    std::string body;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        for (std::size_t c = 0; c < std::min(cells.size(), header.size()); ++c) {
            const double v = parse_number(cells[c], csv_path.string());
            if (v != 0.0 && v != 1.0) binary[c] = 0;
        }
        body += line + '\n';
    }
    std::vector<feature_spec> features;
    for (std::size_t c = 0; c + 1 < header.size(); ++c)
        features.push_back(binary[c] ? feature_spec::binary(header[c]) : feature_spec::continuous(header[c]));
    const schema s(std::move(features), feature_spec::binary(header.back(), "dead", "alive"));
    std::string text;
    for (std::size_t a = 0; a < header.size(); ++a) text += (a ? "," : "") + header[a];
    std::istringstream full(text + '\n' + body);
    return read_csv(full, s, csv_path.string());
}

} // namespace aggrecon
