#include "ssce/io.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "ssce/errors.hpp"

namespace ssce {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

[[noreturn]] void fail(const std::string& path, int line_no, const std::string& what) {
    std::ostringstream msg;
    msg << path << ':' << line_no << ": " << what;
    throw ParseError(msg.str());
}

double parse_double(const std::string& field, const std::string& path, int line_no,
                    const char* name) {
    if (field.empty()) fail(path, line_no, std::string("empty ") + name);
    const char* begin = field.c_str();
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(begin, &end);
    if (end != begin + field.size() || errno == ERANGE)
        fail(path, line_no, std::string("invalid ") + name + " '" + field + "'");
    return value;
}

long parse_long(const std::string& field, const std::string& path, int line_no,
                const char* name) {
    if (field.empty()) fail(path, line_no, std::string("empty ") + name);
    const char* begin = field.c_str();
    char* end = nullptr;
    errno = 0;
    const long value = std::strtol(begin, &end, 10);
    if (end != begin + field.size() || errno == ERANGE)
        fail(path, line_no, std::string("invalid ") + name + " '" + field + "'");
    return value;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

} // namespace

Dataset read_dataset(const std::string& path) {
    const std::vector<std::string> lines = read_lines(path);
    const std::string header = "ts_tilde,stage_start,excluded";
    if (lines.empty() || trim(lines[0]) != header)
        throw ParseError(path + ":1: expected header '" + header + "'");

    Dataset data;
    for (std::size_t idx = 1; idx < lines.size(); ++idx) {
        const int line_no = static_cast<int>(idx) + 1;
        const std::string line = trim(lines[idx]);
        if (line.empty()) continue;
        if (line == header) fail(path, line_no, "duplicate header");
        const auto fields = split_fields(line);
        if (fields.size() != 3) fail(path, line_no, "expected 3 fields");

        Observation obs;
        obs.ts = parse_double(fields[0], path, line_no, "ts_tilde");
        if (!(obs.ts >= 0.0)) fail(path, line_no, "ts_tilde must be nonnegative");
        const long stage_start = parse_long(fields[1], path, line_no, "stage_start");
        if (stage_start < 0) fail(path, line_no, "stage_start must be nonnegative");
        obs.stage_start = static_cast<int>(stage_start);
        const long excluded = parse_long(fields[2], path, line_no, "excluded");
        if (excluded != 0 && excluded != 1) fail(path, line_no, "excluded must be 0 or 1");
        obs.excluded = excluded == 1;
        data.observations.push_back(obs);
    }
    return data;
}

void write_dataset(const std::string& path, const Dataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(path + ": cannot open file for writing");
    out << "ts_tilde,stage_start,excluded\n";
    out << std::setprecision(17);
    for (const auto& obs : data.observations)
        out << obs.ts << ',' << obs.stage_start << ',' << (obs.excluded ? 1 : 0) << '\n';
    if (!out) throw ParseError(path + ": write failed");
}

DesignTemplate read_template(const std::string& path) {
    const std::vector<std::string> lines = read_lines(path);
    const std::string header = "ts_tilde,count";
    if (lines.empty() || trim(lines[0]) != header)
        throw ParseError(path + ":1: expected header '" + header + "'");

    DesignTemplate tmpl;
    for (std::size_t idx = 1; idx < lines.size(); ++idx) {
        const int line_no = static_cast<int>(idx) + 1;
        const std::string line = trim(lines[idx]);
        if (line.empty()) continue;
        if (line == header) fail(path, line_no, "duplicate header");
        const auto fields = split_fields(line);
        if (fields.size() != 2) fail(path, line_no, "expected 2 fields");

        DesignTemplate::Row row;
        row.ts = parse_double(fields[0], path, line_no, "ts_tilde");
        if (!(row.ts >= 0.0)) fail(path, line_no, "ts_tilde must be nonnegative");
        const long count = parse_long(fields[1], path, line_no, "count");
        if (count < 1) fail(path, line_no, "count must be at least 1");
        row.count = static_cast<int>(count);
        tmpl.rows.push_back(row);
    }
    tmpl.validate();
    return tmpl;
}

BinSpec parse_bins(const std::string& spec) {
    std::string text = trim(spec);
    std::string origin = "<inline bins>";
    if (text.empty() || text.front() != '{') {
        origin = spec;
        const std::vector<std::string> lines = read_lines(spec);
        std::ostringstream joined;
        for (const auto& line : lines) joined << line << '\n';
        text = joined.str();
    }

    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin + ": invalid bins JSON: " + e.what());
    }
    if (!parsed.is_object()) throw ParseError(origin + ": bins JSON must be an object");

    BinSpec bins;
    for (const auto& [key, value] : parsed.items()) {
        double ts = 0.0;
        try {
            std::size_t consumed = 0;
            ts = std::stod(key, &consumed);
            if (consumed != key.size()) throw std::invalid_argument(key);
        } catch (const std::exception&) {
            throw ParseError(origin + ": bins key '" + key + "' is not a number");
        }
        if (!value.is_array())
            throw ParseError(origin + ": bins entry for '" + key + "' must be an array of edges");
        std::vector<double> edges;
        for (const auto& item : value) {
            if (!item.is_number())
                throw ParseError(origin + ": bins entry for '" + key + "' has a non-numeric edge");
            edges.push_back(item.get<double>());
        }
        bins.edges_by_ts[ts] = std::move(edges);
    }
    bins.validate();
    return bins;
}

} // namespace ssce
