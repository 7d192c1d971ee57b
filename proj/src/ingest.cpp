#include "tgmem/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "tgmem/errors.hpp"

namespace tgmem {

namespace {

struct RawRow {
    std::uint64_t src;
    std::uint64_t dst;
    double timestamp;
    std::vector<double> features;
};

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& s, std::size_t line, const char* what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\r')) ++pos;
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string("cannot parse ") + what + " from '" + s + "'", line);
    }
}

std::uint64_t parse_vertex(const std::string& s, std::size_t line, const char* what) {
    double v = parse_double(s, line, what);
    if (v < 0.0 || v != std::floor(v)) {
        throw ParseError(std::string(what) + " must be a non-negative integer, got '" + s + "'",
                         line);
    }
    return static_cast<std::uint64_t>(v);
}

bool looks_like_header(const std::string& line) {
    std::vector<std::string> fields = split_fields(line);
    if (fields.empty()) return false;
    try {
        std::size_t pos = 0;
        (void)std::stod(fields[0], &pos);
        return false;
    } catch (const std::exception&) {
        return true;
    }
}

}  // namespace

EventStream ingest_csv(std::istream& in, const std::string& origin) {
    std::vector<RawRow> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t feature_dim = 0;
    bool first_data_row = true;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && looks_like_header(line)) continue;

        std::vector<std::string> fields = split_fields(line);
        if (fields.size() < 4) {
            throw ParseError("expected at least 4 columns, got " + std::to_string(fields.size()),
                             line_no);
        }
        if (first_data_row) {
            feature_dim = fields.size() - 4;
            first_data_row = false;
        } else if (fields.size() - 4 != feature_dim) {
            throw ParseError("expected " + std::to_string(feature_dim + 4) + " columns, got " +
                             std::to_string(fields.size()), line_no);
        }

        RawRow row;
        row.src = parse_vertex(fields[0], line_no, "src");
        row.dst = parse_vertex(fields[1], line_no, "dst");
        row.timestamp = parse_double(fields[2], line_no, "timestamp");
        if (row.timestamp < 0.0 || !std::isfinite(row.timestamp)) {
            throw ParseError("timestamp must be finite and non-negative", line_no);
        }
        (void)parse_double(fields[3], line_no, "state_label");
        row.features.reserve(feature_dim);
        for (std::size_t i = 4; i < fields.size(); ++i) {
            double f = parse_double(fields[i], line_no, "feature");
            if (!std::isfinite(f)) throw ParseError("feature must be finite", line_no);
            row.features.push_back(f);
        }
        rows.push_back(std::move(row));
    }

    if (rows.empty()) {
        throw EmptyStreamError("no events in " + origin);
    }

    // Stable sort keeps same-timestamp rows in file order.
    std::stable_sort(rows.begin(), rows.end(),
                     [](const RawRow& a, const RawRow& b) { return a.timestamp < b.timestamp; });

    EventStream stream;
    stream.feature_dim = feature_dim;
    stream.events.reserve(rows.size());
    std::unordered_map<std::uint64_t, std::uint32_t> compact;
    compact.reserve(rows.size() * 2);
    auto intern = [&](std::uint64_t raw) {
        auto [it, inserted] = compact.emplace(raw, static_cast<std::uint32_t>(compact.size()));
        return it->second;
    };
    for (RawRow& row : rows) {
        Event e;
        e.src = intern(row.src);
        e.dst = intern(row.dst);
        e.timestamp = row.timestamp;
        e.features = std::move(row.features);
        e.polarity = Polarity::positive;
        stream.events.push_back(std::move(e));
    }
    stream.num_vertices = compact.size();
    return stream;
}

EventStream ingest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return ingest_csv(in, path);
}

}  // namespace tgmem
