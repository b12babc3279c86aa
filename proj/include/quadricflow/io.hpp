#pragma once

// File formats.
//
// ParamsFile (JSON):
//   { "d": 2, "e": 1, "l": 2,
//     "activation": {"kind": "relu"} | {"kind": "leaky_relu", "gamma": 0.1},
//     "w1": [[..d..], ..l rows..], "w2": [[..l..], ..e rows..],
//     "b1": [..l..], "b2": [..e..] }          (b1/b2 optional, together)
//
// TrajectoryFile (CSV): header step,loss,drift,c_1..c_l[,s_1..s_m]; one row per record.
// Dataset CSV: header row, then d feature columns followed by e target columns.
// Reals are written with 17 significant digits; separator ',', decimal point '.', '\n' endings.

#include <cstdio>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "core_net.hpp"
#include "gradflow.hpp"

namespace qflow::io {

using nlohmann::json;

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << content;
    if (!out) throw ParseError("write to '" + path + "' failed");
}

namespace detail {

inline double real_of(const json& v, const std::string& where) {
    if (!v.is_number()) throw ParseError(where + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ParseError(where + ": value is not finite");
    return x;
}

inline std::size_t nat_of(const json& obj, const char* key) {
    if (!obj.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
    const json& v = obj.at(key);
    if (!v.is_number_unsigned()) throw ParseError(std::string("'") + key + "' must be a natural number");
    return v.get<std::size_t>();
}

inline Matrix matrix_of(const json& obj, const char* key, std::size_t rows, std::size_t cols) {
    if (!obj.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
    const json& v = obj.at(key);
    if (!v.is_array() || v.size() != rows)
        throw ParseError(std::string("'") + key + "' must have " + std::to_string(rows) + " rows");
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const json& r = v[i];
        if (!r.is_array() || r.size() != cols)
            throw ParseError(std::string("'") + key + "' row " + std::to_string(i) + " must have " +
                             std::to_string(cols) + " entries");
        for (std::size_t j = 0; j < cols; ++j)
            m(i, j) = real_of(r[j], std::string(key) + "[" + std::to_string(i) + "][" +
                                        std::to_string(j) + "]");
    }
    return m;
}

inline Vector vector_of(const json& v, const char* key, std::size_t n) {
    if (!v.is_array() || v.size() != n)
        throw ParseError(std::string("'") + key + "' must have " + std::to_string(n) + " entries");
    Vector out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = real_of(v[i], std::string(key) + "[" + std::to_string(i) + "]");
    return out;
}

inline json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i)
        rows.push_back(json(std::vector<double>(m.row(i).begin(), m.row(i).end())));
    return rows;
}

} // namespace detail

inline Params params_from_json(const json& doc) {
    if (!doc.is_object()) throw ParseError("parameter file must hold a JSON object");
    const std::size_t d = detail::nat_of(doc, "d");
    const std::size_t e = detail::nat_of(doc, "e");
    const std::size_t l = detail::nat_of(doc, "l");
    if (d == 0 || e == 0 || l == 0) throw ParseError("d, e and l must be >= 1");
    Params p;
    if (doc.contains("activation")) {
        const json& a = doc.at("activation");
        if (!a.is_object() || !a.contains("kind") || !a.at("kind").is_string())
            throw ParseError("'activation' must be an object with a string 'kind'");
        const std::string kind = a.at("kind").get<std::string>();
        if (kind == "relu") {
            p.activation = Activation::relu();
        } else if (kind == "leaky_relu") {
            if (!a.contains("gamma")) throw ParseError("leaky_relu needs 'gamma'");
            const double g = detail::real_of(a.at("gamma"), "activation.gamma");
            if (!(g >= 0.0 && g <= 1.0)) throw ParseError("activation.gamma must lie in [0, 1]");
            p.activation = Activation::leaky_relu(g);
        } else {
            throw ParseError("unknown activation kind '" + kind + "'");
        }
    }
    p.w1 = detail::matrix_of(doc, "w1", l, d);
    p.w2 = detail::matrix_of(doc, "w2", e, l);
    const bool has_b1 = doc.contains("b1"), has_b2 = doc.contains("b2");
    if (has_b1 != has_b2) throw ParseError("'b1' and 'b2' must be given together");
    if (has_b1) {
        p.b1 = detail::vector_of(doc.at("b1"), "b1", l);
        p.b2 = detail::vector_of(doc.at("b2"), "b2", e);
    }
    return p;
}

inline json params_to_json(const Params& p) {
    json doc;
    doc["d"] = p.input_dim();
    doc["e"] = p.output_dim();
    doc["l"] = p.hidden();
    if (p.activation.kind == Activation::Kind::relu)
        doc["activation"] = {{"kind", "relu"}};
    else
        doc["activation"] = {{"kind", "leaky_relu"}, {"gamma", p.activation.gamma}};
    doc["w1"] = detail::matrix_json(p.w1);
    doc["w2"] = detail::matrix_json(p.w2);
    if (p.b1) {
        doc["b1"] = *p.b1;
        doc["b2"] = *p.b2;
    }
    return doc;
}

inline Params parse_params(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    return params_from_json(doc);
}

inline std::string serialize_params(const Params& p) { return params_to_json(p).dump(2) + "\n"; }

inline Params load_params(const std::string& path) { return parse_params(read_file(path)); }

inline void save_params(const std::string& path, const Params& p) {
    write_file(path, serialize_params(p));
}

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        cells.emplace_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

inline double parse_real(const std::string& cell, std::size_t line_no) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &used);
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": '" + cell + "' is not a number");
    }
    if (used != cell.size() || !std::isfinite(v))
        throw ParseError("line " + std::to_string(line_no) + ": '" + cell + "' is not a finite number");
    return v;
}

/// Header plus numeric rows; blank lines are skipped, '\r' before '\n' is tolerated.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline CsvTable parse_numeric_csv(std::string_view text) {
    CsvTable t;
    std::size_t pos = 0, line_no = 0;
    bool have_header = false;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(t.header.size()) + " columns, found " +
                             std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_real(c, line_no));
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw ParseError("CSV has no header row");
    return t;
}

} // namespace detail

/// Dataset from CSV text: the first d columns are inputs, the remaining ones targets.
inline Dataset parse_dataset(std::string_view text, std::size_t d) {
    const auto t = detail::parse_numeric_csv(text);
    if (t.header.size() <= d)
        throw ParseError("dataset needs " + std::to_string(d) + " feature columns plus targets");
    if (t.rows.empty()) throw ParseError("dataset has no rows");
    const std::size_t e = t.header.size() - d;
    Dataset data{Matrix(t.rows.size(), d), Matrix(t.rows.size(), e)};
    for (std::size_t n = 0; n < t.rows.size(); ++n) {
        for (std::size_t i = 0; i < d; ++i) data.inputs(n, i) = t.rows[n][i];
        for (std::size_t j = 0; j < e; ++j) data.targets(n, j) = t.rows[n][d + j];
    }
    return data;
}

inline Dataset load_dataset(const std::string& path, std::size_t d) {
    return parse_dataset(read_file(path), d);
}

inline std::string serialize_dataset(const Dataset& data) {
    std::string out;
    for (std::size_t i = 0; i < data.inputs.cols(); ++i) out += "x_" + std::to_string(i + 1) + ",";
    for (std::size_t j = 0; j < data.targets.cols(); ++j)
        out += "y_" + std::to_string(j + 1) + (j + 1 < data.targets.cols() ? "," : "\n");
    for (std::size_t n = 0; n < data.size(); ++n) {
        for (double v : data.inputs.row(n)) out += format_real(v) + ",";
        const auto y = data.targets.row(n);
        for (std::size_t j = 0; j < y.size(); ++j)
            out += format_real(y[j]) + (j + 1 < y.size() ? "," : "\n");
    }
    return out;
}

inline std::string serialize_trajectory(const std::vector<TrajectoryRecord>& records) {
    if (records.empty()) return "step,loss,drift\n";
    const std::size_t l = records.front().charges.size();
    const std::size_t m = records.front().sign ? records.front().sign->size() : 0;
    std::string out = "step,loss,drift";
    for (std::size_t k = 1; k <= l; ++k) out += ",c_" + std::to_string(k);
    for (std::size_t i = 1; i <= m; ++i) out += ",s_" + std::to_string(i);
    out += "\n";
    for (const auto& r : records) {
        out += std::to_string(r.step) + "," + format_real(r.loss) + "," + format_real(r.max_charge_drift);
        for (double c : r.charges) out += "," + format_real(c);
        if (r.sign)
            for (int s : r.sign->s) out += "," + std::to_string(s);
        out += "\n";
    }
    return out;
}

/// Parses a TrajectoryFile back into records (params are not stored in the file).
inline std::vector<TrajectoryRecord> parse_trajectory(std::string_view text) {
    const auto t = detail::parse_numeric_csv(text);
    if (t.header.size() < 3 || t.header[0] != "step" || t.header[1] != "loss" || t.header[2] != "drift")
        throw ParseError("trajectory header must start with step,loss,drift");
    std::size_t l = 0, m = 0;
    for (std::size_t i = 3; i < t.header.size(); ++i) {
        if (t.header[i].rfind("c_", 0) == 0) {
            if (m != 0) throw ParseError("charge columns must precede sign columns");
            ++l;
        } else if (t.header[i].rfind("s_", 0) == 0) {
            ++m;
        } else {
            throw ParseError("unexpected trajectory column '" + t.header[i] + "'");
        }
    }
    std::vector<TrajectoryRecord> records;
    for (const auto& row : t.rows) {
        TrajectoryRecord r;
        if (row[0] < 0.0 || row[0] != std::floor(row[0])) throw ParseError("step must be a natural number");
        r.step = static_cast<std::size_t>(row[0]);
        r.loss = row[1];
        r.max_charge_drift = row[2];
        r.charges.assign(row.begin() + 3, row.begin() + 3 + static_cast<std::ptrdiff_t>(l));
        if (m > 0) {
            SignVector s;
            for (std::size_t i = 0; i < m; ++i) {
                const double v = row[3 + l + i];
                if (v != 1.0 && v != -1.0) throw ParseError("sign entries must be 1 or -1");
                s.s.push_back(static_cast<int>(v));
            }
            r.sign = std::move(s);
        }
        if (!records.empty() && r.step <= records.back().step)
            throw ParseError("trajectory steps must be strictly increasing");
        records.push_back(std::move(r));
    }
    return records;
}

} // namespace qflow::io
