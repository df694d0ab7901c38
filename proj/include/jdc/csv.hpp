#pragma once

#include "jdc/errors.hpp"
#include "jdc/model_core.hpp"
#include "jdc/network.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace jdc::csv {

/// Splits one CSV record. Double quotes delimit fields containing commas;
/// a doubled quote inside a quoted field is a literal quote.
inline std::vector<std::string> split_record(const std::string &line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(std::move(field));
    return out;
}

inline std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> lines; // source line of each row

    std::optional<std::size_t> column(const std::string &name) const {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (header[j] == name) {
                return j;
            }
        }
        return std::nullopt;
    }
};

inline Table read_table(std::istream &in) {
    Table t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
            line.erase(0, 3);
        }
        if (trim(line).empty()) {
            continue;
        }
        auto rec = split_record(line);
        for (auto &f : rec) {
            f = trim(f);
        }
        if (t.header.empty()) {
            t.header = std::move(rec);
            continue;
        }
        if (rec.size() != t.header.size()) {
            throw DataError("line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                            " fields, found " + std::to_string(rec.size()));
        }
        t.rows.push_back(std::move(rec));
        t.lines.push_back(lineno);
    }
    if (t.header.empty()) {
        throw DataError("CSV input has no header row");
    }
    return t;
}

inline Table read_table(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path + "'");
    }
    return read_table(in);
}

inline std::optional<double> parse_cell(const std::string &cell, std::size_t line, const std::string &column) {
    if (cell.empty()) {
        return std::nullopt;
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw DataError("line " + std::to_string(line) + ": column '" + column + "': cannot parse '" + cell +
                        "' as a number");
    }
    return v;
}

/// 17 significant digits, enough for an exact binary64 round trip.
inline std::string format_exact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct LoadOptions {
    /// Subtracted from departure_raw when departure_hours is absent.
    std::optional<double> departure_origin;
};

/// Raw columns a model needs from the file (covariates not produced by transforms).
inline std::vector<std::string> required_covariates(const ModelSpec &spec) {
    std::set<std::string> derived;
    std::vector<std::string> out;
    std::set<std::string> seen;
    auto need = [&](const std::string &n) {
        if (!derived.count(n) && seen.insert(n).second) {
            out.push_back(n);
        }
    };
    for (const auto &t : spec.transforms) {
        for (const auto &in : t.inputs) {
            need(in);
        }
        derived.insert(t.name);
    }
    for (const auto &c : spec.duration_covariates) {
        need(c);
    }
    for (const auto &c : spec.ordinal_covariates) {
        need(c);
    }
    return out;
}

/// Builds a Dataset from a header-addressed table. Travel hours, when given
/// instead of categories, are categorized with the model cut points.
inline Dataset load_table(const Table &t, const ModelSpec &spec, const LoadOptions &opt = {}) {
    spec.validate();
    const auto id_col = t.column("id");
    if (!id_col) {
        throw SchemaError("id");
    }
    const auto hours_col = t.column("departure_hours");
    const auto raw_col = t.column("departure_raw");
    if (!hours_col && !(raw_col && opt.departure_origin)) {
        throw SchemaError(raw_col ? "departure_hours (or a declared departure origin)" : "departure_hours");
    }
    const auto cat_col = t.column("travel_category");
    const auto travel_col = t.column("travel_hours");
    if (!cat_col && !travel_col) {
        throw SchemaError("travel_category");
    }

    RawTable raw;
    const auto covs = required_covariates(spec);
    std::vector<std::size_t> cov_idx;
    for (const auto &c : covs) {
        const auto j = t.column(c);
        if (!j) {
            throw SchemaError(c);
        }
        cov_idx.push_back(*j);
        raw.columns[c].reserve(t.rows.size());
    }

    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto &row = t.rows[r];
        const std::size_t line = t.lines[r];
        raw.ids.push_back(row[*id_col]);
        raw.source_lines.push_back(line);
        std::optional<double> hours;
        if (hours_col) {
            hours = parse_cell(row[*hours_col], line, "departure_hours");
        } else if (auto v = parse_cell(row[*raw_col], line, "departure_raw")) {
            hours = *v - *opt.departure_origin;
        }
        raw.departure_hours.push_back(hours);

        std::optional<int> cat;
        if (cat_col) {
            if (auto v = parse_cell(row[*cat_col], line, "travel_category")) {
                if (*v != std::floor(*v)) {
                    throw DataError("line " + std::to_string(line) + ": travel_category must be an integer");
                }
                cat = static_cast<int>(*v);
            }
        }
        if (!cat && travel_col) {
            if (auto v = parse_cell(row[*travel_col], line, "travel_hours")) {
                try {
                    cat = categorize_travel_time(*v, spec.category_bounds);
                } catch (const DomainError &e) {
                    throw DataError("line " + std::to_string(line) + ": " + e.what());
                }
            }
        }
        raw.travel_category.push_back(cat);
        for (std::size_t k = 0; k < covs.size(); ++k) {
            raw.columns[covs[k]].push_back(parse_cell(row[cov_idx[k]], line, covs[k]));
        }
    }
    return build_design_matrices(spec, raw);
}

inline Dataset load_csv(const std::string &path, const ModelSpec &spec, const LoadOptions &opt = {}) {
    return load_table(read_table(path), spec, opt);
}

/// Writes the schema load_csv reads: id, departure_hours, travel_category and
/// every non-intercept covariate column (duration columns first).
inline void write_csv(std::ostream &out, const Dataset &data) {
    std::vector<std::string> names;
    std::vector<std::pair<const Eigen::MatrixXd *, Eigen::Index>> src;
    std::set<std::string> seen;
    auto collect = [&](const std::vector<std::string> &cols, const Eigen::MatrixXd &m) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (cols[j] != intercept_name && seen.insert(cols[j]).second) {
                names.push_back(cols[j]);
                src.emplace_back(&m, static_cast<Eigen::Index>(j));
            }
        }
    };
    collect(data.duration_columns, data.Y);
    collect(data.ordinal_columns, data.X);

    auto quote = [](const std::string &s) {
        if (s.find_first_of(",\"") == std::string::npos) {
            return s;
        }
        std::string q = "\"";
        for (char c : s) {
            q += c == '"' ? std::string("\"\"") : std::string(1, c);
        }
        return q + "\"";
    };
    out << "id,departure_hours,travel_category";
    for (const auto &n : names) {
        out << ',' << quote(n);
    }
    out << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        out << quote(data.ids[i]) << ',' << format_exact(data.departure_hours[r]) << ',' << data.travel_category[i];
        for (const auto &[m, j] : src) {
            out << ',' << format_exact((*m)(r, j));
        }
        out << '\n';
    }
}

/// Long-format rosters: ego_id, alter_index, attribute, value. A row with an
/// empty alter_index declares an ego without alters.
inline std::vector<EgoNetwork> load_rosters(std::istream &in) {
    const Table t = read_table(in);
    const auto ego = t.column("ego_id");
    const auto alter = t.column("alter_index");
    const auto attr = t.column("attribute");
    const auto value = t.column("value");
    if (!ego) {
        throw SchemaError("ego_id");
    }
    if (!alter) {
        throw SchemaError("alter_index");
    }
    if (!attr) {
        throw SchemaError("attribute");
    }
    if (!value) {
        throw SchemaError("value");
    }
    std::vector<EgoNetwork> out;
    std::map<std::string, std::size_t> ego_pos;
    std::vector<std::map<std::string, std::size_t>> alter_pos;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto &row = t.rows[r];
        const std::string &id = row[*ego];
        if (id.empty()) {
            throw DataError("line " + std::to_string(t.lines[r]) + ": empty ego_id");
        }
        auto [it, inserted] = ego_pos.emplace(id, out.size());
        if (inserted) {
            out.push_back(EgoNetwork{id, {}});
            alter_pos.emplace_back();
        }
        EgoNetwork &net = out[it->second];
        const std::string &a = row[*alter];
        if (a.empty()) {
            continue;
        }
        auto [ait, ainserted] = alter_pos[it->second].emplace(a, net.alters.size());
        if (ainserted) {
            net.alters.emplace_back();
        }
        if (!row[*attr].empty()) {
            net.alters[ait->second][row[*attr]] = row[*value];
        }
    }
    return out;
}

inline std::vector<EgoNetwork> load_rosters(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path + "'");
    }
    return load_rosters(in);
}

} // namespace jdc::csv
