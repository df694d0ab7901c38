#pragma once

#include "jdc/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace jdc {

/// Name of the constant column prepended to a design matrix.
inline const std::string intercept_name = "Constant";

/// Maps a travel time in hours to its 1-based ordinal category. Cut points
/// are inclusive on the lower category: with bounds {1, 3}, 1.0 -> 1,
/// 3.0 -> 2, 3.5 -> 3.
inline int categorize_travel_time(double hours, std::span<const double> bounds) {
    if (!(hours > 0.0) || !std::isfinite(hours)) {
        throw DomainError("travel time must be positive and finite");
    }
    for (std::size_t k = 1; k < bounds.size(); ++k) {
        if (!(bounds[k] > bounds[k - 1])) {
            throw DomainError("category bounds must be strictly increasing");
        }
    }
    const auto it = std::lower_bound(bounds.begin(), bounds.end(), hours);
    return static_cast<int>(it - bounds.begin()) + 1;
}

inline bool is_binary(std::span<const double> column) {
    return std::all_of(column.begin(), column.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

/// Elementwise AND of two 0/1 columns.
inline std::vector<double> make_interaction(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DomainError("interaction columns differ in length");
    }
    if (!is_binary(a) || !is_binary(b)) {
        throw DomainError("interaction requires binary (0/1) columns");
    }
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = a[i] * b[i];
    }
    return out;
}

/// 1 where value >= cutoff ("15 or over"), else 0.
inline std::vector<double> make_threshold_indicator(std::span<const double> values, double cutoff) {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw DomainError("threshold indicator requires finite values");
        }
        out[i] = values[i] >= cutoff ? 1.0 : 0.0;
    }
    return out;
}

enum class TransformKind { interaction, threshold };

/// Derived covariate declared in a model specification.
struct Transform {
    std::string name;
    TransformKind kind = TransformKind::interaction;
    std::vector<std::string> inputs;
    double cutoff = 0.0; // threshold only
};

struct EstimationSettings {
    int starts = 5;
    std::uint64_t seed = 12345;
    double gradient_tolerance = 1e-6;
    double relative_ll_tolerance = 1e-9;
    int stall_iterations = 3;
    int max_iterations = 2000;
    double start_perturbation = 0.5;
};

struct ModelSpec {
    std::vector<std::string> duration_covariates;
    std::vector<std::string> ordinal_covariates;
    bool include_duration_intercept = true;
    bool include_ordinal_intercept = true;
    std::vector<double> category_bounds{1.0, 3.0};
    std::vector<Transform> transforms;
    EstimationSettings estimation;

    int n_categories() const { return static_cast<int>(category_bounds.size()) + 1; }

    std::vector<std::string> duration_columns() const {
        std::vector<std::string> cols;
        if (include_duration_intercept) {
            cols.push_back(intercept_name);
        }
        cols.insert(cols.end(), duration_covariates.begin(), duration_covariates.end());
        return cols;
    }

    std::vector<std::string> ordinal_columns() const {
        std::vector<std::string> cols;
        if (include_ordinal_intercept) {
            cols.push_back(intercept_name);
        }
        cols.insert(cols.end(), ordinal_covariates.begin(), ordinal_covariates.end());
        return cols;
    }

    void validate() const {
        auto check_unique = [](const std::vector<std::string> &names, const char *what) {
            std::set<std::string> seen;
            for (const auto &n : names) {
                if (n.empty()) {
                    throw ConfigError(std::string("empty covariate name in ") + what);
                }
                if (n == intercept_name) {
                    throw ConfigError("'" + intercept_name + "' is reserved for the intercept");
                }
                if (!seen.insert(n).second) {
                    throw ConfigError(std::string("duplicate covariate '") + n + "' in " + what);
                }
            }
        };
        check_unique(duration_covariates, "duration_covariates");
        check_unique(ordinal_covariates, "ordinal_covariates");
        if (category_bounds.size() != 2) {
            throw ConfigError("the joint model has exactly three ordinal categories (two cut points)");
        }
        for (std::size_t k = 0; k < category_bounds.size(); ++k) {
            if (!(category_bounds[k] > 0.0) || (k > 0 && !(category_bounds[k] > category_bounds[k - 1]))) {
                throw ConfigError("category_bounds must be positive and strictly increasing");
            }
        }
        for (const auto &t : transforms) {
            const std::size_t want = t.kind == TransformKind::interaction ? 2 : 1;
            if (t.name.empty() || t.inputs.size() != want) {
                throw ConfigError("malformed transform '" + t.name + "'");
            }
        }
        if (estimation.starts < 1 || estimation.max_iterations < 1) {
            throw ConfigError("estimation needs at least one start and one iteration");
        }
    }
};

struct Observation {
    std::string id;
    double departure_hours = 0.0;
    int travel_category = 1;
    std::map<std::string, double> covariates;
};

/// Column-oriented raw input; empty optionals are missing cells.
struct RawTable {
    std::vector<std::string> ids;
    std::vector<std::optional<double>> departure_hours;
    std::vector<std::optional<int>> travel_category;
    std::map<std::string, std::vector<std::optional<double>>> columns;
    /// Source line of each row (1-based, header is line 1), for diagnostics.
    std::vector<std::size_t> source_lines;

    std::size_t rows() const { return ids.size(); }

    static RawTable from_observations(const std::vector<Observation> &obs) {
        RawTable t;
        std::set<std::string> names;
        for (const auto &o : obs) {
            for (const auto &[k, v] : o.covariates) {
                names.insert(k);
            }
        }
        for (const auto &n : names) {
            t.columns[n].reserve(obs.size());
        }
        for (std::size_t i = 0; i < obs.size(); ++i) {
            t.ids.push_back(obs[i].id);
            t.departure_hours.emplace_back(obs[i].departure_hours);
            t.travel_category.emplace_back(obs[i].travel_category);
            t.source_lines.push_back(i + 2);
            for (const auto &n : names) {
                auto it = obs[i].covariates.find(n);
                t.columns[n].push_back(it == obs[i].covariates.end() ? std::nullopt : std::optional<double>(it->second));
            }
        }
        return t;
    }
};

/// Row-aligned estimation data. Immutable once built.
struct Dataset {
    std::vector<std::string> ids;
    Eigen::VectorXd departure_hours;
    std::vector<int> travel_category;
    Eigen::MatrixXd Y; // duration design, N x p
    Eigen::MatrixXd X; // ordinal design, N x q
    std::vector<std::string> duration_columns;
    std::vector<std::string> ordinal_columns;
    std::vector<std::size_t> dropped_lines;

    std::size_t size() const { return ids.size(); }
    std::size_t dropped() const { return dropped_lines.size(); }

    Observation observation(std::size_t i) const {
        Observation o{ids[i], departure_hours[i], travel_category[i], {}};
        for (std::size_t j = 0; j < duration_columns.size(); ++j) {
            if (duration_columns[j] != intercept_name) {
                o.covariates[duration_columns[j]] = Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
        }
        for (std::size_t j = 0; j < ordinal_columns.size(); ++j) {
            if (ordinal_columns[j] != intercept_name) {
                o.covariates[ordinal_columns[j]] = X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
        }
        return o;
    }

    std::array<std::size_t, 3> category_counts() const {
        std::array<std::size_t, 3> counts{};
        for (int c : travel_category) {
            ++counts[static_cast<std::size_t>(c - 1)];
        }
        return counts;
    }

    /// Concatenation of this dataset with itself `k` times.
    Dataset replicated(int k) const {
        Dataset out;
        const auto n = static_cast<Eigen::Index>(size());
        out.duration_columns = duration_columns;
        out.ordinal_columns = ordinal_columns;
        out.departure_hours.resize(n * k);
        out.Y.resize(n * k, Y.cols());
        out.X.resize(n * k, X.cols());
        for (int r = 0; r < k; ++r) {
            out.departure_hours.segment(r * n, n) = departure_hours;
            out.Y.middleRows(r * n, n) = Y;
            out.X.middleRows(r * n, n) = X;
            out.ids.insert(out.ids.end(), ids.begin(), ids.end());
            out.travel_category.insert(out.travel_category.end(), travel_category.begin(), travel_category.end());
        }
        return out;
    }

    /// Rows reordered so that row i of the result is row order[i] of this dataset.
    Dataset permuted(std::span<const std::size_t> order) const {
        Dataset out;
        out.duration_columns = duration_columns;
        out.ordinal_columns = ordinal_columns;
        out.departure_hours.resize(departure_hours.size());
        out.Y.resize(Y.rows(), Y.cols());
        out.X.resize(X.rows(), X.cols());
        for (std::size_t i = 0; i < order.size(); ++i) {
            const auto src = static_cast<Eigen::Index>(order[i]);
            const auto dst = static_cast<Eigen::Index>(i);
            out.ids.push_back(ids[order[i]]);
            out.travel_category.push_back(travel_category[order[i]]);
            out.departure_hours[dst] = departure_hours[src];
            out.Y.row(dst) = Y.row(src);
            out.X.row(dst) = X.row(src);
        }
        return out;
    }
};

namespace detail {

using OptColumn = std::vector<std::optional<double>>;

inline OptColumn apply_transform(const Transform &t, const std::map<std::string, OptColumn> &cols, std::size_t rows) {
    auto fetch = [&](const std::string &name) -> const OptColumn & {
        auto it = cols.find(name);
        if (it == cols.end()) {
            throw ConfigError("transform '" + t.name + "' references unknown column '" + name + "'");
        }
        return it->second;
    };
    OptColumn out(rows);
    if (t.kind == TransformKind::interaction) {
        const auto &a = fetch(t.inputs[0]);
        const auto &b = fetch(t.inputs[1]);
        for (std::size_t i = 0; i < rows; ++i) {
            if (a[i] && b[i]) {
                const double av = *a[i];
                const double bv = *b[i];
                out[i] = make_interaction(std::span(&av, 1), std::span(&bv, 1))[0];
            }
        }
    } else {
        const auto &a = fetch(t.inputs[0]);
        for (std::size_t i = 0; i < rows; ++i) {
            if (a[i] && std::isfinite(*a[i])) {
                out[i] = *a[i] >= t.cutoff ? 1.0 : 0.0;
            }
        }
    }
    return out;
}

} // namespace detail

/// Resolves declared covariates (raw or derived by transforms), drops rows with
/// any missing required value and assembles the two design matrices.
inline Dataset build_design_matrices(const ModelSpec &spec, const RawTable &raw) {
    spec.validate();
    const std::size_t rows = raw.rows();
    if (raw.departure_hours.size() != rows || raw.travel_category.size() != rows) {
        throw DataError("raw table columns are not row-aligned");
    }

    std::map<std::string, detail::OptColumn> cols = raw.columns;
    for (const auto &[name, col] : cols) {
        if (col.size() != rows) {
            throw DataError("column '" + name + "' is not row-aligned");
        }
    }
    for (const auto &t : spec.transforms) {
        cols[t.name] = detail::apply_transform(t, cols, rows);
    }

    const auto dur_cols = spec.duration_columns();
    const auto ord_cols = spec.ordinal_columns();
    auto resolve = [&](const std::vector<std::string> &names) {
        std::vector<const detail::OptColumn *> out;
        for (const auto &n : names) {
            if (n == intercept_name) {
                out.push_back(nullptr);
                continue;
            }
            auto it = cols.find(n);
            if (it == cols.end()) {
                throw ConfigError("covariate '" + n + "' is neither a data column nor a declared transform");
            }
            out.push_back(&it->second);
        }
        return out;
    };
    const auto dur_src = resolve(dur_cols);
    const auto ord_src = resolve(ord_cols);

    auto line_of = [&](std::size_t i) { return i < raw.source_lines.size() ? raw.source_lines[i] : i + 2; };
    auto complete = [](const std::vector<const detail::OptColumn *> &src, std::size_t i) {
        return std::all_of(src.begin(), src.end(), [i](const detail::OptColumn *c) {
            return c == nullptr || ((*c)[i] && std::isfinite(*(*c)[i]));
        });
    };

    std::vector<std::size_t> keep;
    Dataset ds;
    for (std::size_t i = 0; i < rows; ++i) {
        const bool ok = raw.departure_hours[i] && std::isfinite(*raw.departure_hours[i]) && raw.travel_category[i] &&
                        complete(dur_src, i) && complete(ord_src, i);
        if (!ok) {
            ds.dropped_lines.push_back(line_of(i));
            continue;
        }
        if (!(*raw.departure_hours[i] > 0.0)) {
            throw DataError("line " + std::to_string(line_of(i)) + ": departure_hours must be positive");
        }
        const int cat = *raw.travel_category[i];
        if (cat < 1 || cat > spec.n_categories()) {
            throw DataError("line " + std::to_string(line_of(i)) + ": travel_category out of range");
        }
        keep.push_back(i);
    }
    if (keep.empty()) {
        throw DataError("no complete observations remain after listwise deletion");
    }

    const auto n = static_cast<Eigen::Index>(keep.size());
    ds.duration_columns = dur_cols;
    ds.ordinal_columns = ord_cols;
    ds.departure_hours.resize(n);
    ds.Y.resize(n, static_cast<Eigen::Index>(dur_cols.size()));
    ds.X.resize(n, static_cast<Eigen::Index>(ord_cols.size()));
    for (Eigen::Index r = 0; r < n; ++r) {
        const std::size_t i = keep[static_cast<std::size_t>(r)];
        ds.ids.push_back(raw.ids[i]);
        ds.departure_hours[r] = *raw.departure_hours[i];
        ds.travel_category.push_back(*raw.travel_category[i]);
        for (std::size_t j = 0; j < dur_src.size(); ++j) {
            ds.Y(r, static_cast<Eigen::Index>(j)) = dur_src[j] ? *(*dur_src[j])[i] : 1.0;
        }
        for (std::size_t j = 0; j < ord_src.size(); ++j) {
            ds.X(r, static_cast<Eigen::Index>(j)) = ord_src[j] ? *(*ord_src[j])[i] : 1.0;
        }
    }
    return ds;
}

} // namespace jdc
