#pragma once

#include "jdc/errors.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace jdc {

/// One respondent and the attributes of each member of their personal network.
struct EgoNetwork {
    std::string ego_id;
    std::vector<std::map<std::string, std::string>> alters;

    void add_alter(std::map<std::string, std::string> attributes) { alters.push_back(std::move(attributes)); }
};

struct MetricValue {
    std::optional<double> value; // empty when no alter carries the attribute
    std::size_t used = 0;
    std::size_t missing = 0;
};

inline std::size_t network_size(const EgoNetwork &network) { return network.alters.size(); }

namespace detail {

inline std::optional<double> parse_number(const std::string &s) {
    double v = 0.0;
    const char *first = s.data();
    const char *last = s.data() + s.size();
    while (first < last && *first == ' ') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

} // namespace detail

/// Population standard deviation of a numeric attribute across alters.
inline MetricValue continuous_heterogeneity(const EgoNetwork &network, const std::string &attribute) {
    MetricValue out;
    std::vector<double> values;
    for (const auto &alter : network.alters) {
        const auto it = alter.find(attribute);
        if (it == alter.end() || it->second.empty()) {
            ++out.missing;
            continue;
        }
        const auto v = detail::parse_number(it->second);
        if (!v) {
            throw DomainError("ego " + network.ego_id + ": attribute '" + attribute + "' value '" + it->second +
                              "' is not numeric");
        }
        values.push_back(*v);
    }
    out.used = values.size();
    if (values.empty()) {
        return out;
    }
    double mean = 0.0;
    for (double v : values) {
        mean += v;
    }
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    out.value = std::sqrt(ss / static_cast<double>(values.size()));
    return out;
}

/// Index of qualitative variation from category counts: C/(C-1) * (1 - sum p_j^2).
inline double iqv_from_counts(std::span<const std::size_t> counts, int categories) {
    if (categories < 2) {
        throw DomainError("IQV needs at least two categories");
    }
    std::size_t n = 0;
    for (auto c : counts) {
        n += c;
    }
    if (n == 0) {
        throw DomainError("IQV of an empty distribution");
    }
    double sum_sq = 0.0;
    for (auto c : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(n);
        sum_sq += p * p;
    }
    const double cc = categories;
    return cc / (cc - 1.0) * (1.0 - sum_sq);
}

/// IQV of a categorical attribute. The category count is `declared_categories`
/// when given, otherwise max(2, distinct labels observed).
inline MetricValue iqv(const EgoNetwork &network, const std::string &attribute,
                       std::optional<int> declared_categories = std::nullopt) {
    if (declared_categories && *declared_categories < 2) {
        throw DomainError("IQV needs at least two declared categories");
    }
    MetricValue out;
    std::map<std::string, std::size_t> counts;
    for (const auto &alter : network.alters) {
        const auto it = alter.find(attribute);
        if (it == alter.end() || it->second.empty()) {
            ++out.missing;
            continue;
        }
        ++counts[it->second];
        ++out.used;
    }
    if (out.used == 0) {
        return out;
    }
    const int observed = static_cast<int>(counts.size());
    const int c = declared_categories ? *declared_categories : std::max(2, observed);
    if (observed > c) {
        throw DomainError("ego " + network.ego_id + ": more distinct '" + attribute + "' labels than declared categories");
    }
    std::vector<std::size_t> v;
    for (const auto &[label, n] : counts) {
        v.push_back(n);
    }
    out.value = iqv_from_counts(v, c);
    return out;
}

} // namespace jdc
