#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cdp/bicluster.hpp"
#include "cdp/log.hpp"

namespace cdp {

/// Explicit set of (row, col) cells.
using CellSet = std::set<std::pair<std::size_t, std::size_t>>;

inline CellSet cells_of(const Bicluster& b) {
    CellSet s;
    for (auto r : b.rows)
        for (auto c : b.cols) s.emplace(r, c);
    return s;
}

/// |a ∩ b| / |a ∪ b|, and 0 when both are empty.
inline double jaccard_pair(const CellSet& a, const CellSet& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++inter;
            ++ia;
            ++ib;
        }
    }
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

namespace detail {

inline std::size_t sorted_intersection_size(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::size_t n = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++n;
            ++ia;
            ++ib;
        }
    }
    return n;
}

}  // namespace detail

/// Cell-set Jaccard of two biclusters without materializing the cells: the
/// intersection of two products is the product of the intersections.
inline double jaccard_pair(const Bicluster& a, const Bicluster& b) {
    const std::size_t na = a.cell_count(), nb = b.cell_count();
    if (na == 0 && nb == 0) return 0.0;
    const std::size_t inter =
        detail::sorted_intersection_size(a.rows, b.rows) * detail::sorted_intersection_size(a.cols, b.cols);
    return static_cast<double>(inter) / static_cast<double>(na + nb - inter);
}

/// Average over `from` of the best match in `to`.
inline double directed_jaccard(const BiclusterSet& from, const BiclusterSet& to) {
    double sum = 0.0;
    for (const auto& a : from) {
        double best = 0.0;
        for (const auto& b : to) best = std::max(best, jaccard_pair(a, b));
        sum += best;
    }
    return sum / static_cast<double>(from.size());
}

/// Minimum of the two directed average-best-match scores. An empty set on
/// either side scores 0.
inline double jaccard_score(const BiclusterSet& b1, const BiclusterSet& b2) {
    if (b1.empty() || b2.empty()) {
        log::warn("jaccard_score: empty bicluster set scores 0");
        return 0.0;
    }
    return std::min(directed_jaccard(b1, b2), directed_jaccard(b2, b1));
}

/// One scored run of one method on one synthetic instance.
struct RunResult {
    std::string case_name;
    std::string method = "cdp";
    std::uint64_t seed = 0;
    double jaccard = 0.0;
    double runtime_s = 0.0;
    std::size_t n_biclusters = 0;
    bool failed = false;
};

struct ReportRow {
    std::string case_name;
    std::string method;
    std::size_t seeds = 0;
    double mean_jaccard = 0.0;
    /// Sample standard deviation (n - 1 denominator); 0 for a single run.
    double sd_jaccard = 0.0;
    double mean_runtime_s = 0.0;
    std::size_t failures = 0;
};

/// Groups runs by (case, method), sorted by key, so the report does not
/// depend on the order the runs finished in. Throws on an empty list.
inline std::vector<ReportRow> benchmark_report(const std::vector<RunResult>& runs) {
    if (runs.empty()) throw std::invalid_argument("nothing to report");
    std::map<std::pair<std::string, std::string>, std::vector<const RunResult*>> groups;
    for (const auto& r : runs) groups[{r.case_name, r.method}].push_back(&r);
    std::vector<ReportRow> rows;
    for (auto& [key, group] : groups) {
        std::sort(group.begin(), group.end(), [](const RunResult* a, const RunResult* b) { return a->seed < b->seed; });
        ReportRow row{key.first, key.second, group.size()};
        for (const auto* r : group) {
            row.mean_jaccard += r->jaccard;
            row.mean_runtime_s += r->runtime_s;
            row.failures += r->failed;
        }
        const auto n = static_cast<double>(group.size());
        row.mean_jaccard /= n;
        row.mean_runtime_s /= n;
        if (group.size() > 1) {
            double ss = 0.0;
            for (const auto* r : group) ss += (r->jaccard - row.mean_jaccard) * (r->jaccard - row.mean_jaccard);
            row.sd_jaccard = std::sqrt(ss / (n - 1.0));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_report_csv(const std::vector<ReportRow>& rows, std::ostream& out) {
    out << "case,method,seeds,mean_jaccard,sd_jaccard,mean_runtime_s\n";
    for (const auto& r : rows)
        out << r.case_name << ',' << r.method << ',' << r.seeds << ',' << r.mean_jaccard << ',' << r.sd_jaccard << ','
            << r.mean_runtime_s << '\n';
}

inline nlohmann::json report_json(const std::vector<ReportRow>& rows, const std::vector<RunResult>& runs) {
    nlohmann::json j;
    j["summary"] = nlohmann::json::array();
    for (const auto& r : rows)
        j["summary"].push_back({{"case", r.case_name},
                                {"method", r.method},
                                {"seeds", r.seeds},
                                {"mean_jaccard", r.mean_jaccard},
                                {"sd_jaccard", r.sd_jaccard},
                                {"mean_runtime_s", r.mean_runtime_s},
                                {"failures", r.failures}});
    j["runs"] = nlohmann::json::array();
    for (const auto& r : runs)
        j["runs"].push_back({{"case", r.case_name},
                             {"method", r.method},
                             {"seed", r.seed},
                             {"jaccard", r.jaccard},
                             {"runtime_s", r.runtime_s},
                             {"n_biclusters", r.n_biclusters},
                             {"failed", r.failed}});
    return j;
}

}  // namespace cdp
