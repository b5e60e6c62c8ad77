#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdp/countmat.hpp"

namespace cdp {

/// A row set × column set with the weight of the topic pair it came from.
/// Row and column indices are kept sorted and unique.
struct Bicluster {
    std::vector<std::size_t> rows;
    std::vector<std::size_t> cols;
    double weight = 0.0;
    /// (row topic, column topic); absent for ground truth and external tools.
    std::optional<std::array<std::size_t, 2>> topic_pair;

    std::size_t cell_count() const noexcept { return rows.size() * cols.size(); }
    friend bool operator==(const Bicluster&, const Bicluster&) = default;
};

using BiclusterSet = std::vector<Bicluster>;

inline void normalize_indices(std::vector<std::size_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

inline Bicluster make_bicluster(std::vector<std::size_t> rows, std::vector<std::size_t> cols, double weight = 1.0,
                                std::optional<std::array<std::size_t, 2>> topic_pair = std::nullopt) {
    normalize_indices(rows);
    normalize_indices(cols);
    return {std::move(rows), std::move(cols), weight, topic_pair};
}

inline nlohmann::json to_json(const Bicluster& b) {
    nlohmann::json j;
    j["rows"] = b.rows;
    j["cols"] = b.cols;
    j["weight"] = b.weight;
    j["topic_pair"] = b.topic_pair ? nlohmann::json(*b.topic_pair) : nlohmann::json(nullptr);
    return j;
}

inline nlohmann::json to_json(const BiclusterSet& set) {
    auto j = nlohmann::json::array();
    for (const auto& b : set) j.push_back(to_json(b));
    return j;
}

/// Parses the bicluster list format. When `n_rows`/`n_cols` are given,
/// indices at or beyond them are rejected. Throws FormatError.
inline BiclusterSet biclusters_from_json(const nlohmann::json& j, std::optional<std::size_t> n_rows = std::nullopt,
                                         std::optional<std::size_t> n_cols = std::nullopt) {
    if (!j.is_array()) throw FormatError("bicluster document must be a JSON list");
    BiclusterSet out;
    for (std::size_t k = 0; k < j.size(); ++k) {
        const auto& e = j[k];
        const std::string where = "bicluster " + std::to_string(k) + ": ";
        if (!e.is_object() || !e.contains("rows") || !e.contains("cols"))
            throw FormatError(where + "expected an object with rows and cols");
        auto indices = [&](const char* key, std::optional<std::size_t> bound) {
            const auto& arr = e.at(key);
            if (!arr.is_array()) throw FormatError(where + key + " must be a list");
            std::vector<std::size_t> v;
            for (const auto& x : arr) {
                if (!x.is_number_unsigned()) throw FormatError(where + key + " must hold nonnegative integers");
                v.push_back(x.get<std::size_t>());
                if (bound && v.back() >= *bound)
                    throw FormatError(where + "index " + std::to_string(v.back()) + " out of bounds in " + key);
            }
            return v;
        };
        Bicluster b = make_bicluster(indices("rows", n_rows), indices("cols", n_cols));
        if (e.contains("weight")) {
            if (!e["weight"].is_number()) throw FormatError(where + "weight must be a number");
            b.weight = e["weight"].get<double>();
            if (!(b.weight >= 0.0 && b.weight <= 1.0)) throw FormatError(where + "weight must be in [0, 1]");
        }
        if (e.contains("topic_pair") && !e["topic_pair"].is_null()) {
            const auto& tp = e["topic_pair"];
            if (!tp.is_array() || tp.size() != 2 || !tp[0].is_number_unsigned() || !tp[1].is_number_unsigned())
                throw FormatError(where + "topic_pair must be null or two nonnegative integers");
            b.topic_pair = std::array<std::size_t, 2>{tp[0].get<std::size_t>(), tp[1].get<std::size_t>()};
        }
        out.push_back(std::move(b));
    }
    return out;
}

inline BiclusterSet load_biclusters(const std::filesystem::path& path, std::optional<std::size_t> n_rows = std::nullopt,
                                    std::optional<std::size_t> n_cols = std::nullopt) {
    auto in = detail::open_input(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": malformed JSON: " + e.what());
    }
    try {
        return biclusters_from_json(j, n_rows, n_cols);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline void save_biclusters(const BiclusterSet& set, std::ostream& out) { out << to_json(set).dump(2) << '\n'; }

inline void save_biclusters(const BiclusterSet& set, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    save_biclusters(set, out);
}

}  // namespace cdp
