#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cdp {

using count_t = std::uint64_t;
using index_t = std::uint32_t;

/// Raised for unreadable or malformed input files. The message carries the
/// 1-based line (and column, for CSV) of the offending input.
class FormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised when preprocessing or tokenization leaves nothing to model.
class EmptyMatrixError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Entry {
    index_t row = 0;
    index_t col = 0;
    count_t count = 0;

    friend bool operator==(const Entry&, const Entry&) = default;
};

/// Nonnegative integer matrix in coordinate form. Entries are unique per
/// (row, col), strictly positive, and kept sorted row-major so each row is
/// a contiguous span.
class SparseCountMatrix {
  public:
    SparseCountMatrix() = default;

    /// Duplicated (row, col) pairs are summed and zero counts dropped.
    /// Throws std::out_of_range for indices outside the declared shape.
    static SparseCountMatrix from_triplets(std::size_t n_rows, std::size_t n_cols, std::vector<Entry> entries,
                                           std::vector<std::string> row_labels = {},
                                           std::vector<std::string> col_labels = {}) {
        if (!row_labels.empty() && row_labels.size() != n_rows)
            throw std::invalid_argument("row label count does not match row count");
        if (!col_labels.empty() && col_labels.size() != n_cols)
            throw std::invalid_argument("column label count does not match column count");
        for (const Entry& e : entries)
            if (e.row >= n_rows || e.col >= n_cols) throw std::out_of_range("index out of bounds");

        std::sort(entries.begin(), entries.end(),
                  [](const Entry& a, const Entry& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
        std::vector<Entry> merged;
        merged.reserve(entries.size());
        for (const Entry& e : entries) {
            if (e.count == 0) continue;
            if (!merged.empty() && merged.back().row == e.row && merged.back().col == e.col)
                merged.back().count += e.count;
            else
                merged.push_back(e);
        }

        SparseCountMatrix m;
        m.n_rows_ = n_rows;
        m.n_cols_ = n_cols;
        m.entries_ = std::move(merged);
        m.row_labels_ = std::move(row_labels);
        m.col_labels_ = std::move(col_labels);
        m.row_ptr_.assign(n_rows + 1, 0);
        for (const Entry& e : m.entries_) {
            ++m.row_ptr_[e.row + 1];
            m.total_ += e.count;
        }
        std::partial_sum(m.row_ptr_.begin(), m.row_ptr_.end(), m.row_ptr_.begin());
        return m;
    }

    std::size_t n_rows() const noexcept { return n_rows_; }
    std::size_t n_cols() const noexcept { return n_cols_; }
    std::size_t nnz() const noexcept { return entries_.size(); }
    count_t total() const noexcept { return total_; }

    std::span<const Entry> entries() const noexcept { return entries_; }
    std::span<const Entry> row(std::size_t r) const noexcept {
        return std::span<const Entry>(entries_).subspan(row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]);
    }

    const std::vector<std::string>& row_labels() const noexcept { return row_labels_; }
    const std::vector<std::string>& col_labels() const noexcept { return col_labels_; }

    std::vector<count_t> row_sums() const {
        std::vector<count_t> s(n_rows_, 0);
        for (const Entry& e : entries_) s[e.row] += e.count;
        return s;
    }
    std::vector<count_t> col_sums() const {
        std::vector<count_t> s(n_cols_, 0);
        for (const Entry& e : entries_) s[e.col] += e.count;
        return s;
    }

    count_t at(std::size_t r, std::size_t c) const {
        if (r >= n_rows_ || c >= n_cols_) throw std::out_of_range("index out of bounds");
        auto rs = row(r);
        auto it = std::lower_bound(rs.begin(), rs.end(), c, [](const Entry& e, std::size_t col) { return e.col < col; });
        return (it != rs.end() && it->col == c) ? it->count : 0;
    }

    friend bool operator==(const SparseCountMatrix& a, const SparseCountMatrix& b) {
        return a.n_rows_ == b.n_rows_ && a.n_cols_ == b.n_cols_ && a.entries_ == b.entries_ &&
               a.row_labels_ == b.row_labels_ && a.col_labels_ == b.col_labels_;
    }

  private:
    std::size_t n_rows_ = 0;
    std::size_t n_cols_ = 0;
    std::vector<Entry> entries_;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::string> row_labels_;
    std::vector<std::string> col_labels_;
    count_t total_ = 0;
};

/// One record per unit of count. zr/zc are the row-topic and column-topic
/// of the token during the mutual-dependence phase.
struct TokenTable {
    std::vector<index_t> row_of;
    std::vector<index_t> col_of;
    std::vector<index_t> zr;
    std::vector<index_t> zc;

    std::size_t size() const noexcept { return row_of.size(); }
    friend bool operator==(const TokenTable&, const TokenTable&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

inline bool parse_signed(std::string_view s, long long& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::string lower(std::string_view s) {
    std::string r(s);
    std::transform(r.begin(), r.end(), r.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return r;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    return in;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace detail

/// Reads `%%MatrixMarket matrix coordinate integer general`. File indices are
/// 1-based; repeated coordinates are summed and explicit zeros dropped.
inline SparseCountMatrix read_matrix_market(std::istream& in, const std::string& source = "<stream>") {
    auto fail = [&](std::size_t line, const std::string& what) -> FormatError {
        return FormatError(source + ":" + std::to_string(line) + ": " + what);
    };

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw fail(1, "malformed header: empty file");
    ++line_no;
    {
        std::istringstream hs(line);
        std::string banner, object, format, field, symmetry;
        hs >> banner >> object >> format >> field >> symmetry;
        if (banner != "%%MatrixMarket" || detail::lower(object) != "matrix")
            throw fail(line_no, "malformed header: expected '%%MatrixMarket matrix ...'");
        if (detail::lower(format) != "coordinate") throw fail(line_no, "malformed header: only coordinate format is supported");
        if (detail::lower(field) != "integer") throw fail(line_no, "malformed header: only the integer field is supported");
        if (detail::lower(symmetry) != "general") throw fail(line_no, "malformed header: only general symmetry is supported");
    }

    long long n_rows = -1, n_cols = -1, declared = -1;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = detail::trim(line);
        if (t.empty() || t.front() == '%') continue;
        std::istringstream ss{std::string(t)};
        std::string a, b, c, extra;
        ss >> a >> b >> c;
        if (!detail::parse_signed(a, n_rows) || !detail::parse_signed(b, n_cols) || !detail::parse_signed(c, declared) ||
            (ss >> extra) || n_rows < 0 || n_cols < 0 || declared < 0)
            throw fail(line_no, "malformed header: size line must be 'rows cols entries'");
        break;
    }
    if (n_rows < 0) throw fail(line_no, "malformed header: missing size line");

    std::vector<Entry> entries;
    entries.reserve(static_cast<std::size_t>(declared));
    long long seen = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = detail::trim(line);
        if (t.empty() || t.front() == '%') continue;
        std::istringstream ss{std::string(t)};
        std::string a, b, c, extra;
        ss >> a >> b >> c;
        long long r = 0, col = 0, v = 0;
        if (!detail::parse_signed(a, r) || !detail::parse_signed(b, col))
            throw fail(line_no, "non-integer index");
        if (c.empty() || !detail::parse_signed(c, v)) throw fail(line_no, "non-integer value");
        if (ss >> extra) throw fail(line_no, "too many fields");
        if (r < 1 || r > n_rows || col < 1 || col > n_cols) throw fail(line_no, "index out of bounds");
        if (v < 0) throw fail(line_no, "negative count");
        if (++seen > declared) throw fail(line_no, "more entries than declared in the size line");
        entries.push_back({static_cast<index_t>(r - 1), static_cast<index_t>(col - 1), static_cast<count_t>(v)});
    }
    if (seen != declared)
        throw fail(line_no, "expected " + std::to_string(declared) + " entries, found " + std::to_string(seen));
    return SparseCountMatrix::from_triplets(static_cast<std::size_t>(n_rows), static_cast<std::size_t>(n_cols),
                                            std::move(entries));
}

inline SparseCountMatrix load_matrix_market(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    return read_matrix_market(in, path.string());
}

inline void write_matrix_market(const SparseCountMatrix& m, std::ostream& out) {
    out << "%%MatrixMarket matrix coordinate integer general\n";
    out << m.n_rows() << ' ' << m.n_cols() << ' ' << m.nnz() << '\n';
    for (const Entry& e : m.entries()) out << e.row + 1 << ' ' << e.col + 1 << ' ' << e.count << '\n';
}

/// Rectangular CSV of nonnegative integers. With `has_labels`, the first
/// line holds column labels (its first cell is ignored) and the first field
/// of every following line is the row label. Errors report 1-based file
/// coordinates.
inline SparseCountMatrix read_dense_csv(std::istream& in, bool has_labels, const std::string& source = "<stream>") {
    std::vector<std::string> row_labels, col_labels;
    std::vector<Entry> entries;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    std::size_t n_rows = 0;
    bool have_width = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split(line, ',');
        if (has_labels && col_labels.empty() && !have_width) {
            for (std::size_t i = 1; i < fields.size(); ++i) col_labels.emplace_back(detail::trim(fields[i]));
            width = col_labels.size();
            have_width = true;
            continue;
        }
        const std::size_t first = has_labels ? 1 : 0;
        const std::size_t cells = fields.size() - first;
        if (!have_width) {
            width = cells;
            have_width = true;
        } else if (cells != width) {
            throw FormatError(source + ": ragged row at row " + std::to_string(line_no) + ": expected " +
                              std::to_string(width) + " cells, found " + std::to_string(cells));
        }
        if (has_labels) row_labels.emplace_back(detail::trim(fields[0]));
        for (std::size_t j = first; j < fields.size(); ++j) {
            long long v = 0;
            const std::string where = " at row " + std::to_string(line_no) + ", column " + std::to_string(j + 1);
            if (!detail::parse_signed(fields[j], v)) throw FormatError(source + ": non-integer cell" + where);
            if (v < 0) throw FormatError(source + ": negative cell" + where);
            if (v > 0) entries.push_back({static_cast<index_t>(n_rows), static_cast<index_t>(j - first), static_cast<count_t>(v)});
        }
        ++n_rows;
    }
    if (!have_width) throw FormatError(source + ": empty csv");
    return SparseCountMatrix::from_triplets(n_rows, width, std::move(entries), std::move(row_labels), std::move(col_labels));
}

inline SparseCountMatrix load_dense_csv(const std::filesystem::path& path, bool has_labels) {
    auto in = detail::open_input(path);
    return read_dense_csv(in, has_labels, path.string());
}

inline void write_dense_csv(const SparseCountMatrix& m, std::ostream& out, bool with_labels = false) {
    with_labels = with_labels && !m.row_labels().empty() && !m.col_labels().empty();
    if (with_labels) {
        for (const auto& l : m.col_labels()) out << ',' << l;
        out << '\n';
    }
    std::vector<count_t> dense(m.n_cols());
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        std::fill(dense.begin(), dense.end(), 0);
        for (const Entry& e : m.row(r)) dense[e.col] = e.count;
        if (with_labels) out << m.row_labels()[r] << ',';
        for (std::size_t c = 0; c < dense.size(); ++c) out << (c ? "," : "") << dense[c];
        out << '\n';
    }
}

/// Result of preprocessing together with the original indices behind each
/// surviving row and column. A row can have several sources when rows were
/// merged by label.
struct Preprocessed {
    SparseCountMatrix matrix;
    std::vector<std::vector<std::size_t>> row_sources;
    std::vector<std::size_t> col_sources;
};

/// Removes all-zero rows and columns (compacting indices, preserving order
/// and labels). With `merge_duplicate_labels`, rows sharing a label are
/// summed into the first occurrence first. Throws EmptyMatrixError if nothing
/// survives.
inline Preprocessed preprocess_indexed(const SparseCountMatrix& m, bool merge_duplicate_labels) {
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::size_t> group_of(m.n_rows());
    std::vector<std::string> group_labels;
    const bool labelled = !m.row_labels().empty();
    if (merge_duplicate_labels && labelled) {
        std::unordered_map<std::string, std::size_t> seen;
        for (std::size_t r = 0; r < m.n_rows(); ++r) {
            auto [it, fresh] = seen.try_emplace(m.row_labels()[r], groups.size());
            if (fresh) {
                groups.emplace_back();
                group_labels.push_back(m.row_labels()[r]);
            }
            groups[it->second].push_back(r);
            group_of[r] = it->second;
        }
    } else {
        for (std::size_t r = 0; r < m.n_rows(); ++r) {
            groups.push_back({r});
            group_of[r] = r;
        }
        if (labelled) group_labels = m.row_labels();
    }

    std::vector<count_t> group_sum(groups.size(), 0);
    std::vector<count_t> col_sum(m.n_cols(), 0);
    for (const Entry& e : m.entries()) {
        group_sum[group_of[e.row]] += e.count;
        col_sum[e.col] += e.count;
    }

    constexpr std::size_t dropped = static_cast<std::size_t>(-1);
    Preprocessed out;
    std::vector<std::size_t> new_row(groups.size(), dropped), new_col(m.n_cols(), dropped);
    std::vector<std::string> row_labels, col_labels;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (group_sum[g] == 0) continue;
        new_row[g] = out.row_sources.size();
        out.row_sources.push_back(groups[g]);
        if (labelled) row_labels.push_back(group_labels[g]);
    }
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
        if (col_sum[c] == 0) continue;
        new_col[c] = out.col_sources.size();
        out.col_sources.push_back(c);
        if (!m.col_labels().empty()) col_labels.push_back(m.col_labels()[c]);
    }
    if (out.row_sources.empty() || out.col_sources.empty()) throw EmptyMatrixError("empty after preprocessing");

    std::vector<Entry> entries;
    entries.reserve(m.nnz());
    for (const Entry& e : m.entries())
        entries.push_back({static_cast<index_t>(new_row[group_of[e.row]]), static_cast<index_t>(new_col[e.col]), e.count});
    out.matrix = SparseCountMatrix::from_triplets(out.row_sources.size(), out.col_sources.size(), std::move(entries),
                                                  std::move(row_labels), std::move(col_labels));
    return out;
}

inline SparseCountMatrix preprocess(const SparseCountMatrix& m, bool merge_duplicate_labels = false) {
    return preprocess_indexed(m, merge_duplicate_labels).matrix;
}

inline SparseCountMatrix transpose(const SparseCountMatrix& m) {
    std::vector<Entry> entries;
    entries.reserve(m.nnz());
    for (const Entry& e : m.entries()) entries.push_back({e.col, e.row, e.count});
    return SparseCountMatrix::from_triplets(m.n_cols(), m.n_rows(), std::move(entries), m.col_labels(), m.row_labels());
}

/// Expands every entry (r, c, v) into v tokens, in row-major order. Topic
/// labels start at 0.
inline TokenTable to_tokens(const SparseCountMatrix& m) {
    if (m.total() == 0) throw EmptyMatrixError("cannot tokenize an empty matrix");
    TokenTable t;
    const auto n = static_cast<std::size_t>(m.total());
    t.row_of.reserve(n);
    t.col_of.reserve(n);
    for (const Entry& e : m.entries()) {
        t.row_of.insert(t.row_of.end(), e.count, e.row);
        t.col_of.insert(t.col_of.end(), e.count, e.col);
    }
    t.zr.assign(n, 0);
    t.zc.assign(n, 0);
    return t;
}

/// Inverse of to_tokens: counts tokens per (row, col).
inline SparseCountMatrix aggregate_tokens(const TokenTable& t, std::size_t n_rows, std::size_t n_cols) {
    std::vector<Entry> entries;
    entries.reserve(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) entries.push_back({t.row_of[i], t.col_of[i], 1});
    return SparseCountMatrix::from_triplets(n_rows, n_cols, std::move(entries));
}

}  // namespace cdp
