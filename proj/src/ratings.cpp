#include "mfens/ratings.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mfens/errors.hpp"
#include "mfens/rng.hpp"
#include "mfens/textfmt.hpp"

namespace mfens {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_fields(const std::string& line, Delimiter d) {
    const std::string sep = delimiter_token(d);
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t hit = line.find(sep, pos);
        if (hit == std::string::npos) {
            out.push_back(trim(line.substr(pos)));
            break;
        }
        out.push_back(trim(line.substr(pos, hit - pos)));
        pos = hit + sep.size();
    }
    return out;
}

bool parse_u32(const std::string& s, std::uint32_t& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    errno = 0;
    unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size() || v > 0xFFFFFFFFull)
        return false;
    out = static_cast<std::uint32_t>(v);
    return true;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || end != s.c_str() + s.size()) return false;
    out = v;
    return true;
}

// "# rows=<M> cols=<N>" pins the declared dimensions; any other comment is
// skipped.
bool parse_dims_directive(const std::string& comment, std::uint32_t& rows,
                          std::uint32_t& cols) {
    std::istringstream ss(comment);
    std::string hash, rows_kv, cols_kv;
    if (!(ss >> hash >> rows_kv >> cols_kv)) return false;
    std::string rest;
    if (ss >> rest) return false;
    if (hash != "#") return false;
    if (rows_kv.rfind("rows=", 0) != 0 || cols_kv.rfind("cols=", 0) != 0)
        return false;
    return parse_u32(rows_kv.substr(5), rows) && parse_u32(cols_kv.substr(5), cols);
}

} // namespace

Delimiter delimiter_from_name(const std::string& name) {
    if (name == "tab") return Delimiter::Tab;
    if (name == "comma") return Delimiter::Comma;
    if (name == "double-colon") return Delimiter::DoubleColon;
    throw ConfigError("unknown format '" + name +
                      "' (expected tab, comma, or double-colon)");
}

std::string delimiter_name(Delimiter d) {
    switch (d) {
    case Delimiter::Tab: return "tab";
    case Delimiter::Comma: return "comma";
    case Delimiter::DoubleColon: return "double-colon";
    }
    return "tab";
}

std::string delimiter_token(Delimiter d) {
    switch (d) {
    case Delimiter::Tab: return "\t";
    case Delimiter::Comma: return ",";
    case Delimiter::DoubleColon: return "::";
    }
    return "\t";
}

std::uint32_t IdRemap::intern(const std::string& raw) {
    auto it = to_dense.find(raw);
    if (it != to_dense.end()) return it->second;
    auto idx = static_cast<std::uint32_t>(raw_ids.size());
    raw_ids.push_back(raw);
    to_dense.emplace(raw, idx);
    return idx;
}

ParseResult parse_ratings(std::istream& in, Delimiter format, bool id_remap) {
    ParseResult result;
    RatingMatrix& m = result.matrix;
    bool dims_pinned = false;
    std::uint32_t max_row = 0, max_col = 0;
    // duplicate detection on (row, col) packed into 64 bits
    std::unordered_map<std::uint64_t, std::size_t> seen;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string stripped = trim(line);
        if (stripped.empty()) continue;
        if (stripped[0] == '#') {
            std::uint32_t r = 0, c = 0;
            if (parse_dims_directive(stripped, r, c)) {
                m.num_rows = r;
                m.num_cols = c;
                dims_pinned = true;
            }
            continue;
        }
        auto fields = split_fields(stripped, format);
        if (fields.size() < 3)
            throw ParseError("line " + std::to_string(line_no) + ": expected >=3 fields, got " +
                             std::to_string(fields.size()));
        RatingEntry e;
        if (id_remap) {
            e.row = result.rows.intern(fields[0]);
            e.col = result.cols.intern(fields[1]);
        } else {
            if (!parse_u32(fields[0], e.row) || !parse_u32(fields[1], e.col))
                throw ParseError("line " + std::to_string(line_no) +
                                 ": ids must be nonnegative integers without id remapping");
        }
        if (!parse_double(fields[2], e.value))
            throw ParseError("line " + std::to_string(line_no) + ": bad rating '" +
                             fields[2] + "'");
        if (!std::isfinite(e.value))
            throw ParseError("line " + std::to_string(line_no) + ": non-finite rating");
        std::uint64_t key = (static_cast<std::uint64_t>(e.row) << 32) | e.col;
        if (!seen.emplace(key, line_no).second)
            throw ParseError("line " + std::to_string(line_no) + ": duplicate (user, item) pair (" +
                             fields[0] + ", " + fields[1] + ")");
        max_row = std::max(max_row, e.row);
        max_col = std::max(max_col, e.col);
        m.entries.push_back(e);
    }
    if (m.entries.empty()) throw ParseError("empty input: no rating entries");
    if (!dims_pinned) {
        m.num_rows = max_row + 1;
        m.num_cols = max_col + 1;
    } else if (max_row >= m.num_rows || max_col >= m.num_cols) {
        throw ParseError("entry index (" + std::to_string(max_row) + "," +
                         std::to_string(max_col) + ") exceeds declared dims " +
                         std::to_string(m.num_rows) + "x" + std::to_string(m.num_cols));
    }
    return result;
}

double density(const RatingMatrix& matrix) {
    return density(matrix.num_rows, matrix.num_cols, matrix.entries.size());
}

double density(std::uint32_t num_rows, std::uint32_t num_cols,
               std::uint64_t observed) {
    if (num_rows == 0 || num_cols == 0)
        throw ConfigError("density undefined for zero-dimension matrix");
    return static_cast<double>(observed) /
           (static_cast<double>(num_rows) * static_cast<double>(num_cols));
}

std::pair<RatingMatrix, RatingMatrix> split(const RatingMatrix& matrix,
                                            const SplitSpec& spec) {
    const std::size_t n = matrix.entries.size();
    if (n == 0) throw ConfigError("cannot split an empty matrix");
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw ConfigError("train_fraction must be in (0, 1)");
    const auto n_train = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(n)));
    if (n_train == 0 || n_train == n)
        throw ConfigError("train_fraction " + fmt_g10(spec.train_fraction) +
                          " leaves a partition empty for " + std::to_string(n) +
                          " entries");

    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    auto g = make_rng(mix64(spec.seed, /*stream=*/0x53504c4954ull));
    shuffle_inplace(order, g);

    std::vector<char> in_train(n, 0);
    for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = 1;

    RatingMatrix train{matrix.num_rows, matrix.num_cols, {}};
    RatingMatrix test{matrix.num_rows, matrix.num_cols, {}};
    train.entries.reserve(n_train);
    test.entries.reserve(n - n_train);
    for (std::size_t i = 0; i < n; ++i)
        (in_train[i] ? train : test).entries.push_back(matrix.entries[i]);
    return {std::move(train), std::move(test)};
}

void serialize_matrix(const RatingMatrix& matrix, std::ostream& out,
                      Delimiter format) {
    const std::string sep = delimiter_token(format);
    out << "# rows=" << matrix.num_rows << " cols=" << matrix.num_cols << "\n";
    for (const auto& e : matrix.entries)
        out << e.row << sep << e.col << sep << fmt_g17(e.value) << "\n";
}

void write_remap(const IdRemap& remap, std::ostream& out) {
    for (std::size_t i = 0; i < remap.raw_ids.size(); ++i)
        out << remap.raw_ids[i] << "\t" << i << "\n";
}

IdRemap read_remap(std::istream& in) {
    IdRemap remap;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        std::size_t tab = line.find('\t');
        std::uint32_t dense = 0;
        if (tab == std::string::npos || !parse_u32(trim(line.substr(tab + 1)), dense))
            throw ParseError("remap line " + std::to_string(line_no) + ": expected raw_id<TAB>dense_index");
        if (dense != remap.raw_ids.size())
            throw ParseError("remap line " + std::to_string(line_no) + ": dense indices must be contiguous from 0");
        remap.intern(line.substr(0, tab));
    }
    return remap;
}

ParseResult parse_ratings_file(const std::string& path, Delimiter format,
                               bool id_remap) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open ratings file: " + path);
    try {
        return parse_ratings(in, format, id_remap);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_matrix_file(const RatingMatrix& matrix, const std::string& path,
                       Delimiter format) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write ratings file: " + path);
    serialize_matrix(matrix, out, format);
    if (!out) throw IoError("failed writing ratings file: " + path);
}

void write_remap_file(const IdRemap& remap, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write remap file: " + path);
    write_remap(remap, out);
    if (!out) throw IoError("failed writing remap file: " + path);
}

IdRemap read_remap_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open remap file: " + path);
    try {
        return read_remap(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

} // namespace mfens
