#ifndef MFENS_RATINGS_HPP
#define MFENS_RATINGS_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace mfens {

// One observed cell of the sparse rating matrix.
struct RatingEntry {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    double value = 0.0;

    bool operator==(const RatingEntry&) const = default;
};

// Sparse rating matrix in triplet form with declared dimensions.  Entries are
// unique per (row, col) and indices are always < the declared dimensions.
struct RatingMatrix {
    std::uint32_t num_rows = 0;
    std::uint32_t num_cols = 0;
    std::vector<RatingEntry> entries;

    bool operator==(const RatingMatrix&) const = default;
};

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

enum class Delimiter { Tab, Comma, DoubleColon };

// Parses "tab" | "comma" | "double-colon"; throws ConfigError otherwise.
Delimiter delimiter_from_name(const std::string& name);
std::string delimiter_name(Delimiter d);
std::string delimiter_token(Delimiter d);

// Mapping between raw entity ids (arbitrary tokens) and dense indices,
// in first-seen order.
struct IdRemap {
    std::vector<std::string> raw_ids;                       // dense -> raw
    std::unordered_map<std::string, std::uint32_t> to_dense; // raw -> dense

    std::uint32_t intern(const std::string& raw);
    bool empty() const { return raw_ids.empty(); }
};

struct ParseResult {
    RatingMatrix matrix;
    IdRemap rows;  // populated only when parsed with id_remap = true
    IdRemap cols;
};

// Reads one rating per line: user<sep>item<sep>rating with extra fields
// ignored.  Blank lines and "#" comments are skipped, except for an optional
// "# rows=<M> cols=<N>" directive which pins the declared dimensions.
// With id_remap, ids may be arbitrary tokens and are densified in first-seen
// order; without it they must be nonnegative integers used verbatim.
// Throws ParseError on malformed lines (with line number), duplicate
// (user, item) pairs, non-finite ratings, or empty input.
ParseResult parse_ratings(std::istream& in, Delimiter format, bool id_remap);

// |entries| / (num_rows * num_cols).  Throws ConfigError on zero dimensions.
double density(const RatingMatrix& matrix);
double density(std::uint32_t num_rows, std::uint32_t num_cols,
               std::uint64_t observed);

// Deterministic entry-level partition.  Both halves keep the parent
// dimensions and the parent's entry order.  Throws ConfigError when the
// fraction leaves either side empty or the matrix has no entries.
std::pair<RatingMatrix, RatingMatrix> split(const RatingMatrix& matrix,
                                            const SplitSpec& spec);

// Writes "# rows=.. cols=.." followed by the entries with 17-significant-digit
// values, so a re-parse reproduces the matrix exactly.
void serialize_matrix(const RatingMatrix& matrix, std::ostream& out,
                      Delimiter format);

// Sidecar format: one "raw_id<TAB>dense_index" line per entity.
void write_remap(const IdRemap& remap, std::ostream& out);
IdRemap read_remap(std::istream& in);

// File helpers; throw IoError when the path cannot be opened.
ParseResult parse_ratings_file(const std::string& path, Delimiter format,
                               bool id_remap);
void write_matrix_file(const RatingMatrix& matrix, const std::string& path,
                       Delimiter format);
void write_remap_file(const IdRemap& remap, const std::string& path);
IdRemap read_remap_file(const std::string& path);

} // namespace mfens

#endif
