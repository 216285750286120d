#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dring/gf2w.hpp"
#include "dring/rng.hpp"

namespace dring::pir {

// error taxonomy; the CLI maps these onto exit codes
struct PirError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyDatabase : PirError {
    using PirError::PirError;
};
struct IndexOutOfRange : PirError {
    using PirError::PirError;
};
struct ShapeMismatch : PirError {
    using PirError::PirError;
};
struct BadDepth : PirError {
    using PirError::PirError;
};
struct InsufficientResponses : PirError {
    using PirError::PirError;
};
struct InconsistentResponses : PirError {
    using PirError::PirError;
};

// everything a client needs to know about a database to form queries
struct DbInfo {
    unsigned word_bits = 10;
    std::uint32_t poly = 0;
    std::uint64_t record_size = 0;  // bytes per logical record
    std::uint64_t num_records = 0;

    // words per matrix row: each record is split into w-bit symbols
    std::uint64_t words_per_row() const {
        return (record_size * 8u + word_bits - 1u) / word_bits;
    }
    std::uint64_t row_bytes() const {
        return gf::packed_size(words_per_row(), word_bits);
    }
};

// Records stored as a matrix of field elements, one record per row, packed
// to w-bit symbols. Rows are padded with zero symbols to equal length.
struct DatabaseMatrix {
    DbInfo info;
    std::vector<std::uint8_t> rows;  // num_records * row_bytes(), packed

    std::span<const std::uint8_t> packed_row(std::uint64_t i) const;
    std::vector<std::uint32_t> row_words(std::uint64_t i) const;
    std::vector<std::uint8_t> record(std::uint64_t i) const;
};

DatabaseMatrix layout_database(
    const std::vector<std::vector<std::uint8_t>>& records,
    std::uint64_t record_size, unsigned word_bits);

// deterministic random-content database, used by the benchmark sweeps
DatabaseMatrix synthetic_database(std::uint64_t db_bytes,
                                  std::uint64_t record_size,
                                  unsigned word_bits, std::uint64_t seed);

// on-disk format: 30-byte big-endian header followed by the packed rows
constexpr std::array<std::uint8_t, 6> kDbMagic = {'D', 'R', 'A', 'D', 'B', '1'};
constexpr std::uint16_t kDbVersion = 1;
constexpr std::size_t kDbHeaderSize = 30;

std::array<std::uint8_t, kDbHeaderSize> encode_db_header(const DbInfo& info);
DbInfo decode_db_header(std::span<const std::uint8_t> header);
void save_database(const DatabaseMatrix& db, const std::string& path);
DatabaseMatrix load_database(const std::string& path);

struct PirParams {
    unsigned servers = 3;     // l
    unsigned privacy = 1;     // t, tolerated colluding servers
    unsigned word_bits = 10;  // w
    unsigned depth = 1;       // d, 1 = flat retrieval

    // Server i answers share f(x_i); points default to 1..l and must be
    // distinct and nonzero so interpolation at 0 stays well defined.
    std::vector<std::uint32_t> eval_points;

    std::uint32_t eval_point(unsigned server_index) const {
        if (!eval_points.empty()) return eval_points.at(server_index);
        return server_index + 1u;
    }

    // The response a server returns evaluates a product of one degree-t
    // share polynomial per recursion level, so decoding interpolates a
    // polynomial of degree depth*privacy.
    unsigned responses_needed() const { return depth * privacy + 1u; }

    void validate() const;
};

// per-level dimensions r_1..r_d with product >= num_records
std::vector<std::uint32_t> level_dims(std::uint64_t num_records,
                                      unsigned depth);
// mixed-radix digits of beta under dims, most significant level first
std::vector<std::uint64_t> index_digits(std::uint64_t beta,
                                        std::span<const std::uint32_t> dims);

struct QueryShare {
    unsigned server_index = 0;
    std::vector<std::uint32_t> level_lengths;  // r_1..r_d
    std::vector<std::uint32_t> words;          // concatenated level vectors
};

struct ResponseShare {
    unsigned server_index = 0;
    std::vector<std::uint32_t> words;  // words_per_row() field elements
};

// One share vector per server hiding the row index beta from any coalition
// of at most `privacy` servers. depth > 1 splits beta into digits and sends
// one selector vector per level.
std::vector<QueryShare> encode_query(std::uint64_t beta,
                                     std::uint64_t num_records,
                                     const PirParams& params, Rng& rng);

// share^T * DB, folding one level at a time for recursive queries
ResponseShare server_compute(const QueryShare& share,
                             const DatabaseMatrix& db,
                             const PirParams& params);

// Interpolates each symbol at x = 0 from responses_needed() shares and
// repacks to record bytes. Surplus responses must be consistent with the
// interpolated polynomial or the decode is rejected.
std::vector<std::uint8_t> decode_response(
    std::span<const ResponseShare> responses, const PirParams& params,
    const DbInfo& info);

// Byte-exact wire accounting for one fetch of q records. Payload counts the
// serialized query/response payload bytes; framing counts headers and the
// fixed payload fields. DB_INFO exchanges are not part of the model.
struct CostModel {
    std::uint64_t up_payload = 0;
    std::uint64_t up_framing = 0;
    std::uint64_t down_payload = 0;
    std::uint64_t down_framing = 0;

    std::uint64_t up_bytes() const { return up_payload + up_framing; }
    std::uint64_t down_bytes() const { return down_payload + down_framing; }
    std::uint64_t total_bytes() const { return up_bytes() + down_bytes(); }
};

CostModel cost_model(const DbInfo& info, const PirParams& params,
                     unsigned num_ads);

}  // namespace dring::pir
