#include "dring/pir.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>

#include "dring/io.hpp"

namespace dring::pir {

namespace {

void put_u16(std::uint8_t* p, std::uint16_t v) {
    p[0] = static_cast<std::uint8_t>(v >> 8);
    p[1] = static_cast<std::uint8_t>(v);
}
void put_u32(std::uint8_t* p, std::uint32_t v) {
    p[0] = static_cast<std::uint8_t>(v >> 24);
    p[1] = static_cast<std::uint8_t>(v >> 16);
    p[2] = static_cast<std::uint8_t>(v >> 8);
    p[3] = static_cast<std::uint8_t>(v);
}
void put_u64(std::uint8_t* p, std::uint64_t v) {
    put_u32(p, static_cast<std::uint32_t>(v >> 32));
    put_u32(p + 4, static_cast<std::uint32_t>(v));
}
std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}
std::uint32_t get_u32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) |
           (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) |
           static_cast<std::uint32_t>(p[3]);
}
std::uint64_t get_u64(const std::uint8_t* p) {
    return (static_cast<std::uint64_t>(get_u32(p)) << 32) | get_u32(p + 4);
}

// smallest r with r^k >= m
std::uint32_t ceil_nth_root(std::uint64_t m, unsigned k) {
    if (k == 1 || m <= 1) return static_cast<std::uint32_t>(m);
    auto pow_ge = [](std::uint64_t r, unsigned k, std::uint64_t m) {
        std::uint64_t acc = 1;
        for (unsigned i = 0; i < k; ++i) {
            if (acc > m / r + 1) return true;
            acc *= r;
            if (acc >= m) return true;
        }
        return acc >= m;
    };
    auto r = static_cast<std::uint64_t>(
        std::ceil(std::pow(static_cast<double>(m), 1.0 / k)));
    while (r > 1 && pow_ge(r - 1, k, m)) --r;
    while (!pow_ge(r, k, m)) ++r;
    return static_cast<std::uint32_t>(r);
}

}  // namespace

std::span<const std::uint8_t> DatabaseMatrix::packed_row(
    std::uint64_t i) const {
    if (i >= info.num_records)
        throw IndexOutOfRange("DatabaseMatrix: row " + std::to_string(i));
    const std::uint64_t rb = info.row_bytes();
    return {rows.data() + i * rb, static_cast<std::size_t>(rb)};
}

std::vector<std::uint32_t> DatabaseMatrix::row_words(std::uint64_t i) const {
    return gf::unpack_words(packed_row(i), info.words_per_row(),
                            info.word_bits);
}

std::vector<std::uint8_t> DatabaseMatrix::record(std::uint64_t i) const {
    auto r = packed_row(i);
    // row padding is invisible to callers: a record is exactly record_size
    return {r.begin(), r.begin() + static_cast<std::size_t>(info.record_size)};
}

DatabaseMatrix layout_database(
    const std::vector<std::vector<std::uint8_t>>& records,
    std::uint64_t record_size, unsigned word_bits) {
    if (records.empty()) throw EmptyDatabase("layout_database: no records");
    if (record_size == 0)
        throw ShapeMismatch("layout_database: record_size must be positive");
    gf::Field::get(word_bits);  // rejects unsupported word sizes

    DatabaseMatrix db;
    db.info.word_bits = word_bits;
    db.info.poly = gf::Field::polynomial_for(word_bits);
    db.info.record_size = record_size;
    db.info.num_records = records.size();
    const std::uint64_t rb = db.info.row_bytes();
    db.rows.assign(records.size() * rb, 0);
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].size() > record_size)
            throw ShapeMismatch("layout_database: record " +
                                std::to_string(i) + " exceeds record_size");
        std::memcpy(db.rows.data() + i * rb, records[i].data(),
                    records[i].size());
    }
    return db;
}

DatabaseMatrix synthetic_database(std::uint64_t db_bytes,
                                  std::uint64_t record_size,
                                  unsigned word_bits, std::uint64_t seed) {
    if (record_size == 0 || db_bytes < record_size)
        throw ShapeMismatch("synthetic_database: need at least one record");
    DatabaseMatrix db;
    db.info.word_bits = word_bits;
    db.info.poly = gf::Field::polynomial_for(word_bits);
    db.info.record_size = record_size;
    db.info.num_records = db_bytes / record_size;
    const std::uint64_t rb = db.info.row_bytes();
    db.rows.resize(db.info.num_records * rb);

    Rng rng(seed);
    std::size_t i = 0;
    for (; i + 8 <= db.rows.size(); i += 8) {
        std::uint64_t v = rng.u64();
        std::memcpy(db.rows.data() + i, &v, 8);
    }
    for (; i < db.rows.size(); ++i)
        db.rows[i] = static_cast<std::uint8_t>(rng.u64());

    // rows must decode to valid symbol vectors: zero the slack bits past
    // words_per_row * word_bits in each row
    const unsigned used_bits =
        static_cast<unsigned>(db.info.words_per_row() * word_bits - (rb - 1) * 8);
    if (used_bits < 8) {
        const std::uint8_t mask =
            static_cast<std::uint8_t>(0xFF << (8 - used_bits));
        for (std::uint64_t r = 0; r < db.info.num_records; ++r)
            db.rows[r * rb + rb - 1] &= mask;
    }
    return db;
}

std::array<std::uint8_t, kDbHeaderSize> encode_db_header(const DbInfo& info) {
    std::array<std::uint8_t, kDbHeaderSize> h{};
    std::copy(kDbMagic.begin(), kDbMagic.end(), h.begin());
    put_u16(h.data() + 6, kDbVersion);
    put_u16(h.data() + 8, static_cast<std::uint16_t>(info.word_bits));
    put_u32(h.data() + 10, info.poly);
    put_u64(h.data() + 14, info.record_size);
    put_u64(h.data() + 22, info.num_records);
    return h;
}

DbInfo decode_db_header(std::span<const std::uint8_t> header) {
    if (header.size() < kDbHeaderSize)
        throw ShapeMismatch("db header: truncated");
    if (!std::equal(kDbMagic.begin(), kDbMagic.end(), header.begin()))
        throw ShapeMismatch("db header: bad magic");
    if (get_u16(header.data() + 6) != kDbVersion)
        throw ShapeMismatch("db header: unsupported version");
    DbInfo info;
    info.word_bits = get_u16(header.data() + 8);
    info.poly = get_u32(header.data() + 10);
    info.record_size = get_u64(header.data() + 14);
    info.num_records = get_u64(header.data() + 22);
    if (info.word_bits < 2 || info.word_bits > 20 || info.record_size == 0 ||
        info.num_records == 0)
        throw ShapeMismatch("db header: invalid field values");
    return info;
}

void save_database(const DatabaseMatrix& db, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("save_database: cannot open " + path);
    auto h = encode_db_header(db.info);
    out.write(reinterpret_cast<const char*>(h.data()),
              static_cast<std::streamsize>(h.size()));
    out.write(reinterpret_cast<const char*>(db.rows.data()),
              static_cast<std::streamsize>(db.rows.size()));
    if (!out) throw IoError("save_database: write failed: " + path);
}

DatabaseMatrix load_database(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_database: cannot open " + path);
    std::array<std::uint8_t, kDbHeaderSize> h{};
    in.read(reinterpret_cast<char*>(h.data()),
            static_cast<std::streamsize>(h.size()));
    if (in.gcount() != static_cast<std::streamsize>(h.size()))
        throw ShapeMismatch("load_database: truncated header in " + path);
    DatabaseMatrix db;
    db.info = decode_db_header(h);
    const std::uint64_t total = db.info.num_records * db.info.row_bytes();
    db.rows.resize(total);
    in.read(reinterpret_cast<char*>(db.rows.data()),
            static_cast<std::streamsize>(total));
    if (in.gcount() != static_cast<std::streamsize>(total))
        throw ShapeMismatch("load_database: truncated rows in " + path);
    return db;
}

void PirParams::validate() const {
    if (servers < 2) throw ShapeMismatch("PirParams: need at least 2 servers");
    if (privacy < 1) throw ShapeMismatch("PirParams: privacy t must be >= 1");
    if (depth < 1) throw BadDepth("PirParams: depth must be >= 1");
    if (responses_needed() > servers)
        throw BadDepth("PirParams: depth*privacy+1 responses needed but only " +
                       std::to_string(servers) + " servers configured");
    const auto& f = gf::Field::get(word_bits);
    if (!eval_points.empty()) {
        if (eval_points.size() != servers)
            throw ShapeMismatch("PirParams: eval_points size mismatch");
    }
    std::set<std::uint32_t> seen;
    for (unsigned i = 0; i < servers; ++i) {
        std::uint32_t x = eval_point(i);
        if (x == 0 || x > f.order())
            throw ShapeMismatch("PirParams: eval point out of field range");
        if (!seen.insert(x).second)
            throw ShapeMismatch("PirParams: duplicate eval point");
    }
}

std::vector<std::uint32_t> level_dims(std::uint64_t num_records,
                                      unsigned depth) {
    if (num_records == 0) throw EmptyDatabase("level_dims: empty database");
    if (depth < 1) throw BadDepth("level_dims: depth must be >= 1");
    if (depth == 1) return {static_cast<std::uint32_t>(num_records)};
    if (depth > 63 || (std::uint64_t{1} << depth) > num_records)
        throw BadDepth("level_dims: depth " + std::to_string(depth) +
                       " too deep for " + std::to_string(num_records) +
                       " records");
    std::vector<std::uint32_t> dims;
    std::uint64_t m = num_records;
    for (unsigned k = 0; k < depth; ++k) {
        std::uint32_t r = ceil_nth_root(m, depth - k);
        dims.push_back(r);
        m = (m + r - 1) / r;
    }
    return dims;
}

std::vector<std::uint64_t> index_digits(std::uint64_t beta,
                                        std::span<const std::uint32_t> dims) {
    std::vector<std::uint64_t> digits(dims.size());
    for (std::size_t k = dims.size(); k-- > 0;) {
        digits[k] = beta % dims[k];
        beta /= dims[k];
    }
    if (beta != 0)
        throw IndexOutOfRange("index_digits: beta exceeds dimension product");
    return digits;
}

std::vector<QueryShare> encode_query(std::uint64_t beta,
                                     std::uint64_t num_records,
                                     const PirParams& params, Rng& rng) {
    params.validate();
    if (num_records == 0) throw EmptyDatabase("encode_query: empty database");
    if (beta >= num_records)
        throw IndexOutOfRange("encode_query: beta " + std::to_string(beta) +
                              " >= " + std::to_string(num_records));
    const auto& f = gf::Field::get(params.word_bits);
    const auto dims = level_dims(num_records, params.depth);
    const auto digits = index_digits(beta, dims);

    std::vector<QueryShare> shares(params.servers);
    for (unsigned i = 0; i < params.servers; ++i) {
        shares[i].server_index = i;
        shares[i].level_lengths = dims;
        shares[i].words.reserve(std::size_t(0) +
                                std::accumulate(dims.begin(), dims.end(),
                                                std::size_t{0}));
    }

    // One Shamir polynomial per selector position: constant term is the
    // 0/1 indicator for that position, higher coefficients are uniform.
    std::vector<std::uint32_t> coeffs(params.privacy + 1);
    for (std::size_t k = 0; k < dims.size(); ++k) {
        for (std::uint32_t a = 0; a < dims[k]; ++a) {
            coeffs[0] = (a == digits[k]) ? 1u : 0u;
            for (unsigned j = 1; j <= params.privacy; ++j)
                coeffs[j] = rng.bits(params.word_bits);
            for (unsigned i = 0; i < params.servers; ++i)
                shares[i].words.push_back(
                    f.eval_poly(coeffs, params.eval_point(i)));
        }
    }
    return shares;
}

ResponseShare server_compute(const QueryShare& share,
                             const DatabaseMatrix& db,
                             const PirParams& params) {
    if (db.info.num_records == 0)
        throw EmptyDatabase("server_compute: empty database");
    if (params.word_bits != db.info.word_bits)
        throw ShapeMismatch("server_compute: word size disagrees with db");
    if (share.level_lengths.empty() ||
        share.level_lengths.size() != params.depth)
        throw ShapeMismatch("server_compute: level count mismatch");
    std::uint64_t total_len = 0, product = 1;
    for (std::uint32_t r : share.level_lengths) {
        if (r == 0) throw ShapeMismatch("server_compute: zero level length");
        if (product > (std::uint64_t{1} << 62) / r)
            throw ShapeMismatch("server_compute: selector space overflow");
        total_len += r;
        product *= r;
    }
    if (share.words.size() != total_len)
        throw ShapeMismatch("server_compute: share length mismatch");
    if (product < db.info.num_records)
        throw ShapeMismatch("server_compute: selector space smaller than db");
    // only the canonical per-level dims for this database are well formed;
    // anything else was encoded for a different database
    if (share.level_lengths != level_dims(db.info.num_records, params.depth))
        throw ShapeMismatch("server_compute: selector dims do not match db");

    const auto& f = gf::Field::get(db.info.word_bits);
    const std::size_t s = static_cast<std::size_t>(db.info.words_per_row());
    const std::uint64_t n = db.info.num_records;

    // suffix[k] = product of level lengths below level k; rows surviving
    // after folding level k
    const std::size_t d = share.level_lengths.size();
    std::vector<std::uint64_t> suffix(d);
    std::uint64_t acc = 1;
    for (std::size_t k = d; k-- > 0;) {
        suffix[k] = acc;
        acc *= share.level_lengths[k];
    }

    // level 0 folds directly over the packed db; indices past n are
    // implicit zero rows of the padded tensor and contribute nothing
    std::vector<std::uint32_t> cur(suffix[0] * s, 0);
    {
        std::vector<std::uint32_t> scratch(s);
        std::span<const std::uint32_t> v(share.words.data(),
                                         share.level_lengths[0]);
        for (std::uint64_t i = 0; i < n; ++i) {
            const std::uint32_t c = v[static_cast<std::size_t>(i / suffix[0])];
            if (c == 0) continue;
            gf::unpack_words(db.packed_row(i), s, db.info.word_bits, scratch);
            const std::uint64_t b = i % suffix[0];
            f.mul_acc(c, scratch,
                      std::span<std::uint32_t>(cur.data() + b * s, s));
        }
    }

    std::size_t offset = share.level_lengths[0];
    for (std::size_t k = 1; k < d; ++k) {
        std::span<const std::uint32_t> v(share.words.data() + offset,
                                         share.level_lengths[k]);
        offset += share.level_lengths[k];
        std::vector<std::uint32_t> next(suffix[k] * s, 0);
        const std::uint64_t rows = share.level_lengths[k] * suffix[k];
        for (std::uint64_t j = 0; j < rows; ++j) {
            const std::uint32_t c = v[static_cast<std::size_t>(j / suffix[k])];
            if (c == 0) continue;
            const std::uint64_t b = j % suffix[k];
            f.mul_acc(c, std::span<const std::uint32_t>(cur.data() + j * s, s),
                      std::span<std::uint32_t>(next.data() + b * s, s));
        }
        cur = std::move(next);
    }

    ResponseShare resp;
    resp.server_index = share.server_index;
    resp.words = std::move(cur);
    return resp;
}

std::vector<std::uint8_t> decode_response(
    std::span<const ResponseShare> responses, const PirParams& params,
    const DbInfo& info) {
    params.validate();
    const unsigned need = params.responses_needed();
    if (responses.size() < need)
        throw InsufficientResponses(
            "decode_response: have " + std::to_string(responses.size()) +
            " responses, need " + std::to_string(need));
    const std::size_t s = static_cast<std::size_t>(info.words_per_row());
    for (const auto& r : responses)
        if (r.words.size() != s)
            throw ShapeMismatch("decode_response: response length mismatch");

    std::vector<const ResponseShare*> ordered;
    ordered.reserve(responses.size());
    for (const auto& r : responses) ordered.push_back(&r);
    std::sort(ordered.begin(), ordered.end(),
              [](const ResponseShare* a, const ResponseShare* b) {
                  return a->server_index < b->server_index;
              });

    const auto& f = gf::Field::get(info.word_bits);
    std::vector<std::uint32_t> xs(need);
    for (unsigned i = 0; i < need; ++i)
        xs[i] = params.eval_point(ordered[i]->server_index);
    const auto lam = gf::lagrange_coeffs(f, xs, 0);

    std::vector<std::uint32_t> out(s, 0);
    for (unsigned i = 0; i < need; ++i)
        f.mul_acc(lam[i], ordered[i]->words, out);

    // surplus shares must lie on the same interpolated polynomial
    for (std::size_t e = need; e < ordered.size(); ++e) {
        const auto mu =
            gf::lagrange_coeffs(f, xs, params.eval_point(ordered[e]->server_index));
        std::vector<std::uint32_t> pred(s, 0);
        for (unsigned i = 0; i < need; ++i)
            f.mul_acc(mu[i], ordered[i]->words, pred);
        if (pred != ordered[e]->words)
            throw InconsistentResponses(
                "decode_response: server " +
                std::to_string(ordered[e]->server_index) +
                " disagrees with interpolation");
    }

    auto packed = gf::pack_words(out, info.word_bits);
    packed.resize(static_cast<std::size_t>(info.record_size));
    return packed;
}

CostModel cost_model(const DbInfo& info, const PirParams& params,
                     unsigned num_ads) {
    params.validate();
    const auto dims = level_dims(info.num_records, params.depth);
    std::uint64_t share_bytes = 0;
    for (std::uint32_t r : dims)
        share_bytes += gf::packed_size(r, params.word_bits);
    const std::uint64_t resp_bytes =
        gf::packed_size(static_cast<std::size_t>(info.words_per_row()),
                        params.word_bits);

    // frame header: 6 magic + 1 type + 4 length
    // query payload prefix: 4 id + 2 count + 1 depth + 4 per level
    // response payload prefix: 4 id + 2 count
    CostModel m;
    m.up_payload = std::uint64_t{params.servers} * num_ads * share_bytes;
    m.up_framing = std::uint64_t{params.servers} * (11 + 7 + 4 * params.depth);
    m.down_payload = std::uint64_t{params.servers} * num_ads * resp_bytes;
    m.down_framing = std::uint64_t{params.servers} * (11 + 6);
    return m;
}

}  // namespace dring::pir
