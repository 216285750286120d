#include "doctest.h"

#include <cstdint>
#include <filesystem>
#include <numeric>
#include <vector>

#include "dring/gf2w.hpp"
#include "dring/pir.hpp"
#include "dring/rng.hpp"

using namespace dring;
using namespace dring::pir;

namespace {

DatabaseMatrix tiny_db(std::uint64_t n, std::uint64_t record_size,
                       unsigned w, std::uint64_t seed) {
    return synthetic_database(n * record_size, record_size, w, seed);
}

std::vector<std::uint8_t> fetch_direct(const DatabaseMatrix& db,
                                       std::uint64_t beta,
                                       const PirParams& params, Rng& rng) {
    auto shares = encode_query(beta, db.info.num_records, params, rng);
    std::vector<ResponseShare> responses;
    for (const auto& s : shares)
        responses.push_back(server_compute(s, db, params));
    return decode_response(responses, params, db.info);
}

}  // namespace

TEST_CASE("layout pads odd records and reads them back") {
    std::vector<std::vector<std::uint8_t>> records = {
        {1, 2, 3}, {4}, {}, {5, 6, 7}};
    auto db = layout_database(records, 3, 8);
    CHECK(db.info.num_records == 4);
    CHECK(db.record(0) == std::vector<std::uint8_t>{1, 2, 3});
    CHECK(db.record(1) == std::vector<std::uint8_t>{4, 0, 0});
    CHECK(db.record(2) == std::vector<std::uint8_t>{0, 0, 0});
    CHECK(db.record(3) == std::vector<std::uint8_t>{5, 6, 7});
    CHECK_THROWS_AS(db.record(4), IndexOutOfRange);
}

TEST_CASE("synthetic databases are deterministic in the seed") {
    auto a = synthetic_database(1024, 64, 10, 5);
    auto b = synthetic_database(1024, 64, 10, 5);
    auto c = synthetic_database(1024, 64, 10, 6);
    CHECK(a.info.num_records == 16);
    CHECK(a.rows == b.rows);
    CHECK(a.rows != c.rows);
}

TEST_CASE("database header survives a save/load cycle") {
    auto db = tiny_db(8, 32, 16, 3);
    const auto path =
        (std::filesystem::temp_directory_path() / "dring_db_test.bin")
            .string();
    save_database(db, path);
    auto back = load_database(path);
    std::filesystem::remove(path);
    CHECK(back.info.word_bits == db.info.word_bits);
    CHECK(back.info.poly == db.info.poly);
    CHECK(back.info.record_size == db.info.record_size);
    CHECK(back.info.num_records == db.info.num_records);
    CHECK(back.rows == db.rows);
}

TEST_CASE("level dims cover the index space in every depth") {
    for (std::uint64_t n : {1ull, 2ull, 4ull, 27ull, 64ull, 1000ull}) {
        for (unsigned d = 1; d <= 3; ++d) {
            if ((1ull << d) > n) continue;
            auto dims = level_dims(n, d);
            REQUIRE(dims.size() == d);
            std::uint64_t prod = 1;
            for (auto r : dims) prod *= r;
            CHECK(prod >= n);
        }
    }
    auto dims = level_dims(1000, 3);
    CHECK(dims == std::vector<std::uint32_t>{10, 10, 10});
}

TEST_CASE("index digits reconstruct the index under the mixed radix") {
    auto dims = level_dims(1000, 3);
    for (std::uint64_t beta : {0ull, 1ull, 999ull, 500ull}) {
        auto digits = index_digits(beta, dims);
        REQUIRE(digits.size() == dims.size());
        std::uint64_t back = 0;
        for (std::size_t k = 0; k < dims.size(); ++k) {
            CHECK(digits[k] < dims[k]);
            back = back * dims[k] + digits[k];
        }
        CHECK(back == beta);
    }
}

TEST_CASE("flat retrieval equals direct indexing") {
    Rng rng(101);
    for (unsigned w : {8u, 10u, 20u}) {
        auto db = tiny_db(16, 24, w, 400 + w);
        for (unsigned l = 3; l <= 5; ++l) {
            for (unsigned t = 1; t + 1 < l; ++t) {
                PirParams params{l, t, w, 1};
                for (std::uint64_t beta = 0; beta < 16; beta += 5) {
                    CHECK(fetch_direct(db, beta, params, rng) ==
                          db.record(beta));
                }
            }
        }
    }
}

TEST_CASE("recursive retrieval equals direct indexing") {
    Rng rng(103);
    auto db = tiny_db(27, 16, 10, 77);
    for (unsigned d = 2; d <= 3; ++d) {
        PirParams params{6, 1, 10, d};
        REQUIRE(params.responses_needed() <= params.servers);
        for (std::uint64_t beta = 0; beta < 27; ++beta)
            CHECK(fetch_direct(db, beta, params, rng) == db.record(beta));
    }
}

TEST_CASE("query shares have one selector vector per level") {
    Rng rng(105);
    PirParams params{3, 1, 10, 2};
    auto shares = encode_query(5, 27, params, rng);
    REQUIRE(shares.size() == 3);
    auto dims = level_dims(27, 2);
    for (const auto& s : shares) {
        CHECK(s.level_lengths == dims);
        CHECK(s.words.size() ==
              std::accumulate(dims.begin(), dims.end(), 0u));
    }
}

TEST_CASE("parameter and shape errors are reported") {
    Rng rng(107);
    auto db = tiny_db(4, 16, 8, 9);

    PirParams params{3, 1, 8, 1};
    CHECK_THROWS_AS(encode_query(4, 4, params, rng), IndexOutOfRange);
    CHECK_THROWS_AS(encode_query(0, 0, params, rng), EmptyDatabase);

    PirParams deep{3, 1, 8, 3};  // 2^3 > 4
    CHECK_THROWS_AS(encode_query(1, 4, deep, rng), BadDepth);

    PirParams too_private{3, 3, 8, 1};  // needs t+1 = 4 > 3 servers
    CHECK_THROWS_AS(too_private.validate(), PirError);

    PirParams dup{3, 1, 8, 1};
    dup.eval_points = {1, 1, 2};
    CHECK_THROWS_AS(dup.validate(), PirError);
    dup.eval_points = {0, 1, 2};
    CHECK_THROWS_AS(dup.validate(), PirError);

    // share sized for a different database
    auto shares = encode_query(1, 4, params, rng);
    auto other = tiny_db(8, 16, 8, 10);
    CHECK_THROWS_AS(server_compute(shares[0], other, params), ShapeMismatch);

    // word size disagreement between share encoding and database
    PirParams wrong_w{3, 1, 10, 1};
    CHECK_THROWS_AS(server_compute(shares[0], db, wrong_w), ShapeMismatch);
}

TEST_CASE("decode demands a quorum and consistency") {
    Rng rng(109);
    auto db = tiny_db(8, 16, 10, 11);
    PirParams params{5, 2, 10, 1};
    auto shares = encode_query(3, 8, params, rng);
    std::vector<ResponseShare> responses;
    for (const auto& s : shares)
        responses.push_back(server_compute(s, db, params));

    // quorum is privacy+1 at depth 1
    std::vector<ResponseShare> few(responses.begin(), responses.begin() + 2);
    CHECK_THROWS_AS(decode_response(few, params, db.info),
                    InsufficientResponses);

    std::vector<ResponseShare> enough(responses.begin(),
                                      responses.begin() + 3);
    CHECK(decode_response(enough, params, db.info) == db.record(3));

    // a tampered surplus share contradicts the interpolation
    auto bad = responses;
    bad[4].words[0] ^= 1;
    CHECK_THROWS_AS(decode_response(bad, params, db.info),
                    InconsistentResponses);
}

TEST_CASE("any quorum subset decodes to the same record") {
    Rng rng(113);
    auto db = tiny_db(8, 16, 8, 13);
    PirParams params{5, 1, 8, 2};
    const unsigned need = params.responses_needed();
    REQUIRE(need == 3);
    auto shares = encode_query(6, 8, params, rng);
    std::vector<ResponseShare> responses;
    for (const auto& s : shares)
        responses.push_back(server_compute(s, db, params));
    for (unsigned skip1 = 0; skip1 < 5; ++skip1) {
        for (unsigned skip2 = skip1 + 1; skip2 < 5; ++skip2) {
            std::vector<ResponseShare> subset;
            for (unsigned i = 0; i < 5; ++i)
                if (i != skip1 && i != skip2) subset.push_back(responses[i]);
            CHECK(decode_response(subset, params, db.info) == db.record(6));
        }
    }
}

TEST_CASE("cost model counts packed selector and row bytes") {
    DbInfo info;
    info.word_bits = 10;
    info.poly = gf::Field::polynomial_for(10);
    info.record_size = 16;
    info.num_records = 27;
    PirParams params{4, 1, 10, 2};
    const unsigned q = 3;
    auto cm = cost_model(info, params, q);

    auto dims = level_dims(info.num_records, params.depth);
    std::uint64_t sel_bytes = 0;
    for (auto r : dims) sel_bytes += (r * 10 + 7) / 8;
    CHECK(cm.up_payload == params.servers * q * sel_bytes);
    const std::uint64_t row_words = (16 * 8 + 9) / 10;
    const std::uint64_t row_bytes = (row_words * 10 + 7) / 8;
    CHECK(cm.down_payload == params.servers * q * row_bytes);
    // frame header, query id, counts, level lengths / row word count
    CHECK(cm.up_framing == params.servers * (11ull + 7 + 4 * params.depth));
    CHECK(cm.down_framing == params.servers * (11ull + 6));
}
