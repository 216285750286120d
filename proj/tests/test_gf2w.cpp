#include "doctest.h"

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dring/gf2w.hpp"
#include "dring/rng.hpp"

using dring::Rng;
using dring::gf::Field;

namespace {

// independent oracle: carry-less schoolbook multiply, then reduce
std::uint32_t slow_mul(std::uint32_t a, std::uint32_t b, unsigned w,
                       std::uint32_t poly) {
    std::uint64_t acc = 0;
    for (unsigned i = 0; i < w; ++i)
        if (b & (1u << i)) acc ^= static_cast<std::uint64_t>(a) << i;
    for (int i = 2 * static_cast<int>(w) - 2; i >= static_cast<int>(w); --i)
        if (acc & (1ull << i))
            acc ^= static_cast<std::uint64_t>(poly) << (i - w);
    return static_cast<std::uint32_t>(acc);
}

}  // namespace

TEST_CASE("multiplication agrees with the carry-less oracle on GF(2^8)") {
    const auto& f = Field::get(8);
    for (std::uint32_t a = 0; a < 256; ++a)
        for (std::uint32_t b = 0; b < 256; ++b)
            CHECK(f.mul(a, b) == slow_mul(a, b, 8, f.polynomial()));
}

TEST_CASE("multiplication agrees with the oracle on the wider fields") {
    Rng rng(11);
    for (unsigned w : {10u, 16u, 20u}) {
        const auto& f = Field::get(w);
        for (int i = 0; i < 4000; ++i) {
            std::uint32_t a = rng.bits(w), b = rng.bits(w);
            CHECK(f.mul(a, b) == slow_mul(a, b, w, f.polynomial()));
        }
    }
}

TEST_CASE("field axioms hold") {
    const auto& f = Field::get(8);
    Rng rng(5);
    for (int i = 0; i < 2000; ++i) {
        std::uint32_t a = rng.bits(8), b = rng.bits(8), c = rng.bits(8);
        CHECK(Field::add(a, a) == 0);
        CHECK(f.mul(a, b) == f.mul(b, a));
        CHECK(f.mul(a, Field::add(b, c)) ==
              Field::add(f.mul(a, b), f.mul(a, c)));
        CHECK(f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c)));
        CHECK(f.mul(a, 1) == a);
    }
}

TEST_CASE("every nonzero element has a working inverse") {
    const auto& f = Field::get(8);
    for (std::uint32_t a = 1; a < 256; ++a) CHECK(f.mul(a, f.inv(a)) == 1);
    const auto& g = Field::get(16);
    Rng rng(6);
    for (int i = 0; i < 500; ++i) {
        std::uint32_t a = rng.bits(16);
        if (a) CHECK(g.mul(a, g.inv(a)) == 1);
    }
}

TEST_CASE("pow follows Fermat in the multiplicative group") {
    for (unsigned w : {8u, 10u}) {
        const auto& f = Field::get(w);
        Rng rng(w);
        for (int i = 0; i < 50; ++i) {
            std::uint32_t a = rng.bits(w);
            if (a == 0) continue;
            CHECK(f.pow(a, f.order()) == 1);
            CHECK(f.pow(a, 0) == 1);
            CHECK(f.pow(a, 3) == f.mul(a, f.mul(a, a)));
        }
    }
}

TEST_CASE("constructor refuses non-primitive polynomials") {
    // x^8 + x^4 + x^3 + x + 1 is irreducible yet its x is not a generator
    CHECK_THROWS_AS(Field(8, 0x11B), std::invalid_argument);
    // reducible
    CHECK_THROWS_AS(Field(8, 0x100), std::invalid_argument);
    CHECK_NOTHROW(Field(8, 0x11D));
}

TEST_CASE("eval_poly matches a naive power-sum evaluation") {
    const auto& f = Field::get(10);
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::uint32_t> coeffs(1 + rng.below(5));
        for (auto& c : coeffs) c = rng.bits(10);
        const std::uint32_t x = rng.bits(10);
        std::uint32_t want = 0;
        for (std::size_t k = 0; k < coeffs.size(); ++k)
            want = Field::add(want, f.mul(coeffs[k], f.pow(x, k)));
        CHECK(f.eval_poly(coeffs, x) == want);
    }
}

TEST_CASE("mul_acc is a scaled xor accumulate") {
    const auto& f = Field::get(16);
    Rng rng(17);
    std::vector<std::uint32_t> row(64), acc(64), expect(64);
    for (auto& v : row) v = rng.bits(16);
    for (auto& v : acc) v = rng.bits(16);
    expect = acc;
    const std::uint32_t c = rng.bits(16);
    for (std::size_t j = 0; j < row.size(); ++j)
        expect[j] = Field::add(expect[j], f.mul(c, row[j]));
    f.mul_acc(c, row, acc);
    CHECK(acc == expect);
}

TEST_CASE("interpolation at zero recovers the constant term") {
    Rng rng(19);
    for (unsigned w : {8u, 10u, 16u, 20u}) {
        const auto& f = Field::get(w);
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t degree = rng.below(4);
            std::vector<std::uint32_t> coeffs(degree + 1);
            for (auto& c : coeffs) c = rng.bits(w);
            std::vector<std::uint32_t> xs, ys;
            for (std::size_t i = 0; i < degree + 1; ++i) {
                xs.push_back(static_cast<std::uint32_t>(i + 1));
                ys.push_back(f.eval_poly(coeffs, xs.back()));
            }
            CHECK(dring::gf::interpolate_zero(f, xs, ys) == coeffs[0]);
        }
    }
}

TEST_CASE("lagrange coefficients reproduce values at the nodes") {
    const auto& f = Field::get(8);
    std::vector<std::uint32_t> xs = {1, 2, 3, 4};
    for (std::uint32_t x_eval : xs) {
        auto lam = dring::gf::lagrange_coeffs(f, xs, x_eval);
        for (std::size_t k = 0; k < xs.size(); ++k)
            CHECK(lam[k] == (xs[k] == x_eval ? 1u : 0u));
    }
}

TEST_CASE("packing is big-endian with zero slack") {
    std::vector<std::uint32_t> words = {0x3FF};
    auto bytes = dring::gf::pack_words(words, 10);
    REQUIRE(bytes.size() == 2);
    CHECK(bytes[0] == 0xFF);
    CHECK(bytes[1] == 0xC0);

    words = {0x01, 0x02};
    bytes = dring::gf::pack_words(words, 8);
    REQUIRE(bytes.size() == 2);
    CHECK(bytes[0] == 0x01);
    CHECK(bytes[1] == 0x02);
}

TEST_CASE("pack then unpack is identity for every supported width") {
    Rng rng(23);
    for (unsigned w : {8u, 10u, 16u, 20u}) {
        for (int trial = 0; trial < 40; ++trial) {
            std::vector<std::uint32_t> words(1 + rng.below(50));
            for (auto& v : words) v = rng.bits(w);
            auto bytes = dring::gf::pack_words(words, w);
            CHECK(bytes.size() == dring::gf::packed_size(words.size(), w));
            auto back = dring::gf::unpack_words(bytes, words.size(), w);
            CHECK(back == words);
        }
    }
}
