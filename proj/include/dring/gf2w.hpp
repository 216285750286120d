#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dring::gf {

// GF(2^w) arithmetic through log/antilog tables. Addition is XOR. The
// antilog table is stored twice over so products of logs never need a
// reduction mod 2^w-1.
//
// Word sizes 8, 10, 16 and 20 cover the supported database layouts; other
// sizes up to 20 work as long as the polynomial is primitive (the
// constructor checks the generator has full period and refuses otherwise).
class Field {
public:
    Field(unsigned word_bits, std::uint32_t poly);

    // cached field for one of the stock word sizes
    static const Field& get(unsigned word_bits);
    static std::uint32_t polynomial_for(unsigned word_bits);

    unsigned word_bits() const { return w_; }
    std::uint32_t order() const { return order_; }  // multiplicative, 2^w-1
    std::uint32_t size() const { return order_ + 1; }
    std::uint32_t polynomial() const { return poly_; }

    static std::uint32_t add(std::uint32_t a, std::uint32_t b) { return a ^ b; }

    std::uint32_t mul(std::uint32_t a, std::uint32_t b) const {
        if (a == 0 || b == 0) return 0;
        return exp_[log_[a] + log_[b]];
    }

    std::uint32_t inv(std::uint32_t a) const;  // a != 0
    std::uint32_t pow(std::uint32_t a, std::uint64_t e) const;

    // acc[j] ^= c * row[j]; the server-side inner loop
    void mul_acc(std::uint32_t c, std::span<const std::uint32_t> row,
                 std::span<std::uint32_t> acc) const;

    // Horner evaluation, coefficients ordered low degree first
    std::uint32_t eval_poly(std::span<const std::uint32_t> coeffs,
                            std::uint32_t x) const;

private:
    unsigned w_;
    std::uint32_t poly_;
    std::uint32_t order_;
    std::vector<std::uint32_t> log_;  // index 0 unused
    std::vector<std::uint32_t> exp_;  // length 2*order
};

// Lagrange coefficients lambda_k such that f(x_eval) = sum_k lambda_k f(x_k)
// for any polynomial of degree < xs.size(). Points must be distinct.
std::vector<std::uint32_t> lagrange_coeffs(const Field& f,
                                           std::span<const std::uint32_t> xs,
                                           std::uint32_t x_eval);

// convenience wrapper: interpolate a shared value at x = 0
std::uint32_t interpolate_zero(const Field& f,
                               std::span<const std::uint32_t> xs,
                               std::span<const std::uint32_t> ys);

// Bit packing with big-endian bit order: the first word occupies the highest
// bits of the first byte. Trailing bits of the final byte are zero.
std::size_t packed_size(std::size_t count, unsigned w);
void pack_words(std::span<const std::uint32_t> words, unsigned w,
                std::span<std::uint8_t> out);
std::vector<std::uint8_t> pack_words(std::span<const std::uint32_t> words,
                                     unsigned w);
void unpack_words(std::span<const std::uint8_t> bytes, std::size_t count,
                  unsigned w, std::span<std::uint32_t> out);
std::vector<std::uint32_t> unpack_words(std::span<const std::uint8_t> bytes,
                                        std::size_t count, unsigned w);

}  // namespace dring::gf
