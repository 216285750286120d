#include "dring/gf2w.hpp"

#include <map>
#include <mutex>
#include <stdexcept>

namespace dring::gf {

std::uint32_t Field::polynomial_for(unsigned word_bits) {
    // Primitive polynomials, x is a generator of the multiplicative group.
    switch (word_bits) {
        case 8: return 0x11D;
        case 10: return 0x409;
        case 16: return 0x1100B;
        case 20: return 0x100009;
        default:
            throw std::invalid_argument(
                "Field: no stock polynomial for word_bits " +
                std::to_string(word_bits));
    }
}

Field::Field(unsigned word_bits, std::uint32_t poly)
    : w_(word_bits), poly_(poly) {
    if (w_ < 2 || w_ > 20)
        throw std::invalid_argument("Field: word_bits out of range");
    if ((poly_ >> w_) != 1u)
        throw std::invalid_argument("Field: polynomial degree != word_bits");
    order_ = (1u << w_) - 1u;
    log_.assign(order_ + 1u, 0);
    exp_.assign(2u * order_, 0);

    std::uint32_t x = 1;
    for (std::uint32_t i = 0; i < order_; ++i) {
        exp_[i] = x;
        exp_[i + order_] = x;
        if (log_[x] != 0 && x != 1)
            throw std::invalid_argument("Field: polynomial is not primitive");
        log_[x] = i;
        x <<= 1;
        if (x >> w_) x ^= poly_;
    }
    if (x != 1)  // generator must cycle back after exactly 2^w-1 steps
        throw std::invalid_argument("Field: polynomial is not primitive");
}

const Field& Field::get(unsigned word_bits) {
    static std::mutex mu;
    static std::map<unsigned, Field> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(word_bits);
    if (it == cache.end()) {
        it = cache
                 .emplace(word_bits,
                          Field(word_bits, polynomial_for(word_bits)))
                 .first;
    }
    return it->second;
}

std::uint32_t Field::inv(std::uint32_t a) const {
    if (a == 0) throw std::domain_error("Field::inv: zero has no inverse");
    return exp_[order_ - log_[a]];
}

std::uint32_t Field::pow(std::uint32_t a, std::uint64_t e) const {
    if (a == 0) return e == 0 ? 1u : 0u;
    return exp_[static_cast<std::uint64_t>(log_[a]) * (e % order_) % order_];
}

void Field::mul_acc(std::uint32_t c, std::span<const std::uint32_t> row,
                    std::span<std::uint32_t> acc) const {
    if (c == 0) return;
    const std::uint32_t lc = log_[c];
    const std::uint32_t* lg = log_.data();
    const std::uint32_t* ex = exp_.data();
    const std::uint32_t* r = row.data();
    std::uint32_t* a = acc.data();
    const std::size_t n = row.size();
    for (std::size_t j = 0; j < n; ++j) {
        std::uint32_t v = r[j];
        if (v) a[j] ^= ex[lc + lg[v]];
    }
}

std::uint32_t Field::eval_poly(std::span<const std::uint32_t> coeffs,
                               std::uint32_t x) const {
    std::uint32_t acc = 0;
    for (std::size_t i = coeffs.size(); i-- > 0;)
        acc = add(mul(acc, x), coeffs[i]);
    return acc;
}

std::vector<std::uint32_t> lagrange_coeffs(const Field& f,
                                           std::span<const std::uint32_t> xs,
                                           std::uint32_t x_eval) {
    const std::size_t k = xs.size();
    std::vector<std::uint32_t> out(k);
    for (std::size_t i = 0; i < k; ++i) {
        std::uint32_t num = 1, den = 1;
        for (std::size_t j = 0; j < k; ++j) {
            if (j == i) continue;
            num = f.mul(num, Field::add(x_eval, xs[j]));
            std::uint32_t d = Field::add(xs[i], xs[j]);
            if (d == 0)
                throw std::invalid_argument(
                    "lagrange_coeffs: duplicate interpolation point");
            den = f.mul(den, d);
        }
        out[i] = f.mul(num, f.inv(den));
    }
    return out;
}

std::uint32_t interpolate_zero(const Field& f,
                               std::span<const std::uint32_t> xs,
                               std::span<const std::uint32_t> ys) {
    if (xs.size() != ys.size())
        throw std::invalid_argument("interpolate_zero: size mismatch");
    auto lam = lagrange_coeffs(f, xs, 0);
    std::uint32_t acc = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        acc = Field::add(acc, f.mul(lam[i], ys[i]));
    return acc;
}

std::size_t packed_size(std::size_t count, unsigned w) {
    return (count * w + 7u) / 8u;
}

void pack_words(std::span<const std::uint32_t> words, unsigned w,
                std::span<std::uint8_t> out) {
    if (out.size() < packed_size(words.size(), w))
        throw std::invalid_argument("pack_words: output too small");
    std::uint64_t buf = 0;
    unsigned nbits = 0;
    std::size_t o = 0;
    for (std::uint32_t v : words) {
        buf = (buf << w) | (v & ((1ull << w) - 1u));
        nbits += w;
        while (nbits >= 8) {
            nbits -= 8;
            out[o++] = static_cast<std::uint8_t>(buf >> nbits);
        }
    }
    if (nbits) out[o++] = static_cast<std::uint8_t>(buf << (8 - nbits));
    while (o < out.size()) out[o++] = 0;
}

std::vector<std::uint8_t> pack_words(std::span<const std::uint32_t> words,
                                     unsigned w) {
    std::vector<std::uint8_t> out(packed_size(words.size(), w));
    pack_words(words, w, out);
    return out;
}

void unpack_words(std::span<const std::uint8_t> bytes, std::size_t count,
                  unsigned w, std::span<std::uint32_t> out) {
    if (bytes.size() < packed_size(count, w))
        throw std::invalid_argument("unpack_words: input too small");
    if (out.size() < count)
        throw std::invalid_argument("unpack_words: output too small");
    std::uint64_t buf = 0;
    unsigned nbits = 0;
    std::size_t i = 0;
    const std::uint32_t mask = static_cast<std::uint32_t>((1ull << w) - 1u);
    for (std::size_t k = 0; k < count; ++k) {
        while (nbits < w) {
            buf = (buf << 8) | bytes[i++];
            nbits += 8;
        }
        nbits -= w;
        out[k] = static_cast<std::uint32_t>(buf >> nbits) & mask;
    }
}

std::vector<std::uint32_t> unpack_words(std::span<const std::uint8_t> bytes,
                                        std::size_t count, unsigned w) {
    std::vector<std::uint32_t> out(count);
    unpack_words(bytes, count, w, out);
    return out;
}

}  // namespace dring::gf
