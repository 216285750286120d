#include "dring/frame.hpp"

#include <algorithm>

namespace dring::net {

namespace {

void append_u16(std::vector<std::uint8_t>& v, std::uint16_t x) {
    v.push_back(static_cast<std::uint8_t>(x >> 8));
    v.push_back(static_cast<std::uint8_t>(x));
}
void append_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(static_cast<std::uint8_t>(x >> 24));
    v.push_back(static_cast<std::uint8_t>(x >> 16));
    v.push_back(static_cast<std::uint8_t>(x >> 8));
    v.push_back(static_cast<std::uint8_t>(x));
}

struct Reader {
    std::span<const std::uint8_t> data;
    std::size_t pos = 0;

    std::uint8_t u8() {
        need(1);
        return data[pos++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>((data[pos] << 8) |
                                                     data[pos + 1]);
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = (static_cast<std::uint32_t>(data[pos]) << 24) |
                          (static_cast<std::uint32_t>(data[pos + 1]) << 16) |
                          (static_cast<std::uint32_t>(data[pos + 2]) << 8) |
                          static_cast<std::uint32_t>(data[pos + 3]);
        pos += 4;
        return v;
    }
    std::span<const std::uint8_t> bytes(std::size_t n) {
        need(n);
        auto s = data.subspan(pos, n);
        pos += n;
        return s;
    }
    std::size_t remaining() const { return data.size() - pos; }
    void need(std::size_t n) const {
        if (data.size() - pos < n)
            throw ProtocolError("payload: truncated");
    }
};

}  // namespace

std::vector<std::uint8_t> serialize_frame(const Frame& f) {
    if (f.payload.size() > kMaxPayload)
        throw ProtocolError("frame: payload too large");
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + f.payload.size());
    out.insert(out.end(), kMagic.begin(), kMagic.end());
    out.push_back(static_cast<std::uint8_t>(f.type));
    append_u32(out, static_cast<std::uint32_t>(f.payload.size()));
    out.insert(out.end(), f.payload.begin(), f.payload.end());
    return out;
}

std::uint32_t parse_frame_header(std::span<const std::uint8_t> header,
                                 MsgType& type) {
    if (header.size() < kHeaderSize)
        throw ProtocolError("frame: short header");
    if (!std::equal(kMagic.begin(), kMagic.end(), header.begin()))
        throw ProtocolError("frame: bad magic");
    const std::uint8_t t = header[6];
    switch (t) {
        case 0x01: type = MsgType::Query; break;
        case 0x02: type = MsgType::Response; break;
        case 0x03: type = MsgType::DbInfo; break;
        case 0x04: type = MsgType::DbInfoReq; break;
        case 0x7F: type = MsgType::Error; break;
        default: throw ProtocolError("frame: unknown message type");
    }
    Reader r{header.subspan(7)};
    std::uint32_t len = r.u32();
    if (len > kMaxPayload) throw ProtocolError("frame: payload too large");
    return len;
}

std::vector<std::uint8_t> encode_query_payload(const QueryPayload& q) {
    if (q.level_lengths.empty() || q.level_lengths.size() > 255)
        throw ProtocolError("query payload: bad depth");
    std::vector<std::uint8_t> out;
    out.reserve(7 + 4 * q.level_lengths.size() + q.share_bytes.size());
    append_u32(out, q.query_id);
    append_u16(out, q.num_ads);
    out.push_back(static_cast<std::uint8_t>(q.level_lengths.size()));
    for (std::uint32_t r : q.level_lengths) append_u32(out, r);
    out.insert(out.end(), q.share_bytes.begin(), q.share_bytes.end());
    return out;
}

QueryPayload decode_query_payload(std::span<const std::uint8_t> payload,
                                  unsigned word_bits) {
    Reader r{payload};
    QueryPayload q;
    q.query_id = r.u32();
    q.num_ads = r.u16();
    const std::uint8_t depth = r.u8();
    if (depth == 0) throw ProtocolError("query payload: zero depth");
    std::uint64_t per_ad = 0;
    for (unsigned k = 0; k < depth; ++k) {
        std::uint32_t len = r.u32();
        if (len == 0) throw ProtocolError("query payload: zero level length");
        q.level_lengths.push_back(len);
        per_ad += gf::packed_size(len, word_bits);
    }
    const std::uint64_t expect = per_ad * q.num_ads;
    if (r.remaining() != expect)
        throw ProtocolError("query payload: share byte count mismatch");
    auto b = r.bytes(static_cast<std::size_t>(expect));
    q.share_bytes.assign(b.begin(), b.end());
    return q;
}

std::vector<std::uint8_t> encode_response_payload(const ResponsePayload& r) {
    std::vector<std::uint8_t> out;
    out.reserve(6 + r.body.size());
    append_u32(out, r.query_id);
    append_u16(out, r.num_ads);
    out.insert(out.end(), r.body.begin(), r.body.end());
    return out;
}

ResponsePayload decode_response_payload(
    std::span<const std::uint8_t> payload) {
    Reader r{payload};
    ResponsePayload p;
    p.query_id = r.u32();
    p.num_ads = r.u16();
    auto b = r.bytes(r.remaining());
    p.body.assign(b.begin(), b.end());
    if (p.num_ads > 0 && p.body.size() % p.num_ads != 0)
        throw ProtocolError("response payload: uneven body");
    return p;
}

std::vector<std::uint8_t> encode_db_info_payload(const pir::DbInfo& info) {
    auto h = pir::encode_db_header(info);
    return {h.begin(), h.end()};
}

pir::DbInfo decode_db_info_payload(std::span<const std::uint8_t> payload) {
    if (payload.size() != pir::kDbHeaderSize)
        throw ProtocolError("db info payload: wrong size");
    try {
        return pir::decode_db_header(payload);
    } catch (const pir::PirError& e) {
        throw ProtocolError(std::string("db info payload: ") + e.what());
    }
}

std::vector<std::uint8_t> encode_error_payload(ErrCode code,
                                               const std::string& message) {
    std::vector<std::uint8_t> out;
    out.reserve(1 + message.size());
    out.push_back(static_cast<std::uint8_t>(code));
    out.insert(out.end(), message.begin(), message.end());
    return out;
}

std::pair<ErrCode, std::string> decode_error_payload(
    std::span<const std::uint8_t> payload) {
    Reader r{payload};
    auto code = static_cast<ErrCode>(r.u8());
    auto b = r.bytes(r.remaining());
    return {code, std::string(b.begin(), b.end())};
}

std::vector<std::uint8_t> pack_shares(
    std::span<const pir::QueryShare> ads_for_one_server, unsigned word_bits) {
    std::vector<std::uint8_t> out;
    for (const auto& share : ads_for_one_server) {
        std::size_t off = 0;
        for (std::uint32_t len : share.level_lengths) {
            auto level = std::span<const std::uint32_t>(share.words.data() + off,
                                                        len);
            auto packed = gf::pack_words(level, word_bits);
            out.insert(out.end(), packed.begin(), packed.end());
            off += len;
        }
    }
    return out;
}

std::vector<pir::QueryShare> unpack_shares(const QueryPayload& q,
                                           unsigned word_bits,
                                           unsigned server_index) {
    std::vector<pir::QueryShare> shares;
    shares.reserve(q.num_ads);
    std::size_t off = 0;
    for (unsigned a = 0; a < q.num_ads; ++a) {
        pir::QueryShare s;
        s.server_index = server_index;
        s.level_lengths = q.level_lengths;
        for (std::uint32_t len : q.level_lengths) {
            const std::size_t nbytes = gf::packed_size(len, word_bits);
            if (off + nbytes > q.share_bytes.size())
                throw ProtocolError("query payload: truncated shares");
            auto words = gf::unpack_words(
                std::span<const std::uint8_t>(q.share_bytes.data() + off,
                                              nbytes),
                len, word_bits);
            s.words.insert(s.words.end(), words.begin(), words.end());
            off += nbytes;
        }
        shares.push_back(std::move(s));
    }
    return shares;
}

}  // namespace dring::net
