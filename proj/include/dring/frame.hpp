#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dring/pir.hpp"

namespace dring::net {

// Wire format, all integers big endian:
//   magic "DRPIR1" | type u8 | payload length u32 | payload
// The 11-byte header plus the fixed payload prefixes are what the cost
// model books as framing.
constexpr std::array<std::uint8_t, 6> kMagic = {'D', 'R', 'P', 'I', 'R', '1'};
constexpr std::size_t kHeaderSize = 11;
constexpr std::uint32_t kMaxPayload = 1u << 30;

enum class MsgType : std::uint8_t {
    Query = 0x01,
    Response = 0x02,
    DbInfo = 0x03,
    DbInfoReq = 0x04,
    Error = 0x7F,
};

enum class ErrCode : std::uint8_t {
    Malformed = 0x01,
    Shape = 0x02,
    Unsupported = 0x03,
    Internal = 0x04,
};

struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Frame {
    MsgType type = MsgType::Error;
    std::vector<std::uint8_t> payload;

    std::size_t wire_size() const { return kHeaderSize + payload.size(); }
};

std::vector<std::uint8_t> serialize_frame(const Frame& f);
// header must be kHeaderSize bytes; returns declared payload length
std::uint32_t parse_frame_header(std::span<const std::uint8_t> header,
                                 MsgType& type);

// QUERY: id u32 | num_ads u16 | depth u8 | level length u32 per level |
//        per ad, per level: packed share words
struct QueryPayload {
    std::uint32_t query_id = 0;
    std::uint16_t num_ads = 0;
    std::vector<std::uint32_t> level_lengths;
    std::vector<std::uint8_t> share_bytes;
};

std::vector<std::uint8_t> encode_query_payload(const QueryPayload& q);
// word_bits is needed to validate that share_bytes matches the declared
// lengths exactly; the server takes it from its database header
QueryPayload decode_query_payload(std::span<const std::uint8_t> payload,
                                  unsigned word_bits);

// RESPONSE: id u32 | num_ads u16 | per ad: packed response words
struct ResponsePayload {
    std::uint32_t query_id = 0;
    std::uint16_t num_ads = 0;
    std::vector<std::uint8_t> body;
};

std::vector<std::uint8_t> encode_response_payload(const ResponsePayload& r);
ResponsePayload decode_response_payload(std::span<const std::uint8_t> payload);

// DB_INFO carries the database file header verbatim
std::vector<std::uint8_t> encode_db_info_payload(const pir::DbInfo& info);
pir::DbInfo decode_db_info_payload(std::span<const std::uint8_t> payload);

// ERROR: code u8 | utf-8 message
std::vector<std::uint8_t> encode_error_payload(ErrCode code,
                                               const std::string& message);
std::pair<ErrCode, std::string> decode_error_payload(
    std::span<const std::uint8_t> payload);

// share packing helpers shared by client and server
std::vector<std::uint8_t> pack_shares(
    std::span<const pir::QueryShare> ads_for_one_server, unsigned word_bits);
std::vector<pir::QueryShare> unpack_shares(
    const QueryPayload& q, unsigned word_bits, unsigned server_index);

}  // namespace dring::net
