#include "dring/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <future>

namespace dring::net {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Frame error_frame(ErrCode code, const std::string& msg) {
    return Frame{MsgType::Error, encode_error_payload(code, msg)};
}

void write_all(int fd, const std::uint8_t* data, std::size_t n,
               double timeout_s) {
    const auto t0 = Clock::now();
    std::size_t off = 0;
    while (off < n) {
        struct pollfd p{fd, POLLOUT, 0};
        const double left = timeout_s - seconds_since(t0);
        if (left <= 0) throw ProtocolError("socket: write timeout");
        int rc = ::poll(&p, 1, static_cast<int>(left * 1000) + 1);
        if (rc <= 0) throw ProtocolError("socket: write timeout");
        ssize_t w = ::send(fd, data + off, n - off, MSG_NOSIGNAL);
        if (w < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            throw ProtocolError(std::string("socket: send: ") +
                                std::strerror(errno));
        }
        off += static_cast<std::size_t>(w);
    }
}

// returns false on clean EOF at offset 0
bool read_exact(int fd, std::uint8_t* data, std::size_t n, double timeout_s) {
    const auto t0 = Clock::now();
    std::size_t off = 0;
    while (off < n) {
        struct pollfd p{fd, POLLIN, 0};
        const double left = timeout_s - seconds_since(t0);
        if (left <= 0) throw ProtocolError("socket: read timeout");
        int rc = ::poll(&p, 1, static_cast<int>(left * 1000) + 1);
        if (rc <= 0) throw ProtocolError("socket: read timeout");
        ssize_t r = ::recv(fd, data + off, n - off, 0);
        if (r == 0) {
            if (off == 0) return false;
            throw ProtocolError("socket: connection closed mid-frame");
        }
        if (r < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            throw ProtocolError(std::string("socket: recv: ") +
                                std::strerror(errno));
        }
        off += static_cast<std::size_t>(r);
    }
    return true;
}

// reads one frame; false on clean EOF before any byte
bool read_frame(int fd, Frame& out, double timeout_s) {
    std::uint8_t header[kHeaderSize];
    if (!read_exact(fd, header, kHeaderSize, timeout_s)) return false;
    MsgType type;
    std::uint32_t len = parse_frame_header({header, kHeaderSize}, type);
    out.type = type;
    out.payload.resize(len);
    if (len > 0 && !read_exact(fd, out.payload.data(), len, timeout_s))
        throw ProtocolError("socket: connection closed mid-frame");
    return true;
}

}  // namespace

RequestHandler::RequestHandler(std::shared_ptr<const pir::DatabaseMatrix> db)
    : db_(std::move(db)) {
    if (!db_ || db_->info.num_records == 0)
        throw pir::EmptyDatabase("RequestHandler: empty database");
}

Frame RequestHandler::handle(const Frame& request, double* compute_s) const {
    if (compute_s) *compute_s = 0;
    switch (request.type) {
        case MsgType::DbInfoReq:
            return Frame{MsgType::DbInfo, encode_db_info_payload(db_->info)};
        case MsgType::Query: {
            const auto t0 = Clock::now();
            try {
                auto q = decode_query_payload(request.payload,
                                              db_->info.word_bits);
                auto shares = unpack_shares(q, db_->info.word_bits, 0);
                pir::PirParams p;
                p.word_bits = db_->info.word_bits;
                p.depth = static_cast<unsigned>(q.level_lengths.size());
                ResponsePayload resp;
                resp.query_id = q.query_id;
                resp.num_ads = q.num_ads;
                for (const auto& share : shares) {
                    auto r = pir::server_compute(share, *db_, p);
                    auto packed =
                        gf::pack_words(r.words, db_->info.word_bits);
                    resp.body.insert(resp.body.end(), packed.begin(),
                                     packed.end());
                }
                if (compute_s) *compute_s = seconds_since(t0);
                return Frame{MsgType::Response,
                             encode_response_payload(resp)};
            } catch (const ProtocolError& e) {
                return error_frame(ErrCode::Malformed, e.what());
            } catch (const pir::ShapeMismatch& e) {
                return error_frame(ErrCode::Shape, e.what());
            } catch (const pir::PirError& e) {
                return error_frame(ErrCode::Shape, e.what());
            } catch (const std::exception& e) {
                return error_frame(ErrCode::Internal, e.what());
            }
        }
        case MsgType::Response:
        case MsgType::DbInfo:
        case MsgType::Error:
            return error_frame(ErrCode::Unsupported,
                               "handler: unexpected message type");
    }
    return error_frame(ErrCode::Unsupported, "handler: unknown message type");
}

Endpoint::Exchange LocalEndpoint::roundtrip(const Frame& request) {
    Exchange ex;
    // serialize both directions so counted bytes match a real socket,
    // and so the codec is exercised on every path
    auto wire = serialize_frame(request);
    ex.sent_bytes = wire.size();
    MsgType type;
    std::uint32_t len = parse_frame_header(
        {wire.data(), kHeaderSize}, type);
    Frame parsed;
    parsed.type = type;
    parsed.payload.assign(wire.begin() + kHeaderSize,
                          wire.begin() + kHeaderSize + len);
    double compute = 0;
    ex.reply = handler_.handle(parsed, &compute);
    ex.server_seconds = compute;
    ex.received_bytes = serialize_frame(ex.reply).size();
    return ex;
}

TcpEndpoint::TcpEndpoint(unsigned index, const std::string& host,
                         std::uint16_t port, double timeout_s)
    : index_(index), timeout_s_(timeout_s) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0)
        throw ProtocolError(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd_);
        fd_ = -1;
        throw ProtocolError("socket: bad address " + host);
    }
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        int saved = errno;
        ::close(fd_);
        fd_ = -1;
        throw ProtocolError(std::string("socket: connect: ") +
                            std::strerror(saved));
    }
}

TcpEndpoint::~TcpEndpoint() {
    if (fd_ >= 0) ::close(fd_);
}

Endpoint::Exchange TcpEndpoint::roundtrip(const Frame& request) {
    Exchange ex;
    auto wire = serialize_frame(request);
    const auto t0 = Clock::now();
    write_all(fd_, wire.data(), wire.size(), timeout_s_);
    ex.sent_bytes = wire.size();
    if (!read_frame(fd_, ex.reply, timeout_s_))
        throw ProtocolError("socket: server closed connection");
    // wall time of the exchange; on one machine this tracks compute
    ex.server_seconds = seconds_since(t0);
    ex.received_bytes = kHeaderSize + ex.reply.payload.size();
    return ex;
}

TcpServer::TcpServer(std::shared_ptr<const pir::DatabaseMatrix> db,
                     std::uint16_t port, const std::string& bind_host)
    : handler_(std::move(db)) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0)
        throw ProtocolError(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, bind_host.c_str(), &addr.sin_addr) != 1)
        throw ProtocolError("socket: bad bind address " + bind_host);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) <
        0)
        throw ProtocolError(std::string("socket: bind: ") +
                            std::strerror(errno));
    if (::listen(listen_fd_, 64) < 0)
        throw ProtocolError(std::string("socket: listen: ") +
                            std::strerror(errno));
    sockaddr_in bound{};
    socklen_t blen = sizeof(bound);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &blen);
    port_ = ntohs(bound.sin_port);
    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::stop() {
    bool was_running = running_.exchange(false);
    if (listen_fd_ >= 0) {
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    if (was_running) {
        {
            std::lock_guard<std::mutex> lock(mu_);
            for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
        }
        if (accept_thread_.joinable()) accept_thread_.join();
        std::vector<std::thread> threads;
        {
            std::lock_guard<std::mutex> lock(mu_);
            threads.swap(conn_threads_);
        }
        for (auto& t : threads)
            if (t.joinable()) t.join();
    }
}

void TcpServer::accept_loop() {
    while (running_) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (!running_) break;
            if (errno == EINTR) continue;
            break;
        }
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        std::lock_guard<std::mutex> lock(mu_);
        conn_fds_.push_back(fd);
        conn_threads_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void TcpServer::serve_connection(int fd) {
    constexpr double kIdleTimeout = 3600.0;
    try {
        Frame request;
        while (running_ && read_frame(fd, request, kIdleTimeout)) {
            Frame reply = handler_.handle(request);
            auto wire = serialize_frame(reply);
            write_all(fd, wire.data(), wire.size(), 60.0);
        }
    } catch (const ProtocolError& e) {
        // a broken frame leaves the stream unusable: answer once, close
        try {
            auto wire = serialize_frame(
                error_frame(ErrCode::Malformed, e.what()));
            write_all(fd, wire.data(), wire.size(), 5.0);
        } catch (...) {
        }
    } catch (...) {
    }
    ::close(fd);
}

pir::DbInfo fetch_db_info(Endpoint& ep) {
    auto ex = ep.roundtrip(Frame{MsgType::DbInfoReq, {}});
    if (ex.reply.type == MsgType::Error) {
        auto [code, msg] = decode_error_payload(ex.reply.payload);
        throw ProtocolError("db info: server error: " + msg);
    }
    if (ex.reply.type != MsgType::DbInfo)
        throw ProtocolError("db info: unexpected reply type");
    return decode_db_info_payload(ex.reply.payload);
}

FetchResult client_fetch(std::span<const std::uint64_t> betas,
                         std::span<Endpoint* const> endpoints,
                         const pir::PirParams& params, const pir::DbInfo& info,
                         const FetchOptions& opt, Rng& rng) {
    params.validate();
    if (endpoints.size() != params.servers)
        throw pir::ShapeMismatch("client_fetch: endpoint count != servers");
    if (params.word_bits != info.word_bits)
        throw pir::ShapeMismatch("client_fetch: word size disagrees with db");
    if (betas.size() > 0xFFFF)
        throw pir::ShapeMismatch("client_fetch: too many records per fetch");

    const auto t_total = Clock::now();
    FetchResult res;

    // encode: one share vector per (record, server), batched per server
    const auto t_enc = Clock::now();
    const auto dims = pir::level_dims(info.num_records, params.depth);
    std::vector<std::vector<pir::QueryShare>> per_server(params.servers);
    for (std::uint64_t beta : betas) {
        auto shares = pir::encode_query(beta, info.num_records, params, rng);
        for (unsigned i = 0; i < params.servers; ++i)
            per_server[i].push_back(std::move(shares[i]));
    }
    std::vector<Frame> requests(params.servers);
    for (unsigned i = 0; i < params.servers; ++i) {
        QueryPayload q;
        q.query_id = opt.query_id;
        q.num_ads = static_cast<std::uint16_t>(betas.size());
        q.level_lengths = dims;
        q.share_bytes = pack_shares(per_server[i], params.word_bits);
        requests[i] = Frame{MsgType::Query, encode_query_payload(q)};
    }
    res.encode_s = seconds_since(t_enc);

    // dispatch
    struct Outcome {
        bool ok = false;
        Endpoint::Exchange ex;
        std::string error;
    };
    std::vector<Outcome> outcomes(params.servers);
    auto run_one = [&](unsigned i) {
        try {
            outcomes[i].ex = endpoints[i]->roundtrip(requests[i]);
            outcomes[i].ok = true;
        } catch (const std::exception& e) {
            outcomes[i].error = e.what();
        }
    };
    if (opt.sequential) {
        for (unsigned i = 0; i < params.servers; ++i) run_one(i);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(params.servers);
        for (unsigned i = 0; i < params.servers; ++i)
            threads.emplace_back(run_one, i);
        for (auto& t : threads) t.join();
    }

    // gather
    const std::size_t s = static_cast<std::size_t>(info.words_per_row());
    const std::size_t resp_bytes = gf::packed_size(s, params.word_bits);
    std::vector<std::vector<pir::ResponseShare>> by_ad(betas.size());
    for (unsigned i = 0; i < params.servers; ++i) {
        auto& oc = outcomes[i];
        if (!oc.ok) {
            if (opt.require_all)
                throw QuorumUnreachable("client_fetch: server " +
                                        std::to_string(i) + ": " + oc.error);
            continue;
        }
        res.up_bytes += oc.ex.sent_bytes;
        res.down_bytes += oc.ex.received_bytes;
        res.server_s += oc.ex.server_seconds;
        if (oc.ex.reply.type == MsgType::Error) {
            auto [code, msg] = decode_error_payload(oc.ex.reply.payload);
            throw ProtocolError("client_fetch: server " + std::to_string(i) +
                                " error: " + msg);
        }
        if (oc.ex.reply.type != MsgType::Response)
            throw ProtocolError("client_fetch: unexpected reply type");
        auto resp = decode_response_payload(oc.ex.reply.payload);
        if (resp.query_id != opt.query_id ||
            resp.num_ads != betas.size() ||
            resp.body.size() != resp_bytes * betas.size())
            throw ProtocolError("client_fetch: response shape mismatch");
        for (std::size_t a = 0; a < betas.size(); ++a) {
            pir::ResponseShare share;
            share.server_index = i;
            share.words = gf::unpack_words(
                std::span<const std::uint8_t>(resp.body.data() + a * resp_bytes,
                                              resp_bytes),
                s, params.word_bits);
            by_ad[a].push_back(std::move(share));
        }
        ++res.responses;
    }
    if (res.responses < params.responses_needed())
        throw QuorumUnreachable(
            "client_fetch: " + std::to_string(res.responses) + " of " +
            std::to_string(params.responses_needed()) + " needed responses");

    // decode
    const auto t_dec = Clock::now();
    res.records.reserve(betas.size());
    for (std::size_t a = 0; a < betas.size(); ++a)
        res.records.push_back(pir::decode_response(by_ad[a], params, info));
    res.decode_s = seconds_since(t_dec);
    res.total_s = seconds_since(t_total);

    if (res.responses == params.servers) {
        const auto model = pir::cost_model(info, params,
                                           static_cast<unsigned>(betas.size()));
        if (res.up_bytes != model.up_bytes() ||
            res.down_bytes != model.down_bytes())
            throw ProtocolError("client_fetch: wire bytes disagree with model");
    }
    return res;
}

}  // namespace dring::net
