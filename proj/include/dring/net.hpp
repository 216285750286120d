#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dring/frame.hpp"
#include "dring/pir.hpp"

namespace dring::net {

struct QuorumUnreachable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Answers protocol frames against one database. Transport independent so
// the in-process benchmark and the TCP server share the exact code path.
class RequestHandler {
public:
    explicit RequestHandler(std::shared_ptr<const pir::DatabaseMatrix> db);

    // Maps malformed or mismatched requests to ERROR frames instead of
    // throwing. compute_s, when given, receives the query handling time.
    Frame handle(const Frame& request, double* compute_s = nullptr) const;

    const pir::DbInfo& info() const { return db_->info; }

private:
    std::shared_ptr<const pir::DatabaseMatrix> db_;
};

// One logical server connection from the client's point of view.
class Endpoint {
public:
    struct Exchange {
        Frame reply;
        std::uint64_t sent_bytes = 0;
        std::uint64_t received_bytes = 0;
        double server_seconds = 0;  // per-server processing time
    };

    virtual ~Endpoint() = default;
    virtual Exchange roundtrip(const Frame& request) = 0;
    virtual unsigned server_index() const = 0;
};

// In-process server. Requests and replies still pass through the codec so
// byte counts equal what a socket would carry.
class LocalEndpoint : public Endpoint {
public:
    LocalEndpoint(unsigned index, std::shared_ptr<const pir::DatabaseMatrix> db)
        : index_(index), handler_(std::move(db)) {}

    Exchange roundtrip(const Frame& request) override;
    unsigned server_index() const override { return index_; }

private:
    unsigned index_;
    RequestHandler handler_;
};

class TcpEndpoint : public Endpoint {
public:
    TcpEndpoint(unsigned index, const std::string& host, std::uint16_t port,
                double timeout_s = 30.0);
    ~TcpEndpoint() override;

    TcpEndpoint(const TcpEndpoint&) = delete;
    TcpEndpoint& operator=(const TcpEndpoint&) = delete;

    Exchange roundtrip(const Frame& request) override;
    unsigned server_index() const override { return index_; }

private:
    unsigned index_;
    int fd_ = -1;
    double timeout_s_;
};

class TcpServer {
public:
    // port 0 binds an ephemeral port; port() reports the actual one
    TcpServer(std::shared_ptr<const pir::DatabaseMatrix> db,
              std::uint16_t port, const std::string& bind_host = "127.0.0.1");
    ~TcpServer();

    std::uint16_t port() const { return port_; }
    void stop();

private:
    void accept_loop();
    void serve_connection(int fd);

    RequestHandler handler_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::mutex mu_;
    std::vector<std::thread> conn_threads_;
    std::vector<int> conn_fds_;
};

struct FetchOptions {
    // issue server requests one after another instead of in parallel;
    // keeps single-machine time measurements additive
    bool sequential = false;
    // false tolerates failed servers as long as a decode quorum answers
    bool require_all = true;
    std::uint32_t query_id = 1;
};

struct FetchResult {
    std::vector<std::vector<std::uint8_t>> records;
    std::uint64_t up_bytes = 0;
    std::uint64_t down_bytes = 0;
    unsigned responses = 0;
    double encode_s = 0;
    double server_s = 0;  // sum over servers
    double decode_s = 0;
    double total_s = 0;
};

// Retrieves the records at `betas` without revealing them to any coalition
// of at most params.privacy servers. When every server answers, the byte
// counters are checked against cost_model and a mismatch is a hard error.
FetchResult client_fetch(std::span<const std::uint64_t> betas,
                         std::span<Endpoint* const> endpoints,
                         const pir::PirParams& params, const pir::DbInfo& info,
                         const FetchOptions& opt, Rng& rng);

// DB_INFO_REQ roundtrip; not part of the fetch byte accounting
pir::DbInfo fetch_db_info(Endpoint& ep);

}  // namespace dring::net
