#include "dring/bench.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>

namespace dring::bench {

namespace {

struct Stats {
    double mean = 0, sd = 0;
};

Stats mean_sd(const std::vector<double>& xs) {
    Stats s;
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double acc = 0;
        for (double x : xs) acc += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(acc / static_cast<double>(xs.size() - 1));
    }
    return s;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::vector<BenchRow> run_sweep(const SweepConfig& cfg,
                                std::ostream* progress) {
    std::vector<BenchRow> rows;
    for (const auto& scheme : cfg.schemes) {
        for (std::uint64_t dbb : cfg.db_bytes) {
            for (std::uint64_t rec : cfg.record_bytes) {
                const std::uint64_t db_seed =
                    substream_seed(cfg.seed, "bench/db/" + scheme.name + "/" +
                                                 std::to_string(dbb) + "/" +
                                                 std::to_string(rec));
                auto db = std::make_shared<const pir::DatabaseMatrix>(
                    pir::synthetic_database(dbb, rec, scheme.word_bits,
                                            db_seed));
                if (progress)
                    *progress << "db ready: " << scheme.name << " "
                              << dbb << " B, " << db->info.num_records
                              << " records\n";
                for (unsigned l : cfg.servers) {
                    for (unsigned q : cfg.num_ads) {
                        pir::PirParams params;
                        params.servers = l;
                        params.privacy = cfg.privacy;
                        params.word_bits = scheme.word_bits;
                        params.depth = scheme.depth;
                        try {
                            params.validate();
                            pir::level_dims(db->info.num_records,
                                            params.depth);
                        } catch (const pir::PirError& e) {
                            if (progress)
                                *progress << "skip " << scheme.name << " l="
                                          << l << " q=" << q << ": "
                                          << e.what() << "\n";
                            continue;
                        }

                        std::vector<std::unique_ptr<net::LocalEndpoint>> eps;
                        std::vector<net::Endpoint*> ep_ptrs;
                        for (unsigned i = 0; i < l; ++i) {
                            eps.push_back(
                                std::make_unique<net::LocalEndpoint>(i, db));
                            ep_ptrs.push_back(eps.back().get());
                        }

                        Rng rng(substream_seed(
                            cfg.seed, "bench/run/" + scheme.name + "/" +
                                          std::to_string(dbb) + "/" +
                                          std::to_string(rec) + "/" +
                                          std::to_string(l) + "/" +
                                          std::to_string(q)));
                        net::FetchOptions opt;
                        opt.sequential = true;

                        BenchRow row;
                        row.scheme = scheme.name;
                        row.db_bytes = dbb;
                        row.record_bytes = rec;
                        row.l = l;
                        row.t = cfg.privacy;
                        row.w = scheme.word_bits;
                        row.d = scheme.depth;
                        row.q = q;
                        std::vector<double> enc, srv, dec, tot;
                        for (unsigned rep = 0; rep < cfg.repetitions; ++rep) {
                            std::vector<std::uint64_t> betas(q);
                            for (auto& b : betas)
                                b = rng.below(db->info.num_records);
                            auto res = net::client_fetch(
                                betas, ep_ptrs, params, db->info, opt, rng);
                            row.up_bytes = res.up_bytes;
                            row.down_bytes = res.down_bytes;
                            enc.push_back(res.encode_s);
                            srv.push_back(res.server_s);
                            dec.push_back(res.decode_s);
                            tot.push_back(res.total_s);
                        }
                        auto e = mean_sd(enc), s = mean_sd(srv),
                             d2 = mean_sd(dec), t2 = mean_sd(tot);
                        row.encode_s_mean = e.mean;
                        row.encode_s_sd = e.sd;
                        row.server_s_mean = s.mean;
                        row.server_s_sd = s.sd;
                        row.decode_s_mean = d2.mean;
                        row.decode_s_sd = d2.sd;
                        row.total_s_mean = t2.mean;
                        row.total_s_sd = t2.sd;
                        rows.push_back(std::move(row));
                        if (progress)
                            *progress << "done " << scheme.name << " db="
                                      << dbb << " rec=" << rec << " l=" << l
                                      << " q=" << q << " total="
                                      << fmt(t2.mean) << "s\n";
                    }
                }
            }
        }
    }
    return rows;
}

std::string bench_csv_header() {
    return "scheme,db_bytes,record_bytes,l,t,w,d,q,up_bytes,down_bytes,"
           "encode_s_mean,encode_s_sd,server_s_mean,server_s_sd,"
           "decode_s_mean,decode_s_sd,total_s_mean,total_s_sd";
}

std::string to_csv_row(const BenchRow& r) {
    std::string out = r.scheme;
    out += ',' + std::to_string(r.db_bytes);
    out += ',' + std::to_string(r.record_bytes);
    out += ',' + std::to_string(r.l);
    out += ',' + std::to_string(r.t);
    out += ',' + std::to_string(r.w);
    out += ',' + std::to_string(r.d);
    out += ',' + std::to_string(r.q);
    out += ',' + std::to_string(r.up_bytes);
    out += ',' + std::to_string(r.down_bytes);
    out += ',' + fmt(r.encode_s_mean);
    out += ',' + fmt(r.encode_s_sd);
    out += ',' + fmt(r.server_s_mean);
    out += ',' + fmt(r.server_s_sd);
    out += ',' + fmt(r.decode_s_mean);
    out += ',' + fmt(r.decode_s_sd);
    out += ',' + fmt(r.total_s_mean);
    out += ',' + fmt(r.total_s_sd);
    return out;
}

void write_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
    out << bench_csv_header() << "\n";
    for (const auto& r : rows) out << to_csv_row(r) << "\n";
}

}  // namespace dring::bench
