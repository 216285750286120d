// command line entry point for the dual-ring toolkit

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "dring/bench.hpp"
#include "dring/classifier.hpp"
#include "dring/dp.hpp"
#include "dring/entropy.hpp"
#include "dring/fixtures.hpp"
#include "dring/io.hpp"
#include "dring/net.hpp"
#include "dring/pipeline.hpp"
#include "dring/pir.hpp"
#include "dring/profile.hpp"
#include "dring/rng.hpp"
#include "dring/tfidf.hpp"

namespace {

using nlohmann::json;
using namespace dring;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

// precedence: explicit flag > config file > built-in default
template <typename T>
void cfg_override(const CLI::App* sub, const std::string& flag,
                  const json& cfg, const std::string& key, T& value) {
    if (sub->count(flag) == 0 && cfg.contains(key)) value = cfg[key].get<T>();
}

profile::ProfileDelta parse_delta(const json& j) {
    profile::ProfileDelta d;
    d.slot = j.value("slot", std::int64_t{0});
    d.max_change = j.value("max_change", 1.0);
    // .items() must not run on a temporary, it keeps a reference
    const json cat = j.value("category", json::object());
    const json brw = j.value("browsing", json::object());
    const json itx = j.value("interaction", json::object());
    for (const auto& [k, v] : cat.items())
        d.category_changes[k] = v.get<double>();
    for (const auto& [k, v] : brw.items())
        d.browsing_changes[k] = v.get<double>();
    for (const auto& [k, v] : itx.items())
        d.interaction_changes[k] = v.get<double>();
    return d;
}

profile::UsageRecord parse_usage(const json& j) {
    profile::UsageRecord u;
    u.slot = j.value("slot", std::int64_t{0});
    const json usage = j.value("usage", json::object());
    for (const auto& [k, v] : usage.items())
        u.per_service_usage[k] = v.get<double>();
    return u;
}

profile::CategoryMap corpus_map(const tfidf::InterestCorpus& corpus) {
    return fixtures::category_map_for(corpus);
}

std::map<std::string, std::vector<ads::CategoryNode>> app_categories(
    std::span<const ads::AdImpression> impressions,
    const ads::Taxonomy& taxonomy) {
    std::map<std::string, std::vector<ads::CategoryNode>> cs;
    for (const auto& imp : impressions) {
        if (cs.count(imp.app_category)) continue;
        if (taxonomy.has_root(imp.app_category))
            cs[imp.app_category].push_back(
                ads::CategoryNode{{imp.app_category}});
    }
    return cs;
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-")
        std::cout << text;
    else
        write_file(out, text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dual-ring privacy toolkit"};
    app.require_subcommand(1);

    // ---- gen-fixtures -----------------------------------------------
    auto* gen = app.add_subcommand("gen-fixtures",
                                   "write deterministic synthetic inputs");
    struct {
        std::string config, out;
        std::uint64_t seed = 1;
        std::size_t ads = 5, impressions = 4, profiles = 3;
        std::uint64_t db_size = 16384, record_size = 64;
        unsigned word_bits = 8;
        std::int64_t overlap = 21600;
    } gf;
    gen->add_option("--config", gf.config);
    gen->add_option("--seed", gf.seed);
    gen->add_option("--ads", gf.ads, "planted urls per class");
    gen->add_option("--impressions-per-ad", gf.impressions);
    gen->add_option("--profiles", gf.profiles);
    gen->add_option("--db-size", gf.db_size, "database bytes");
    gen->add_option("--record-size", gf.record_size, "record bytes");
    gen->add_option("--word-bits", gf.word_bits);
    gen->add_option("--overlap", gf.overlap, "random-class window seconds");
    gen->add_option("--out", gf.out)->required();
    gen->callback([&] {
        const json cfg = load_config(gf.config);
        cfg_override(gen, "--seed", cfg, "seed", gf.seed);
        cfg_override(gen, "--ads", cfg, "ads", gf.ads);
        cfg_override(gen, "--db-size", cfg, "db_size", gf.db_size);
        cfg_override(gen, "--record-size", cfg, "record_size", gf.record_size);
        cfg_override(gen, "--overlap", cfg, "overlap", gf.overlap);
        if (gf.record_size == 0 || gf.db_size < gf.record_size)
            throw std::invalid_argument("gen-fixtures: db smaller than one record");
        fixtures::FixtureConfig fc;
        fc.seed = gf.seed;
        fc.num_profiles = gf.profiles;
        fc.ads_per_class = gf.ads;
        fc.impressions_per_ad = gf.impressions;
        fc.overlap_s = gf.overlap;
        fc.db_records = gf.db_size / gf.record_size;
        fc.record_bytes = gf.record_size;
        fc.word_bits = gf.word_bits;
        fixtures::write_fixtures(fixtures::generate_fixtures(fc), gf.out);
        std::cout << "fixtures written to " << gf.out << "\n";
    });

    // ---- profile ----------------------------------------------------
    auto* prof = app.add_subcommand("profile", "interest profile operations");
    prof->require_subcommand(1);

    auto* pest = prof->add_subcommand("establish");
    struct {
        std::string context, corpus, out;
        std::int64_t timestamp = 0;
    } pe;
    pest->add_option("--context", pe.context)->required();
    pest->add_option("--corpus", pe.corpus)->required();
    pest->add_option("--timestamp", pe.timestamp);
    pest->add_option("--out", pe.out)->required();
    pest->callback([&] {
        const auto corpus = tfidf::load_corpus(pe.corpus);
        const auto ctx = profile::load_context(pe.context);
        const auto p = profile::establish_profile(ctx, corpus_map(corpus), {},
                                                  pe.timestamp);
        profile::save_profile(p, pe.out);
    });

    auto* pevo = prof->add_subcommand("evolve");
    struct {
        std::string profile, delta, out;
    } pv;
    pevo->add_option("--profile", pv.profile)->required();
    pevo->add_option("--delta", pv.delta, "delta description, json")
        ->required();
    pevo->add_option("--out", pv.out)->required();
    pevo->callback([&] {
        const auto p = profile::load_profile(pv.profile);
        json j;
        try {
            j = json::parse(read_file(pv.delta));
        } catch (const json::exception& e) {
            throw std::invalid_argument(pv.delta + ": " + e.what());
        }
        profile::save_profile(profile::evolve(p, parse_delta(j)), pv.out);
    });

    auto* pusg = prof->add_subcommand("usage");
    struct {
        std::string profile, context, corpus, usage, out;
    } pu;
    pusg->add_option("--profile", pu.profile)->required();
    pusg->add_option("--context", pu.context)->required();
    pusg->add_option("--corpus", pu.corpus)->required();
    pusg->add_option("--usage", pu.usage, "usage record, json")->required();
    pusg->add_option("--out", pu.out)->required();
    pusg->callback([&] {
        const auto p = profile::load_profile(pu.profile);
        const auto ctx = profile::load_context(pu.context);
        const auto corpus = tfidf::load_corpus(pu.corpus);
        json j;
        try {
            j = json::parse(read_file(pu.usage));
        } catch (const json::exception& e) {
            throw std::invalid_argument(pu.usage + ": " + e.what());
        }
        profile::save_profile(
            profile::incorporate_usage(p, parse_usage(j), ctx,
                                       corpus_map(corpus)),
            pu.out);
    });

    auto* psta = prof->add_subcommand("state");
    struct {
        std::vector<std::string> history;
        double tol = 1e-6;
        std::size_t window = 3;
    } ps;
    psta->add_option("history", ps.history, "profile files, oldest first")
        ->required();
    psta->add_option("--tol", ps.tol);
    psta->add_option("--window", ps.window);
    psta->callback([&] {
        std::vector<profile::InterestProfile> hist;
        for (const auto& path : ps.history)
            hist.push_back(profile::load_profile(path));
        std::cout << profile::state_name(
                         profile::detect_state(hist, ps.tol, ps.window))
                  << "\n";
    });

    // ---- privatize ----------------------------------------------------
    auto* priv = app.add_subcommand("privatize",
                                    "publishable noisy copy of a profile");
    struct {
        std::string config, profile, out;
        double epsilon = 1.0, zeta_floor = 1e-4;
        std::uint64_t seed = 1;
    } pz;
    priv->add_option("--config", pz.config);
    priv->add_option("--profile", pz.profile)->required();
    priv->add_option("--epsilon", pz.epsilon);
    priv->add_option("--zeta-floor", pz.zeta_floor);
    priv->add_option("--seed", pz.seed);
    priv->add_option("--out", pz.out)->required();
    priv->callback([&] {
        const json cfg = load_config(pz.config);
        cfg_override(priv, "--epsilon", cfg, "epsilon", pz.epsilon);
        cfg_override(priv, "--seed", cfg, "seed", pz.seed);
        const auto p = profile::load_profile(pz.profile);
        Rng rng(substream_seed(pz.seed, "privatize"));
        profile::save_profile(
            dp::privatize_profile(p, pz.epsilon, p.bounds, rng, pz.zeta_floor),
            pz.out);
    });

    // ---- entropy monitor ---------------------------------------------
    auto* ent = app.add_subcommand("entropy", "disclosure monitoring");
    ent->require_subcommand(1);
    auto* mon = ent->add_subcommand("monitor");
    struct {
        std::string profile, out, out_profile;
        double theta_evap = -1, theta_apop = -1, target = -1;
        std::size_t k = 1;
    } em;
    mon->add_option("--profile", em.profile)->required();
    mon->add_option("--theta-evap", em.theta_evap);
    mon->add_option("--theta-apop", em.theta_apop);
    mon->add_option("--target", em.target);
    mon->add_option("-k,--k", em.k, "attributes destroyed by apoptosis");
    mon->add_option("--out", em.out, "monitor csv (default stdout)");
    mon->add_option("--out-profile", em.out_profile,
                    "write the post-action profile here");
    mon->callback([&] {
        auto p = profile::load_profile(em.profile);
        auto dist = entropy::AttributeDistribution::from_profile(p);
        auto state = entropy::privacy_loss(dist, p.slot());
        auto policy = entropy::MonitorPolicy::defaults_for(state.h_max);
        if (em.theta_evap >= 0) policy.theta_evap = em.theta_evap;
        if (em.theta_apop >= 0) policy.theta_apop = em.theta_apop;
        if (em.target >= 0) policy.target = em.target;
        policy.validate(state.h_max);
        const auto action = entropy::decide(state, policy);
        double alpha_or_k = 0;
        if (action == entropy::Action::Evaporate) {
            auto ev = entropy::evaporate(dist, policy.target);
            p = entropy::apply_distribution(p, ev.dist);
            alpha_or_k = ev.alpha;
        } else if (action == entropy::Action::Apoptose) {
            auto apo = entropy::apoptose(p, dist, em.k);
            p = apo.profile;
            alpha_or_k = static_cast<double>(em.k);
        }
        emit(em.out, entropy::monitor_log_header() + "\n" +
                         entropy::monitor_log_row(state, action, alpha_or_k) +
                         "\n");
        if (!em.out_profile.empty()) profile::save_profile(p, em.out_profile);
    });

    // ---- match ---------------------------------------------------------
    auto* mat = app.add_subcommand("match", "rank catalog services");
    struct {
        std::string profile, catalog, corpus, out;
        std::size_t k = 5;
    } mm;
    mat->add_option("--profile", mm.profile)->required();
    mat->add_option("--catalog", mm.catalog)->required();
    mat->add_option("--corpus", mm.corpus)->required();
    mat->add_option("-k,--top-k", mm.k);
    mat->add_option("--out", mm.out, "csv (default stdout)");
    mat->callback([&] {
        const auto p = profile::load_profile(mm.profile);
        const auto catalog = tfidf::load_catalog(mm.catalog);
        const auto corpus = tfidf::load_corpus(mm.corpus);
        const auto picks = tfidf::select_services(p, catalog, mm.k, corpus);
        std::string csv = "rank,catalog_index,service_id\n";
        for (std::size_t r = 0; r < picks.size(); ++r)
            csv += std::to_string(r) + ',' + std::to_string(picks[r]) + ',' +
                   catalog.entries[picks[r]].service_id + '\n';
        emit(mm.out, csv);
    });

    // ---- pir -----------------------------------------------------------
    auto* pir_cmd = app.add_subcommand("pir", "private retrieval");
    pir_cmd->require_subcommand(1);

    auto* serve = pir_cmd->add_subcommand("serve");
    struct {
        std::string db, bind = "127.0.0.1";
        std::uint16_t port = 0;
        double duration = 0;
    } sv;
    serve->add_option("--db", sv.db)->required();
    serve->add_option("--port", sv.port, "0 picks an ephemeral port");
    serve->add_option("--bind", sv.bind);
    serve->add_option("--duration-s", sv.duration, "0 runs until SIGINT");
    serve->callback([&] {
        auto db = std::make_shared<const pir::DatabaseMatrix>(
            pir::load_database(sv.db));
        net::TcpServer server(db, sv.port, sv.bind);
        std::cout << "serving " << db->info.num_records << " records on "
                  << sv.bind << ":" << server.port() << std::endl;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        const auto start = std::chrono::steady_clock::now();
        while (!g_stop.load()) {
            if (sv.duration > 0 &&
                std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                        .count() >= sv.duration)
                break;
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
        server.stop();
    });

    auto* fetch = pir_cmd->add_subcommand("fetch");
    struct {
        std::string config, db, out;
        std::vector<std::string> connect;
        std::vector<std::uint64_t> betas;
        unsigned servers = 3, t = 1, depth = 1;
        std::uint64_t seed = 1;
    } ft;
    fetch->add_option("--config", ft.config);
    fetch->add_option("--connect", ft.connect,
                      "host:port per server; alternative to --db");
    fetch->add_option("--db", ft.db, "database file for in-process servers");
    fetch->add_option("--beta", ft.betas, "record indices")->required();
    fetch->add_option("--servers", ft.servers);
    fetch->add_option("--t", ft.t);
    fetch->add_option("--depth", ft.depth);
    fetch->add_option("--seed", ft.seed);
    fetch->add_option("--out", ft.out, "csv (default stdout)");
    fetch->callback([&] {
        const json cfg = load_config(ft.config);
        cfg_override(fetch, "--servers", cfg, "servers", ft.servers);
        cfg_override(fetch, "--t", cfg, "t", ft.t);
        cfg_override(fetch, "--depth", cfg, "depth", ft.depth);
        cfg_override(fetch, "--seed", cfg, "seed", ft.seed);

        std::vector<std::unique_ptr<net::Endpoint>> owned;
        std::vector<net::Endpoint*> eps;
        if (!ft.connect.empty()) {
            for (std::size_t i = 0; i < ft.connect.size(); ++i) {
                const auto& hp = ft.connect[i];
                auto colon = hp.rfind(':');
                if (colon == std::string::npos)
                    throw std::invalid_argument("--connect needs host:port");
                try {
                    owned.push_back(std::make_unique<net::TcpEndpoint>(
                        static_cast<unsigned>(i), hp.substr(0, colon),
                        static_cast<std::uint16_t>(
                            std::stoul(hp.substr(colon + 1)))));
                } catch (const net::ProtocolError& e) {
                    // a server that cannot be reached can never answer
                    throw net::QuorumUnreachable(e.what());
                }
            }
            ft.servers = static_cast<unsigned>(owned.size());
        } else if (!ft.db.empty()) {
            auto db = std::make_shared<const pir::DatabaseMatrix>(
                pir::load_database(ft.db));
            for (unsigned i = 0; i < ft.servers; ++i)
                owned.push_back(std::make_unique<net::LocalEndpoint>(i, db));
        } else {
            throw std::invalid_argument("pir fetch needs --connect or --db");
        }
        for (auto& ep : owned) eps.push_back(ep.get());

        const auto info = net::fetch_db_info(*eps.front());
        pir::PirParams params;
        params.servers = ft.servers;
        params.privacy = ft.t;
        params.word_bits = info.word_bits;
        params.depth = ft.depth;
        params.validate();
        Rng rng(substream_seed(ft.seed, "query"));
        auto res = net::client_fetch(ft.betas, eps, params, info, {}, rng);

        std::string csv = "beta,bytes,record_hex\n";
        for (std::size_t i = 0; i < ft.betas.size(); ++i) {
            std::string hex;
            for (std::uint8_t b : res.records[i]) {
                char bb[3];
                std::snprintf(bb, sizeof(bb), "%02x", b);
                hex += bb;
            }
            csv += std::to_string(ft.betas[i]) + ',' +
                   std::to_string(res.records[i].size()) + ',' + hex + '\n';
        }
        emit(ft.out, csv);
        std::cerr << "up " << res.up_bytes << " B, down " << res.down_bytes
                  << " B, responses " << res.responses << "\n";
    });

    auto* ben = pir_cmd->add_subcommand("bench");
    struct {
        std::string config, out;
        std::vector<std::uint64_t> db_sizes, record_sizes;
        std::vector<unsigned> servers, ads, depths, word_bits;
        unsigned t = 2, reps = 3;
        std::uint64_t seed = 1;
    } bn;
    ben->add_option("--config", bn.config);
    ben->add_option("--db-size", bn.db_sizes);
    ben->add_option("--record-size", bn.record_sizes);
    ben->add_option("--servers", bn.servers);
    ben->add_option("--ads", bn.ads, "records fetched per query batch");
    ben->add_option("--depth", bn.depths);
    ben->add_option("--word-bits", bn.word_bits);
    ben->add_option("--t", bn.t);
    ben->add_option("--reps", bn.reps);
    ben->add_option("--seed", bn.seed);
    ben->add_option("--out", bn.out, "csv (default stdout)");
    ben->callback([&] {
        const json cfg = load_config(bn.config);
        cfg_override(ben, "--db-size", cfg, "db_size", bn.db_sizes);
        cfg_override(ben, "--record-size", cfg, "record_size", bn.record_sizes);
        cfg_override(ben, "--servers", cfg, "servers", bn.servers);
        cfg_override(ben, "--ads", cfg, "ads", bn.ads);
        cfg_override(ben, "--depth", cfg, "depth", bn.depths);
        cfg_override(ben, "--word-bits", cfg, "word_bits", bn.word_bits);
        cfg_override(ben, "--t", cfg, "t", bn.t);
        cfg_override(ben, "--reps", cfg, "reps", bn.reps);
        cfg_override(ben, "--seed", cfg, "seed", bn.seed);

        bench::SweepConfig sweep;
        if (!bn.db_sizes.empty()) sweep.db_bytes = bn.db_sizes;
        if (!bn.record_sizes.empty()) sweep.record_bytes = bn.record_sizes;
        if (!bn.servers.empty()) sweep.servers = bn.servers;
        if (!bn.ads.empty()) sweep.num_ads = bn.ads;
        sweep.privacy = bn.t;
        sweep.repetitions = bn.reps;
        sweep.seed = bn.seed;
        if (!bn.depths.empty() || !bn.word_bits.empty()) {
            std::vector<unsigned> ds = bn.depths.empty()
                                           ? std::vector<unsigned>{1}
                                           : bn.depths;
            std::vector<unsigned> ws = bn.word_bits.empty()
                                           ? std::vector<unsigned>{10}
                                           : bn.word_bits;
            sweep.schemes.clear();
            for (unsigned d : ds)
                for (unsigned w : ws)
                    sweep.schemes.push_back(
                        {"itpir-d" + std::to_string(d) + "w" +
                             std::to_string(w),
                         d, w});
        }
        const auto rows = bench::run_sweep(sweep, &std::cerr);
        std::ostringstream out;
        bench::write_csv(rows, out);
        emit(bn.out, out.str());
    });

    // ---- classify --------------------------------------------------------
    auto* cls = app.add_subcommand("classify", "label an impression log");
    struct {
        std::string impressions, taxonomy, pre, out, summary;
        std::vector<std::string> profiles;  // id=path
        double zeta_floor = 1e-4;
        std::int64_t overlap = 21600;
        bool full_path = false;
    } cl;
    cls->add_option("--impressions", cl.impressions)->required();
    cls->add_option("--taxonomy", cl.taxonomy)->required();
    cls->add_option("--precategorized", cl.pre);
    cls->add_option("--profile", cl.profiles, "id=profile-file, repeatable")
        ->required();
    cls->add_option("--zeta-floor", cl.zeta_floor);
    cls->add_option("--overlap", cl.overlap);
    cls->add_flag("--full-path", cl.full_path,
                  "match whole paths instead of roots");
    cls->add_option("--out", cl.out, "per-impression csv (default stdout)");
    cls->add_option("--summary", cl.summary, "per-class csv");
    cls->callback([&] {
        const auto impressions = ads::load_impressions(cl.impressions);
        const auto taxonomy = ads::load_taxonomy(cl.taxonomy);
        ads::Precategorized pre;
        if (!cl.pre.empty()) pre = ads::load_precategorized(cl.pre);
        std::map<std::string, std::vector<ads::CategoryNode>> cr;
        for (const auto& entry : cl.profiles) {
            auto eq = entry.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("--profile needs id=path");
            cr[entry.substr(0, eq)] = ads::profile_categories(
                profile::load_profile(entry.substr(eq + 1)), cl.zeta_floor);
        }
        ads::ClassifyOptions opt;
        opt.overlap_s = cl.overlap;
        opt.full_path = cl.full_path;
        const auto result =
            ads::classify(impressions, cr, app_categories(impressions, taxonomy),
                          taxonomy, pre, opt);
        emit(cl.out, ads::classes_csv(impressions, result));
        if (!cl.summary.empty())
            write_file(cl.summary, ads::class_summary_csv(result));
    });

    // ---- report -----------------------------------------------------------
    auto* rep = app.add_subcommand("report", "evaluation tables");
    rep->require_subcommand(1);

    auto* rdp = rep->add_subcommand("dp-effect");
    struct {
        std::string impressions, taxonomy, pre, plain, privatized, out;
        double zeta_floor = 1e-4;
        std::int64_t overlap = 21600;
    } rd;
    rdp->add_option("--impressions", rd.impressions)->required();
    rdp->add_option("--taxonomy", rd.taxonomy)->required();
    rdp->add_option("--precategorized", rd.pre);
    rdp->add_option("--plain", rd.plain)->required();
    rdp->add_option("--private", rd.privatized)->required();
    rdp->add_option("--zeta-floor", rd.zeta_floor);
    rdp->add_option("--overlap", rd.overlap);
    rdp->add_option("--out", rd.out, "csv (default stdout)");
    rdp->callback([&] {
        const auto impressions = ads::load_impressions(rd.impressions);
        const auto taxonomy = ads::load_taxonomy(rd.taxonomy);
        ads::Precategorized pre;
        if (!rd.pre.empty()) pre = ads::load_precategorized(rd.pre);
        ads::ClassifyOptions opt;
        opt.overlap_s = rd.overlap;
        const auto report = ads::dp_effect_report(
            impressions, profile::load_profile(rd.plain),
            profile::load_profile(rd.privatized), taxonomy, pre, opt,
            rd.zeta_floor);
        emit(rd.out, ads::dp_effect_csv(report));
    });

    auto* rtm = rep->add_subcommand("timing");
    struct {
        std::string impressions, out;
        double duration = 0, start = -1;
    } rt;
    rtm->add_option("--impressions", rt.impressions)->required();
    rtm->add_option("--duration", rt.duration, "observation seconds");
    rtm->add_option("--start", rt.start, "default: first arrival");
    rtm->add_option("--out", rt.out, "csv (default stdout)");
    rtm->callback([&] {
        const auto impressions = ads::load_impressions(rt.impressions);
        double start = rt.start;
        if (start < 0)
            start = impressions.empty()
                        ? 0
                        : static_cast<double>(impressions.front().arrival);
        double duration = rt.duration;
        if (duration <= 0 && !impressions.empty())
            duration =
                static_cast<double>(impressions.back().arrival) - start + 1;
        emit(rt.out,
             ads::timing_csv(ads::timing_stats(impressions, duration, start)));
    });

    auto* rfq = rep->add_subcommand("frequency");
    struct {
        std::string impressions, out;
        std::size_t bin_width = 100, bin_max = 3100;
    } rf;
    rfq->add_option("--impressions", rf.impressions)->required();
    rfq->add_option("--bin-width", rf.bin_width);
    rfq->add_option("--bin-max", rf.bin_max);
    rfq->add_option("--out", rf.out, "csv (default stdout)");
    rfq->callback([&] {
        const auto impressions = ads::load_impressions(rf.impressions);
        emit(rf.out, ads::frequency_csv(ads::frequency_report(
                         impressions, rf.bin_width, rf.bin_max)));
    });

    // ---- pipeline -----------------------------------------------------------
    auto* pipe = app.add_subcommand("pipeline", "fixtures through reports");
    struct {
        std::string config, out;
        std::uint64_t seed = 1;
        double epsilon = 1.0;
        std::size_t top_k = 5, ads = 5, slots = 3;
        unsigned servers = 3, t = 1, depth = 1, word_bits = 8;
        std::uint64_t db_size = 16384, record_size = 64;
        std::int64_t overlap = 21600;
    } pl;
    pipe->add_option("--config", pl.config);
    pipe->add_option("--seed", pl.seed);
    pipe->add_option("--epsilon", pl.epsilon);
    pipe->add_option("--top-k", pl.top_k);
    pipe->add_option("--ads", pl.ads);
    pipe->add_option("--evolve-slots", pl.slots);
    pipe->add_option("--servers", pl.servers);
    pipe->add_option("--t", pl.t);
    pipe->add_option("--depth", pl.depth);
    pipe->add_option("--word-bits", pl.word_bits);
    pipe->add_option("--db-size", pl.db_size);
    pipe->add_option("--record-size", pl.record_size);
    pipe->add_option("--overlap", pl.overlap);
    pipe->add_option("--out", pl.out)->required();
    pipe->callback([&] {
        const json cfg = load_config(pl.config);
        cfg_override(pipe, "--seed", cfg, "seed", pl.seed);
        cfg_override(pipe, "--epsilon", cfg, "epsilon", pl.epsilon);
        cfg_override(pipe, "--servers", cfg, "servers", pl.servers);
        cfg_override(pipe, "--t", cfg, "t", pl.t);
        cfg_override(pipe, "--depth", cfg, "depth", pl.depth);
        cfg_override(pipe, "--word-bits", cfg, "word_bits", pl.word_bits);
        cfg_override(pipe, "--db-size", cfg, "db_size", pl.db_size);
        cfg_override(pipe, "--record-size", cfg, "record_size", pl.record_size);
        cfg_override(pipe, "--overlap", cfg, "overlap", pl.overlap);
        if (pl.record_size == 0 || pl.db_size < pl.record_size)
            throw std::invalid_argument("pipeline: db smaller than one record");
        pipeline::PipelineConfig pc;
        pc.seed = pl.seed;
        pc.out_dir = pl.out;
        pc.epsilon = pl.epsilon;
        pc.top_k = pl.top_k;
        pc.servers = pl.servers;
        pc.privacy = pl.t;
        pc.depth = pl.depth;
        pc.evolve_slots = pl.slots;
        pc.fixture.ads_per_class = pl.ads;
        pc.fixture.overlap_s = pl.overlap;
        pc.fixture.db_records = pl.db_size / pl.record_size;
        pc.fixture.record_bytes = pl.record_size;
        pc.fixture.word_bits = pl.word_bits;
        const auto result = pipeline::run_pipeline(pc);
        std::cout << result.stage_log_text();
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const net::QuorumUnreachable& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const net::ProtocolError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
