#include "dring/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <memory>

#include "dring/classifier.hpp"
#include "dring/dp.hpp"
#include "dring/entropy.hpp"
#include "dring/io.hpp"
#include "dring/net.hpp"
#include "dring/rng.hpp"
#include "dring/tfidf.hpp"

namespace dring::pipeline {

namespace {

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(v));
    return buf;
}

struct StageWriter {
    const std::string& out_dir;
    PipelineResult& result;
    double started = now_s();

    void finish(const std::string& name, const std::string& artifact,
                const std::string& file) {
        const double elapsed = now_s() - started;
        result.stages.push_back({name, fnv1a64(artifact), elapsed});
        if (!out_dir.empty() && !file.empty())
            write_file(out_dir + "/" + file, artifact);
        started = now_s();
    }
};

}  // namespace

std::string PipelineResult::stage_log_text() const {
    std::string out;
    for (const auto& s : stages) out += s.name + '\t' + hex16(s.digest) + '\n';
    return out;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    PipelineResult result;
    if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);
    StageWriter stage{cfg.out_dir, result};

    auto fixture_cfg = cfg.fixture;
    fixture_cfg.seed = cfg.seed;
    const auto fx = fixtures::generate_fixtures(fixture_cfg);
    if (!cfg.out_dir.empty())
        fixtures::write_fixtures(fx, cfg.out_dir + "/fixtures");
    stage.finish("fixtures",
                 profile::to_text(fx.profiles[0]) +
                     std::to_string(fx.impressions.size()) + ',' +
                     std::to_string(fx.database.info.num_records),
                 "");

    const auto mapping = fixtures::category_map_for(fx.corpus);
    profile::InterestProfile current = fx.profiles[0];
    std::vector<profile::InterestProfile> history{current};
    stage.finish("establish", profile::to_text(current),
                 "profile_established.txt");

    Rng ev_rng(substream_seed(cfg.seed, "evolve"));
    std::string monitor_csv = entropy::monitor_log_header() + '\n';
    bool reestablished = false;
    for (std::size_t s = 1; s <= cfg.evolve_slots; ++s) {
        profile::ProfileDelta delta;
        delta.slot = current.slot() + 1;
        // deltas accumulate; a category takes part in roughly half the slots
        for (const auto& [cat, w] : current.weights) {
            (void)w;
            if (ev_rng.real01() < 0.5)
                delta.category_changes[cat] = 0.01 + ev_rng.real01() * 0.05;
        }
        current = profile::evolve(current, delta);
        history.push_back(current);

        auto dist = entropy::AttributeDistribution::from_profile(current);
        auto state = entropy::privacy_loss(dist, current.slot());
        auto policy = entropy::MonitorPolicy::defaults_for(state.h_max);
        auto action = entropy::decide(state, policy);
        double alpha_or_k = 0;
        if (action == entropy::Action::Evaporate) {
            auto evap = entropy::evaporate(dist, policy.target);
            current = entropy::apply_distribution(current, evap.dist);
            alpha_or_k = evap.alpha;
        } else if (action == entropy::Action::Apoptose) {
            auto apo = entropy::apoptose(current, dist, 1);
            current = apo.profile;
            alpha_or_k = 1;
            // destroyed attributes invalidate the derivation, so the
            // context is re-evaluated, but at most once per run
            if (apo.reevaluate && !reestablished) {
                profile::ContextProfile rebuilt;
                for (const auto& svc : fx.contexts[0].services) {
                    bool drop = false;
                    for (const auto& gone : apo.removed)
                        if (mapping.resolve(svc) == gone) drop = true;
                    if (!drop) rebuilt.services.push_back(svc);
                }
                const auto ts = current.timestamp;
                current = profile::establish_profile(rebuilt, mapping, {}, ts);
                reestablished = true;
                ++result.apoptosis_reestablishments;
            }
        }
        monitor_csv += entropy::monitor_log_row(state, action, alpha_or_k);
        monitor_csv += '\n';
    }
    result.detected_state = profile::detect_state(history);
    stage.finish("evolve", profile::to_text(current), "profile_evolved.txt");
    stage.finish("monitor", monitor_csv, "monitor.csv");

    // skewed context walks the destructive branch: decide must pick
    // apoptosis and the context is re-established without the dominant
    // category
    {
        auto skew = profile::establish_profile(fx.skewed_context, mapping, {},
                                               cfg.fixture.start_epoch_s);
        auto dist = entropy::AttributeDistribution::from_profile(skew);
        auto state = entropy::privacy_loss(dist, skew.slot());
        auto policy = entropy::MonitorPolicy::defaults_for(state.h_max);
        auto action = entropy::decide(state, policy);
        std::string skew_csv = entropy::monitor_log_header() + '\n';
        if (action == entropy::Action::Apoptose) {
            auto apo = entropy::apoptose(skew, dist, 1);
            profile::ContextProfile rebuilt;
            for (const auto& svc : fx.skewed_context.services) {
                bool drop = false;
                for (const auto& gone : apo.removed)
                    if (mapping.resolve(svc) == gone) drop = true;
                if (!drop) rebuilt.services.push_back(svc);
            }
            skew = profile::establish_profile(rebuilt, mapping, {},
                                              cfg.fixture.start_epoch_s);
            ++result.apoptosis_reestablishments;
            skew_csv += entropy::monitor_log_row(state, action, 1);
            skew_csv += '\n';
        } else {
            skew_csv += entropy::monitor_log_row(state, action, 0);
            skew_csv += '\n';
        }
        skew_csv += profile::to_text(skew);
        stage.finish("monitor_skew", skew_csv, "monitor_skew.csv");
    }

    Rng dp_rng(substream_seed(cfg.seed, "privatize"));
    const auto privatized =
        dp::privatize_profile(current, cfg.epsilon, current.bounds, dp_rng);
    stage.finish("privatize", profile::to_text(privatized),
                 "profile_private.txt");

    // aggregation-side queries over every fixture profile
    {
        Rng agg_rng(substream_seed(cfg.seed, "aggregate"));
        dp::ProfileDatabase pdb;
        for (std::size_t p = 0; p < fx.profiles.size(); ++p) {
            dp::ProfileRow row;
            row.temp_id = dp::make_temp_id(agg_rng);
            row.interests = fx.profiles[p];
            for (const auto& svc : fx.contexts[p].services)
                row.optin_services.insert(svc.id_string());
            pdb.rows.push_back(std::move(row));
        }
        pdb.validate();
        std::vector<std::string> bins;
        for (const auto& [id, doc] : fx.corpus.docs) bins.push_back(id);
        std::string dp_csv;
        dp::StatQuery queries[3];
        queries[0].kind = dp::QueryKind::CountOptIn;
        queries[0].service_id = pdb.rows.front().optin_services.empty()
                                    ? "0.0"
                                    : *pdb.rows.front().optin_services.begin();
        queries[1].kind = dp::QueryKind::CategoryHistogram;
        queries[1].taxonomy = bins;
        queries[2].kind = dp::QueryKind::MostRequestedService;
        queries[2].taxonomy = bins;
        for (const auto& q : queries) {
            const double delta = dp::sensitivity(q);
            auto noisy =
                dp::perturb(dp::evaluate(q, pdb), delta, cfg.epsilon, agg_rng);
            dp_csv += dp::noisy_output_csv(q, delta, noisy) + '\n';
        }
        stage.finish("aggregate", dp_csv, "dp_queries.csv");
    }

    const auto matches =
        tfidf::select_services(current, fx.catalog, cfg.top_k, fx.corpus);
    std::string matches_csv = "rank,catalog_index,service_id\n";
    for (std::size_t r = 0; r < matches.size(); ++r) {
        matches_csv += std::to_string(r) + ',' + std::to_string(matches[r]) +
                       ',' + fx.catalog.entries[matches[r]].service_id + '\n';
    }
    stage.finish("match", matches_csv, "matches.csv");

    {
        auto db = std::make_shared<const pir::DatabaseMatrix>(fx.database);
        pir::PirParams params;
        params.servers = cfg.servers;
        params.privacy = cfg.privacy;
        params.word_bits = db->info.word_bits;
        params.depth = cfg.depth;
        params.validate();

        std::vector<std::unique_ptr<net::LocalEndpoint>> eps;
        std::vector<net::Endpoint*> ep_ptrs;
        for (unsigned i = 0; i < params.servers; ++i) {
            eps.push_back(std::make_unique<net::LocalEndpoint>(i, db));
            ep_ptrs.push_back(eps.back().get());
        }
        std::vector<std::uint64_t> betas;
        for (std::size_t idx : matches)
            betas.push_back(static_cast<std::uint64_t>(idx) %
                            db->info.num_records);
        Rng q_rng(substream_seed(cfg.seed, "query"));
        net::FetchOptions opt;
        opt.sequential = true;
        auto fetched =
            net::client_fetch(betas, ep_ptrs, params, db->info, opt, q_rng);
        result.fetch_up_bytes = fetched.up_bytes;
        result.fetch_down_bytes = fetched.down_bytes;

        result.fetch_verified = true;
        std::string fetch_csv = "beta,ok,record_digest\n";
        for (std::size_t i = 0; i < betas.size(); ++i) {
            const auto want = db->record(betas[i]);
            const bool ok = fetched.records[i] == want;
            result.fetch_verified = result.fetch_verified && ok;
            fetch_csv +=
                std::to_string(betas[i]) + ',' + (ok ? "1" : "0") + ',' +
                hex16(fnv1a64(std::string_view(
                    reinterpret_cast<const char*>(fetched.records[i].data()),
                    fetched.records[i].size()))) +
                '\n';
        }
        stage.finish("fetch", fetch_csv, "fetch_report.csv");
    }

    std::map<std::string, std::vector<ads::CategoryNode>> cr;
    for (std::size_t p = 0; p < fx.profiles.size(); ++p) {
        const auto& prof = (p == 0) ? current : fx.profiles[p];
        cr[fx.profile_ids[p]] = ads::profile_categories(prof);
    }
    std::map<std::string, std::vector<ads::CategoryNode>> cs;
    for (const auto& imp : fx.impressions) {
        if (cs.count(imp.app_category)) continue;
        if (fx.taxonomy.has_root(imp.app_category))
            cs[imp.app_category].push_back(
                ads::CategoryNode{{imp.app_category}});
    }
    const auto classified =
        ads::classify(fx.impressions, cr, cs, fx.taxonomy, fx.precategorized,
                      {.overlap_s = fixture_cfg.overlap_s});
    result.class_counts = classified.counts();
    stage.finish("classify",
                 ads::classes_csv(fx.impressions, classified) +
                     ads::class_summary_csv(classified),
                 "classified.csv");

    {
        const auto effect = ads::dp_effect_report(
            fx.impressions, current, privatized, fx.taxonomy,
            fx.precategorized, {.overlap_s = fixture_cfg.overlap_s});
        const double duration =
            static_cast<double>(fx.impressions.back().arrival -
                                fx.impressions.front().arrival) +
            static_cast<double>(fixture_cfg.step_s);
        const auto timing = ads::timing_stats(
            fx.impressions, duration,
            static_cast<double>(fx.impressions.front().arrival));
        const auto freq = ads::frequency_report(fx.impressions);
        const std::string blob = ads::dp_effect_csv(effect) +
                                 ads::timing_csv(timing) +
                                 ads::frequency_csv(freq);
        if (!cfg.out_dir.empty()) {
            write_file(cfg.out_dir + "/dp_effect.csv",
                       ads::dp_effect_csv(effect));
            write_file(cfg.out_dir + "/timing.csv", ads::timing_csv(timing));
            write_file(cfg.out_dir + "/frequency.csv",
                       ads::frequency_csv(freq));
        }
        stage.finish("reports", blob, "");
    }

    std::string summary;
    summary += "state_detected=" + profile::state_name(result.detected_state) +
               '\n';
    summary += "fetch_verified=" + std::string(result.fetch_verified ? "1"
                                                                     : "0") +
               '\n';
    summary += "fetch_up_bytes=" + std::to_string(result.fetch_up_bytes) +
               '\n';
    summary += "fetch_down_bytes=" + std::to_string(result.fetch_down_bytes) +
               '\n';
    for (std::size_t i = 0; i < 4; ++i) {
        summary += std::string("class_") +
                   ads::ad_class_name(static_cast<ads::AdClass>(i)) + '=' +
                   std::to_string(result.class_counts[i]) + '\n';
    }
    stage.finish("summary", summary, "summary.txt");

    if (!cfg.out_dir.empty()) {
        write_file(cfg.out_dir + "/stage_log.txt", result.stage_log_text());
        std::string timings = "stage,seconds\n";
        for (const auto& s : result.stages) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.6f", s.seconds);
            timings += s.name + ',' + buf + '\n';
        }
        write_file(cfg.out_dir + "/timings.csv", timings);
    }
    return result;
}

}  // namespace dring::pipeline
