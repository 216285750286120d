#include "doctest.h"

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dring/classifier.hpp"
#include "dring/fixtures.hpp"
#include "dring/io.hpp"
#include "dring/pipeline.hpp"
#include "dring/profile.hpp"

using namespace dring;

namespace {

fixtures::FixtureConfig small_fixture() {
    fixtures::FixtureConfig cfg;
    cfg.num_profiles = 2;
    cfg.ads_per_class = 2;
    cfg.impressions_per_ad = 2;
    cfg.db_records = 32;
    cfg.record_bytes = 16;
    return cfg;
}

pipeline::PipelineConfig small_pipeline(std::uint64_t seed) {
    pipeline::PipelineConfig cfg;
    cfg.seed = seed;
    cfg.fixture = small_fixture();
    cfg.top_k = 3;
    return cfg;
}

// byte-compares two directory trees, returning the differing relative paths
std::vector<std::string> diff_trees(const std::filesystem::path& a,
                                    const std::filesystem::path& b) {
    std::set<std::string> rels;
    for (const auto& e : std::filesystem::recursive_directory_iterator(a))
        if (e.is_regular_file())
            rels.insert(std::filesystem::relative(e.path(), a).string());
    for (const auto& e : std::filesystem::recursive_directory_iterator(b))
        if (e.is_regular_file())
            rels.insert(std::filesystem::relative(e.path(), b).string());
    std::vector<std::string> diff;
    for (const auto& r : rels) {
        const auto pa = a / r;
        const auto pb = b / r;
        if (!std::filesystem::exists(pa) || !std::filesystem::exists(pb) ||
            read_file(pa.string()) != read_file(pb.string()))
            diff.push_back(r);
    }
    return diff;
}

}  // namespace

TEST_CASE("fixtures plant known impression counts per class") {
    auto fx = fixtures::generate_fixtures();
    // 3 profiles, 5 ads per class, 4 impressions per ad
    CHECK(fx.planted == std::array<std::size_t, 4>{15, 60, 60, 60});
    CHECK(fx.impressions.size() == 195);
    CHECK(fx.profiles.size() == 3);
    CHECK(fx.profile_ids ==
          std::vector<std::string>{"p0", "p1", "p2"});
    CHECK(fx.taxonomy.nodes.size() == 27);  // nine roots, two children each
    CHECK(fx.corpus.size() == 9);
    CHECK(fx.catalog.entries.size() == 18);
    CHECK(fx.skewed_context.services.size() == 20);
    CHECK(fx.database.info.num_records == 256);
    CHECK(fx.database.info.record_size == 64);

    // arrivals march forward one step at a time across the whole log
    for (std::size_t i = 1; i < fx.impressions.size(); ++i)
        CHECK(fx.impressions[i].arrival ==
              fx.impressions[i - 1].arrival + 300);

    // each context establishes the 1/2, 1/3, 1/6 weight split
    for (const auto& p : fx.profiles) {
        REQUIRE(p.weights.size() == 3);
        std::vector<double> w;
        for (const auto& [k, v] : p.weights) w.push_back(v);
        std::sort(w.begin(), w.end());
        CHECK(w[0] == doctest::Approx(1.0 / 6.0));
        CHECK(w[1] == doctest::Approx(1.0 / 3.0));
        CHECK(w[2] == doctest::Approx(0.5));
    }
}

TEST_CASE("fixture generation is a pure function of its config") {
    auto a = fixtures::generate_fixtures(small_fixture());
    auto b = fixtures::generate_fixtures(small_fixture());
    auto cfg_c = small_fixture();
    cfg_c.seed = 2;
    auto c = fixtures::generate_fixtures(cfg_c);

    REQUIRE(a.impressions.size() == b.impressions.size());
    for (std::size_t i = 0; i < a.impressions.size(); ++i) {
        CHECK(a.impressions[i].ad_url == b.impressions[i].ad_url);
        CHECK(a.impressions[i].arrival == b.impressions[i].arrival);
        CHECK(a.impressions[i].profile == b.impressions[i].profile);
    }
    CHECK(a.precategorized == b.precategorized);
    CHECK(a.database.rows == b.database.rows);
    CHECK(profile::to_text(a.profiles[0]) == profile::to_text(b.profiles[0]));

    // a different seed reshuffles the log and regenerates the gibberish urls
    bool any_difference = c.precategorized != a.precategorized;
    for (std::size_t i = 0; !any_difference && i < a.impressions.size(); ++i)
        any_difference = a.impressions[i].ad_url != c.impressions[i].ad_url;
    CHECK(any_difference);
    CHECK(c.database.rows != a.database.rows);
}

TEST_CASE("fixture configs reject degenerate shapes") {
    auto cfg = small_fixture();
    cfg.num_profiles = 1;
    CHECK_THROWS_AS(fixtures::generate_fixtures(cfg), std::invalid_argument);
    cfg = small_fixture();
    cfg.ads_per_class = 0;
    CHECK_THROWS_AS(fixtures::generate_fixtures(cfg), std::invalid_argument);
    cfg = small_fixture();
    cfg.impressions_per_ad = 0;
    CHECK_THROWS_AS(fixtures::generate_fixtures(cfg), std::invalid_argument);
    cfg = small_fixture();
    cfg.step_s = cfg.overlap_s + 1;  // profiles can no longer share a window
    CHECK_THROWS_AS(fixtures::generate_fixtures(cfg), std::invalid_argument);
}

TEST_CASE("classifying the fixture log recovers the planted counts") {
    auto fx = fixtures::generate_fixtures(small_fixture());

    std::map<std::string, std::vector<ads::CategoryNode>> cr;
    for (std::size_t p = 0; p < fx.profiles.size(); ++p)
        cr[fx.profile_ids[p]] = ads::profile_categories(fx.profiles[p]);
    std::map<std::string, std::vector<ads::CategoryNode>> cs;
    for (const auto& imp : fx.impressions)
        if (!cs.count(imp.app_category) &&
            fx.taxonomy.has_root(imp.app_category))
            cs[imp.app_category].push_back(
                ads::CategoryNode{{imp.app_category}});

    auto res = ads::classify(fx.impressions, cr, cs, fx.taxonomy,
                             fx.precategorized,
                             {.overlap_s = small_fixture().overlap_s});
    CHECK(res.counts() == fx.planted);
}

TEST_CASE("the pipeline runs every stage and verifies its fetches") {
    auto res = pipeline::run_pipeline(small_pipeline(7));

    std::vector<std::string> names;
    for (const auto& s : res.stages) names.push_back(s.name);
    CHECK(names == std::vector<std::string>{
                       "fixtures", "establish", "evolve", "monitor",
                       "monitor_skew", "privatize", "aggregate", "match",
                       "fetch", "classify", "reports", "summary"});

    CHECK(res.fetch_verified);
    CHECK(res.fetch_up_bytes > 0);
    CHECK(res.fetch_down_bytes > 0);
    CHECK(res.detected_state == profile::State::Evolution);
    // only the skewed context walks the destructive branch
    CHECK(res.apoptosis_reestablishments == 1);

    auto fx = fixtures::generate_fixtures([] {
        auto c = small_fixture();
        c.seed = 7;
        return c;
    }());
    CHECK(res.class_counts == fx.planted);

    const auto log = res.stage_log_text();
    std::size_t lines = 0;
    for (char c : log)
        if (c == '\n') ++lines;
    CHECK(lines == res.stages.size());
    CHECK(log.find("fetch\t") != std::string::npos);
}

TEST_CASE("pipeline digests replay with the seed and move with it") {
    auto a = pipeline::run_pipeline(small_pipeline(11));
    auto b = pipeline::run_pipeline(small_pipeline(11));
    auto c = pipeline::run_pipeline(small_pipeline(12));
    CHECK(a.stage_log_text() == b.stage_log_text());
    CHECK(a.stage_log_text() != c.stage_log_text());
}

TEST_CASE("two runs into directories differ only in wall-clock timings") {
    const auto base = std::filesystem::temp_directory_path();
    const auto dir_a = base / "dring_pipe_a";
    const auto dir_b = base / "dring_pipe_b";
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);

    auto cfg = small_pipeline(21);
    cfg.out_dir = dir_a.string();
    auto res_a = pipeline::run_pipeline(cfg);
    cfg.out_dir = dir_b.string();
    pipeline::run_pipeline(cfg);

    auto diff = diff_trees(dir_a, dir_b);
    CHECK(diff == std::vector<std::string>{"timings.csv"});

    // the on-disk stage log is the in-memory one
    CHECK(read_file((dir_a / "stage_log.txt").string()) ==
          res_a.stage_log_text());

    for (const char* f :
         {"fixtures/taxonomy.txt", "fixtures/impressions.csv",
          "fixtures/db.bin", "fixtures/planted_counts.csv",
          "profile_established.txt", "profile_evolved.txt", "monitor.csv",
          "monitor_skew.csv", "profile_private.txt", "dp_queries.csv",
          "matches.csv", "fetch_report.csv", "classified.csv",
          "dp_effect.csv", "timing.csv", "frequency.csv", "summary.txt",
          "timings.csv"})
        CHECK(std::filesystem::exists(dir_a / f));

    const auto summary = read_file((dir_a / "summary.txt").string());
    CHECK(summary.find("state_detected=Evolution") != std::string::npos);
    CHECK(summary.find("fetch_verified=1") != std::string::npos);

    const auto monitor = read_file((dir_a / "monitor.csv").string());
    CHECK(monitor.rfind("slot,h,h_max,loss,action,alpha_or_k\n", 0) == 0);
    // the healthy profile never trips the monitor
    CHECK(monitor.find("evaporate") == std::string::npos);
    CHECK(monitor.find("apoptose") == std::string::npos);
    // the skewed one must
    const auto skew = read_file((dir_a / "monitor_skew.csv").string());
    CHECK(skew.find("apoptose") != std::string::npos);

    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
}

TEST_CASE("the privatized profile keeps the evolved support") {
    const auto base = std::filesystem::temp_directory_path();
    const auto dir = base / "dring_pipe_priv";
    std::filesystem::remove_all(dir);
    auto cfg = small_pipeline(33);
    cfg.out_dir = dir.string();
    pipeline::run_pipeline(cfg);

    auto evolved = profile::load_profile((dir / "profile_evolved.txt").string());
    auto privatized =
        profile::load_profile((dir / "profile_private.txt").string());
    REQUIRE(evolved.weights.size() == privatized.weights.size());
    for (const auto& [k, v] : evolved.weights) {
        REQUIRE(privatized.weights.count(k) == 1);
        CHECK(privatized.weights.at(k) > 0.0);
        CHECK(privatized.weights.at(k) <= evolved.bounds.zeta_max);
    }
    std::filesystem::remove_all(dir);
}
