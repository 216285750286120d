#include "doctest.h"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dring/classifier.hpp"
#include "dring/io.hpp"
#include "dring/profile.hpp"

using namespace dring;
using namespace dring::ads;

namespace {

AdImpression imp(std::string exp, std::string prof, std::string app,
                 std::int64_t t, std::string net, std::string url) {
    AdImpression i;
    i.experiment_id = std::move(exp);
    i.profile = std::move(prof);
    i.app_category = std::move(app);
    i.arrival = t;
    i.network = std::move(net);
    i.ad_url = std::move(url);
    return i;
}

Taxonomy small_taxonomy() {
    Taxonomy t;
    for (const char* p :
         {"news", "news/politics", "travel", "travel/flights", "games"})
        t.nodes.push_back(parse_node(p));
    return t;
}

}  // namespace

TEST_CASE("slash paths parse into segments and print back") {
    auto n = parse_node("news/politics/local");
    CHECK(n.path == std::vector<std::string>{"news", "politics", "local"});
    CHECK(n.root() == "news");
    CHECK(n.full() == "news/politics/local");
    CHECK(parse_node("solo").path == std::vector<std::string>{"solo"});
    CHECK(parse_node("a//b").path == std::vector<std::string>{"a", "b"});
    CHECK_THROWS_AS(parse_node(""), ClassifierError);
    CHECK_THROWS_AS(parse_node("/"), ClassifierError);
}

TEST_CASE("taxonomies expose roots and tokenized node documents") {
    auto t = small_taxonomy();
    CHECK(t.has_root("news"));
    CHECK(t.has_root("games"));
    CHECK(!t.has_root("politics"));  // inner segment, not a root
    auto docs = t.token_docs();
    CHECK(docs.size() == 5);
    CHECK(docs.docs.at("news/politics") ==
          std::vector<std::string>{"news", "politics"});
    CHECK(docs.docs.at("travel/flights") ==
          std::vector<std::string>{"travel", "flights"});
}

TEST_CASE("taxonomy files skip comments and round-trip") {
    const auto path =
        (std::filesystem::temp_directory_path() / "dring_tax_test.txt")
            .string();
    write_file(path, "# interest tree\n\nnews\nnews/politics\n");
    auto t = load_taxonomy(path);
    REQUIRE(t.nodes.size() == 2);
    CHECK(t.nodes[1].full() == "news/politics");
    save_taxonomy(t, path);
    CHECK(read_file(path) == "news\nnews/politics\n");
    write_file(path, "# nothing but comments\n");
    CHECK_THROWS_AS(load_taxonomy(path), IoError);
    std::filesystem::remove(path);
}

TEST_CASE("impression logs round-trip and enforce per-experiment order") {
    const auto path =
        (std::filesystem::temp_directory_path() / "dring_imp_test.csv")
            .string();
    std::vector<AdImpression> rows = {
        imp("e1", "p0", "news", 100, "wifi", "https://a.example/x"),
        imp("e2", "p1", "games", 50, "cell", "https://b.example/y"),
        imp("e1", "p1", "news", 100, "wifi", "https://a.example/x"),
        imp("e1", "p0", "news", 170, "cell", "https://c.example/z"),
    };
    save_impressions(rows, path);
    auto back = load_impressions(path);
    REQUIRE(back.size() == rows.size());
    save_impressions(back, path + ".2");
    CHECK(read_file(path) == read_file(path + ".2"));
    CHECK(back[1].arrival == 50);
    CHECK(back[3].network == "cell");

    write_file(path, "wrong,header\n");
    CHECK_THROWS_AS(load_impressions(path), IoError);
    write_file(path,
               "experiment_id,profile,app_category,arrival_epoch_s,network,"
               "ad_url\ne1,p0,news,100,wifi,u\ne1,p0,news,99,wifi,u\n");
    CHECK_THROWS_AS(load_impressions(path), IoError);
    write_file(path,
               "experiment_id,profile,app_category,arrival_epoch_s,network,"
               "ad_url\ne1,p0,news\n");
    CHECK_THROWS_AS(load_impressions(path), IoError);
    std::filesystem::remove(path);
    std::filesystem::remove(path + ".2");
}

TEST_CASE("precategorized tables round-trip") {
    const auto path =
        (std::filesystem::temp_directory_path() / "dring_pre_test.tsv")
            .string();
    Precategorized pre;
    pre["https://a.example/x"] = parse_node("news/politics");
    pre["https://b.example/y"] = parse_node("travel");
    save_precategorized(pre, path);
    auto back = load_precategorized(path);
    CHECK(back == pre);
    write_file(path, "no tab separator here\n");
    CHECK_THROWS_AS(load_precategorized(path), IoError);
    std::filesystem::remove(path);
}

TEST_CASE("urls map by table first, then token similarity") {
    auto t = small_taxonomy();
    auto docs = t.token_docs();
    Precategorized pre;
    pre["https://x.example/q"] = parse_node("games");

    CHECK(map_url("https://x.example/q", t, pre, docs) == parse_node("games"));
    // both tokens hit one node, which beats the root-only match
    CHECK(map_url("https://site.example/politics/news-piece", t, pre, docs) ==
          parse_node("news/politics"));
    CHECK(map_url("cheap travel flights here", t, pre, docs) ==
          parse_node("travel/flights"));
    CHECK_THROWS_AS(map_url("xp://zq0a1b.adhost/zq9f8e", t, pre, docs),
                    Unmappable);
    CHECK_THROWS_AS(map_url("u", Taxonomy{}, pre, docs), ClassifierError);
}

TEST_CASE("the four filters fire in their documented order") {
    auto taxonomy = small_taxonomy();
    Precategorized pre;
    pre["https://t.example/item"] = parse_node("news/politics");
    pre["https://c.example/deal"] = parse_node("travel/flights");
    pre["https://rt.example/mix"] = parse_node("news");
    pre["https://tc.example/trip"] = parse_node("travel/flights");

    std::map<std::string, std::vector<CategoryNode>> cr;
    cr["p0"] = {parse_node("news")};
    cr["p1"] = {parse_node("games")};
    cr["pt"] = {parse_node("travel")};
    std::map<std::string, std::vector<CategoryNode>> cs;
    cs["travel_app"] = {parse_node("travel")};

    ClassifyOptions opt;
    opt.overlap_s = 100;

    std::vector<AdImpression> log = {
        // seen by every profile within one window: random
        imp("e1", "p0", "other", 0, "wifi", "https://r.example/zq"),
        imp("e1", "p1", "other", 50, "cell", "https://r.example/zq"),
        imp("e1", "pt", "other", 80, "cell", "https://r.example/zq"),
        // interest match for p0 only
        imp("e1", "p0", "other", 200, "wifi", "https://t.example/item"),
        imp("e1", "p1", "other", 300, "wifi", "https://t.example/item"),
        // app match for p1
        imp("e1", "p1", "travel_app", 400, "cell", "https://c.example/deal"),
        // maps nowhere
        imp("e1", "p0", "other", 500, "wifi", "xp://zqab.adhost/zqcd"),
        // random wins over targeted even though p0's interests match
        imp("e1", "p0", "other", 600, "wifi", "https://rt.example/mix"),
        imp("e1", "p1", "other", 610, "wifi", "https://rt.example/mix"),
        imp("e1", "pt", "other", 620, "wifi", "https://rt.example/mix"),
        // targeted wins over contextual when both apply
        imp("e1", "pt", "travel_app", 700, "cell", "https://tc.example/trip"),
    };

    auto res = classify(log, cr, cs, taxonomy, pre, opt);
    const std::vector<AdClass> want = {
        AdClass::Random,   AdClass::Random,     AdClass::Random,
        AdClass::Targeted, AdClass::Generic,    AdClass::Contextual,
        AdClass::Generic,  AdClass::Random,     AdClass::Random,
        AdClass::Random,   AdClass::Targeted,
    };
    CHECK(res.classes == want);
    CHECK(res.counts() == std::array<std::size_t, 4>{6, 2, 1, 2});
    CHECK(res.url_nodes.count("https://t.example/item") == 1);
    CHECK(res.url_nodes.count("xp://zqab.adhost/zqcd") == 0);

    CHECK_THROWS_AS(
        classify({}, cr, cs, taxonomy, pre, opt), EmptyInput);
}

TEST_CASE("the random filter needs every profile inside one window") {
    auto taxonomy = small_taxonomy();
    Precategorized pre;
    std::map<std::string, std::vector<CategoryNode>> none;
    ClassifyOptions opt;
    opt.overlap_s = 100;

    // exactly the window length apart still counts
    std::vector<AdImpression> log = {
        imp("e1", "p0", "a", 0, "wifi", "zq://one"),
        imp("e1", "p1", "a", 100, "wifi", "zq://one"),
        imp("e1", "p0", "a", 200, "wifi", "zq://two"),
        imp("e1", "p1", "a", 301, "wifi", "zq://two"),  // one second late
    };
    auto res = classify(log, none, none, taxonomy, pre, opt);
    CHECK(res.classes[0] == AdClass::Random);
    CHECK(res.classes[1] == AdClass::Random);
    CHECK(res.classes[2] == AdClass::Generic);
    CHECK(res.classes[3] == AdClass::Generic);

    // a url one profile never saw cannot be random
    std::vector<AdImpression> partial = {
        imp("e1", "p0", "a", 0, "wifi", "zq://three"),
        imp("e1", "p1", "a", 10, "wifi", "zq://three"),
        imp("e1", "p2", "a", 20, "wifi", "zq://other"),
    };
    auto res2 = classify(partial, none, none, taxonomy, pre, opt);
    CHECK(res2.classes[0] == AdClass::Generic);
    CHECK(res2.classes[1] == AdClass::Generic);

    // a single-profile log has no notion of broadcast at all
    std::vector<AdImpression> solo = {
        imp("e1", "p0", "a", 0, "wifi", "zq://four"),
        imp("e1", "p0", "a", 10, "wifi", "zq://four"),
    };
    auto res3 = classify(solo, none, none, taxonomy, pre, opt);
    CHECK(res3.classes[0] == AdClass::Generic);

    // the window slides: profiles clustered late still qualify
    std::vector<AdImpression> late = {
        imp("e1", "p0", "a", 0, "wifi", "zq://five"),
        imp("e1", "p1", "a", 500, "wifi", "zq://five"),
        imp("e1", "p0", "a", 520, "wifi", "zq://five"),
    };
    auto res4 = classify(late, none, none, taxonomy, pre, opt);
    CHECK(res4.classes[0] == AdClass::Random);
}

TEST_CASE("full-path matching is stricter than root matching") {
    auto taxonomy = small_taxonomy();
    Precategorized pre;
    pre["u1"] = parse_node("news/politics");
    std::map<std::string, std::vector<CategoryNode>> cr;
    cr["p0"] = {parse_node("news")};
    std::map<std::string, std::vector<CategoryNode>> cs;
    std::vector<AdImpression> log = {imp("e1", "p0", "a", 0, "wifi", "u1")};

    ClassifyOptions roots;
    CHECK(classify(log, cr, cs, taxonomy, pre, roots).classes[0] ==
          AdClass::Targeted);

    ClassifyOptions exact;
    exact.full_path = true;
    CHECK(classify(log, cr, cs, taxonomy, pre, exact).classes[0] ==
          AdClass::Generic);

    cr["p0"] = {parse_node("news/politics")};
    CHECK(classify(log, cr, cs, taxonomy, pre, exact).classes[0] ==
          AdClass::Targeted);
}

TEST_CASE("profile categories keep only weights above the floor") {
    profile::InterestProfile p;
    p.weights = {{"news", 0.5},
                 {"travel", 0.2},
                 {"faint", 1e-4},   // exactly the floor: excluded
                 {"ghost", 5e-5}};
    auto cats = profile_categories(p);
    REQUIRE(cats.size() == 2);
    CHECK(cats[0] == parse_node("news"));
    CHECK(cats[1] == parse_node("travel"));
    auto strict = profile_categories(p, 0.3);
    REQUIRE(strict.size() == 1);
    CHECK(strict[0] == parse_node("news"));
}

TEST_CASE("timing stats split the experiment into idle and display time") {
    std::vector<AdImpression> log = {
        imp("e1", "p0", "a", 10, "wifi", "u1"),
        imp("e1", "p0", "a", 20, "wifi", "u2"),
        imp("e1", "p0", "a", 50, "cell", "u3"),
    };
    auto s = timing_stats(log, 100.0, 0.0);
    CHECK(s.idle_s == doctest::Approx(10.0));
    REQUIRE(s.impression_s.size() == 3);
    CHECK(s.impression_s[0] == doctest::Approx(10.0));
    CHECK(s.impression_s[1] == doctest::Approx(30.0));
    CHECK(s.impression_s[2] == doctest::Approx(50.0));  // runs to the end
    CHECK(s.airtime_s.at("wifi") == doctest::Approx(40.0));
    CHECK(s.airtime_s.at("cell") == doctest::Approx(50.0));
    REQUIRE(s.bursts.size() == 2);
    CHECK(s.bursts[0].network == "wifi");
    CHECK(s.bursts[0].span_s == doctest::Approx(10.0));
    CHECK(s.bursts[1].network == "cell");
    CHECK(s.bursts[1].span_s == doctest::Approx(0.0));

    // conservation: idle plus display time covers the whole experiment
    double total = s.idle_s;
    for (double d : s.impression_s) total += d;
    CHECK(total == doctest::Approx(100.0));

    auto empty = timing_stats({}, 42.0);
    CHECK(empty.idle_s == doctest::Approx(42.0));
    CHECK(empty.impression_s.empty());

    std::vector<AdImpression> unsorted = {
        imp("e1", "p0", "a", 50, "wifi", "u1"),
        imp("e1", "p0", "a", 10, "wifi", "u2"),
    };
    CHECK_THROWS_AS(timing_stats(unsorted, 100.0), std::invalid_argument);
}

TEST_CASE("frequency reports bin urls by how often they were served") {
    std::vector<AdImpression> log;
    auto add = [&](const std::string& url, int times) {
        for (int i = 0; i < times; ++i)
            log.push_back(imp("e1", "p0", "a", i, "wifi", url));
    };
    add("a", 1);
    add("b", 1);
    add("c", 3);
    add("d", 250);
    add("e", 999);  // beyond the last bin edge: clamps into the last bin

    auto rep = frequency_report(log, 100, 300);
    CHECK(rep.counts.at("a") == 1);
    CHECK(rep.counts.at("d") == 250);
    REQUIRE(rep.bins.size() == 3);
    CHECK(rep.bins[0] == 3);  // counts 1, 1, 3
    CHECK(rep.bins[1] == 0);
    CHECK(rep.bins[2] == 2);  // 250 plus the clamped 999

    REQUIRE(rep.cdf.size() == 4);
    CHECK(rep.cdf[0] == std::pair<std::size_t, double>{1, 0.4});
    CHECK(rep.cdf[1].first == 3);
    CHECK(rep.cdf[1].second == doctest::Approx(0.6));
    CHECK(rep.cdf[3].first == 999);
    CHECK(rep.cdf[3].second == doctest::Approx(1.0));

    CHECK_THROWS_AS(frequency_report(log, 0, 300), std::invalid_argument);
    CHECK_THROWS_AS(frequency_report(log, 100, 50), std::invalid_argument);
}

TEST_CASE("the dp effect report contrasts plain and privatized interests") {
    auto taxonomy = small_taxonomy();
    Precategorized pre;
    pre["u_news"] = parse_node("news");
    std::vector<AdImpression> log = {
        imp("e1", "p0", "plain_app", 0, "wifi", "u_news"),
        imp("e1", "p0", "plain_app", 10, "wifi", "u_news"),
    };

    profile::InterestProfile plain;
    plain.weights = {{"news", 0.5}};
    profile::InterestProfile shifted;
    shifted.weights = {{"travel", 0.5}};

    auto rep = dp_effect_report(log, plain, shifted, taxonomy, pre);
    CHECK(rep.before_counts ==
          std::array<std::size_t, 4>{0, 2, 0, 0});  // targeted
    CHECK(rep.after_counts ==
          std::array<std::size_t, 4>{0, 0, 0, 2});  // falls to generic
    CHECK(rep.before_pct[1] == doctest::Approx(100.0));
    CHECK(rep.diff_pct[1] == doctest::Approx(-100.0));
    CHECK(rep.diff_pct[3] == doctest::Approx(100.0));

    auto same = dp_effect_report(log, plain, plain, taxonomy, pre);
    for (double d : same.diff_pct) CHECK(d == doctest::Approx(0.0));
}

TEST_CASE("report serializers emit fixed csv layouts") {
    ClassifiedAds res;
    res.classes = {AdClass::Random, AdClass::Targeted, AdClass::Generic,
                   AdClass::Generic};
    CHECK(class_summary_csv(res) ==
          "class,count,percent\n"
          "random,1,25.000000\n"
          "targeted,1,25.000000\n"
          "contextual,0,0.000000\n"
          "generic,2,50.000000\n");

    std::vector<AdImpression> log = {
        imp("e1", "p0", "news", 5, "wifi", "u1"),
        imp("e1", "p0", "news", 6, "wifi", "u2"),
    };
    ClassifiedAds two;
    two.classes = {AdClass::Targeted, AdClass::Generic};
    two.url_nodes["u1"] = parse_node("news/politics");
    CHECK(classes_csv(log, two) ==
          "experiment_id,profile,app_category,arrival_epoch_s,network,ad_url,"
          "class,node\n"
          "e1,p0,news,5,wifi,u1,targeted,news/politics\n"
          "e1,p0,news,6,wifi,u2,generic,\n");

    auto stats = timing_stats(log, 10.0, 0.0);
    CHECK(timing_csv(stats) ==
          "metric,key,value\n"
          "idle_s,,5.000000\n"
          "impression_s,0,1.000000\n"
          "impression_s,1,4.000000\n"
          "burst_s,wifi,1.000000\n"
          "airtime_s,wifi,5.000000\n");

    auto freq = frequency_report(log, 100, 200);
    CHECK(frequency_csv(freq) ==
          "bin_lo,bin_hi,unique_ads\n"
          "1,100,2\n"
          "101,200,0\n");

    DpEffectReport drep;
    drep.before_pct = {25.0, 25.0, 0.0, 50.0};
    drep.after_pct = {25.0, 0.0, 0.0, 75.0};
    drep.diff_pct = {0.0, -25.0, 0.0, 25.0};
    CHECK(dp_effect_csv(drep) ==
          "class,before_pct,after_pct,diff_pct\n"
          "random,25.000000,25.000000,0.000000\n"
          "targeted,25.000000,0.000000,-25.000000\n"
          "contextual,0.000000,0.000000,0.000000\n"
          "generic,50.000000,75.000000,25.000000\n");
}
