#include "dring/fixtures.hpp"

#include <filesystem>
#include <stdexcept>

#include "dring/io.hpp"
#include "dring/rng.hpp"

namespace dring::fixtures {

namespace {

struct CategorySeed {
    const char* root;
    const char* sub1;
    const char* sub2;
    const char* extra1;
    const char* extra2;
};

// fixed vocabulary; every root word stays outside hex so generated
// gibberish urls can never collide with it
constexpr CategorySeed kCategories[] = {
    {"business", "software", "careers", "office", "work"},
    {"communication", "chat", "email", "messenger", "calls"},
    {"education", "courses", "languages", "school", "tutoring"},
    {"entertainment", "games", "movies", "music", "streaming"},
    {"finance", "banking", "invest", "credit", "budget"},
    {"health", "fitness", "medical", "wellness", "clinic"},
    {"lifestyle", "fashion", "food", "recipes", "style"},
    {"news", "world", "local", "politics", "daily"},
    {"travel", "flights", "hotels", "trips", "booking"},
};
constexpr std::size_t kNumCategories =
    sizeof(kCategories) / sizeof(kCategories[0]);

std::string hex_token(Rng& rng) {
    static const char digits[] = "0123456789abcdef";
    std::string out = "zq";
    for (int i = 0; i < 6; ++i) out += digits[rng.below(16)];
    return out;
}

}  // namespace

profile::CategoryMap category_map_for(const tfidf::InterestCorpus& corpus) {
    profile::CategoryMap map;
    for (const auto& [id, doc] : corpus.docs) map.table[id] = id;
    map.fallback = &corpus;
    return map;
}

FixtureSet generate_fixtures(const FixtureConfig& cfg) {
    if (cfg.num_profiles < 2)
        throw std::invalid_argument(
            "generate_fixtures: need at least two profiles");
    if (cfg.ads_per_class == 0 || cfg.impressions_per_ad == 0)
        throw std::invalid_argument("generate_fixtures: empty plant");
    if (static_cast<std::int64_t>(cfg.num_profiles - 1) * cfg.step_s >
        cfg.overlap_s)
        throw std::invalid_argument(
            "generate_fixtures: step too coarse for the overlap window");

    FixtureSet fx;
    Rng rng(cfg.seed);

    for (const auto& c : kCategories) {
        fx.taxonomy.nodes.push_back(ads::CategoryNode{{c.root}});
        fx.taxonomy.nodes.push_back(ads::CategoryNode{{c.root, c.sub1}});
        fx.taxonomy.nodes.push_back(ads::CategoryNode{{c.root, c.sub2}});
        fx.corpus.docs[c.root] = {c.root, c.sub1, c.sub2, c.extra1, c.extra2};
        fx.catalog.entries.push_back(
            {std::string("svc-") + c.root + "-a", {c.root, c.sub1, c.extra1}});
        fx.catalog.entries.push_back(
            {std::string("svc-") + c.root + "-b", {c.root, c.sub2, c.extra2}});
    }

    const auto map = category_map_for(fx.corpus);
    const auto cat_of = [](std::size_t idx) {
        return kCategories[idx % kNumCategories];
    };

    for (std::size_t p = 0; p < cfg.num_profiles; ++p) {
        profile::ContextProfile ctx;
        // three categories per profile with 3/2/1 service counts, so the
        // established weights are 1/2, 1/3, 1/6
        for (std::size_t j = 0; j < 3; ++j) {
            const auto& c = cat_of(3 * p + j);
            const std::size_t count = 3 - j;
            for (std::size_t s = 0; s < count; ++s) {
                profile::Service svc;
                svc.id = {static_cast<std::uint32_t>((3 * p + j) %
                                                     kNumCategories),
                          static_cast<std::uint32_t>(p * 16 + j * 4 + s)};
                svc.category = c.root;
                svc.keywords = {c.root, c.sub1};
                ctx.services.push_back(std::move(svc));
            }
        }
        fx.contexts.push_back(ctx);
        fx.profiles.push_back(profile::establish_profile(
            ctx, map, {}, cfg.start_epoch_s));
        fx.profile_ids.push_back("p" + std::to_string(p));
    }

    // one category dominates, pushing the entropy monitor into apoptosis
    for (std::size_t s = 0; s < 19; ++s) {
        profile::Service svc;
        svc.id = {0, static_cast<std::uint32_t>(200 + s)};
        svc.category = kCategories[0].root;
        svc.keywords = {kCategories[0].root};
        fx.skewed_context.services.push_back(std::move(svc));
    }
    {
        profile::Service svc;
        svc.id = {1, 240};
        svc.category = kCategories[1].root;
        svc.keywords = {kCategories[1].root};
        fx.skewed_context.services.push_back(std::move(svc));
    }

    // impression plant: blocks of events per url, shuffled at block level
    // so one url's arrivals stay inside a single window
    struct Block {
        std::vector<ads::AdImpression> events;
    };
    std::vector<Block> blocks;

    for (std::size_t a = 0; a < cfg.ads_per_class; ++a) {
        const std::string url =
            "https://promo.example/r" + std::to_string(a) + "/offer";
        fx.precategorized[url] =
            ads::CategoryNode{{cat_of(3).root, cat_of(3).sub1}};
        Block b;
        for (std::size_t p = 0; p < cfg.num_profiles; ++p) {
            ads::AdImpression imp;
            imp.experiment_id = "exp1";
            imp.profile = fx.profile_ids[p];
            imp.app_category = "launcher";
            imp.ad_url = url;
            b.events.push_back(std::move(imp));
        }
        blocks.push_back(std::move(b));
        fx.planted[0] += cfg.num_profiles;
    }

    for (std::size_t p = 0; p < cfg.num_profiles; ++p) {
        const auto& own = cat_of(3 * p);
        const auto& other = cat_of(3 * (p + 1));
        for (std::size_t a = 0; a < cfg.ads_per_class; ++a) {
            const std::string tag =
                std::to_string(p) + "x" + std::to_string(a);
            const std::string t_url = "https://ads.example/t" + tag + "/item";
            const std::string c_url = "https://ads.example/c" + tag + "/item";
            const std::string g_url =
                "xp://" + hex_token(rng) + ".adhost/" + hex_token(rng);
            fx.precategorized[t_url] =
                ads::CategoryNode{{own.root, own.sub1}};
            fx.precategorized[c_url] =
                ads::CategoryNode{{other.root, other.sub1}};
            const struct {
                const std::string* url;
                std::string app;
                std::size_t klass;
            } plants[] = {
                {&t_url, "launcher", 1},
                {&c_url, other.root, 2},
                {&g_url, "launcher", 3},
            };
            for (const auto& plant : plants) {
                Block b;
                for (std::size_t k = 0; k < cfg.impressions_per_ad; ++k) {
                    ads::AdImpression imp;
                    imp.experiment_id = "exp1";
                    imp.profile = fx.profile_ids[p];
                    imp.app_category = plant.app;
                    imp.ad_url = *plant.url;
                    b.events.push_back(std::move(imp));
                }
                blocks.push_back(std::move(b));
                fx.planted[plant.klass] += cfg.impressions_per_ad;
            }
        }
    }

    for (std::size_t i = blocks.size(); i > 1; --i)
        std::swap(blocks[i - 1], blocks[rng.below(i)]);

    std::int64_t t = cfg.start_epoch_s;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const std::string network = (b % 2 == 0) ? "wifi" : "cell";
        for (auto& imp : blocks[b].events) {
            imp.arrival = t;
            imp.network = network;
            t += cfg.step_s;
            fx.impressions.push_back(std::move(imp));
        }
    }

    fx.database = pir::synthetic_database(
        cfg.db_records * cfg.record_bytes, cfg.record_bytes, cfg.word_bits,
        substream_seed(cfg.seed, "fixture-db"));
    return fx;
}

void write_fixtures(const FixtureSet& fx, const std::string& dir) {
    std::filesystem::create_directories(dir);
    ads::save_taxonomy(fx.taxonomy, dir + "/taxonomy.txt");
    tfidf::save_corpus(fx.corpus, dir + "/corpus.txt");
    tfidf::save_catalog(fx.catalog, dir + "/catalog.txt");
    for (std::size_t p = 0; p < fx.contexts.size(); ++p) {
        profile::save_context(fx.contexts[p],
                              dir + "/context_" + fx.profile_ids[p] + ".txt");
        profile::save_profile(fx.profiles[p],
                              dir + "/profile_" + fx.profile_ids[p] + ".txt");
    }
    profile::save_context(fx.skewed_context, dir + "/context_skew.txt");
    ads::save_impressions(fx.impressions, dir + "/impressions.csv");
    ads::save_precategorized(fx.precategorized, dir + "/precategorized.tsv");
    std::string planted = "class,count\n";
    for (std::size_t i = 0; i < 4; ++i) {
        planted += std::string(ads::ad_class_name(
                       static_cast<ads::AdClass>(i))) +
                   ',' + std::to_string(fx.planted[i]) + '\n';
    }
    write_file(dir + "/planted_counts.csv", planted);
    pir::save_database(fx.database, dir + "/db.bin");
}

}  // namespace dring::fixtures
