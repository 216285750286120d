#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dring/classifier.hpp"
#include "dring/pir.hpp"
#include "dring/profile.hpp"
#include "dring/tfidf.hpp"

namespace dring::fixtures {

struct FixtureConfig {
    std::uint64_t seed = 1;
    std::size_t num_profiles = 3;
    // distinct urls planted per class (random urls are shared, the other
    // classes get this many per profile)
    std::size_t ads_per_class = 5;
    std::size_t impressions_per_ad = 4;
    std::int64_t overlap_s = 21600;
    std::int64_t start_epoch_s = 1700000000;
    std::int64_t step_s = 300;
    std::size_t db_records = 256;
    std::size_t record_bytes = 64;
    std::uint32_t word_bits = 8;
};

struct FixtureSet {
    ads::Taxonomy taxonomy;
    tfidf::InterestCorpus corpus;
    tfidf::Catalog catalog;
    std::vector<profile::ContextProfile> contexts;
    profile::ContextProfile skewed_context;  // drives the low-entropy path
    std::vector<profile::InterestProfile> profiles;
    std::vector<std::string> profile_ids;
    std::vector<ads::AdImpression> impressions;
    ads::Precategorized precategorized;
    // expected impression counts: random, targeted, contextual, generic
    std::array<std::size_t, 4> planted{};
    pir::DatabaseMatrix database;
};

profile::CategoryMap category_map_for(const tfidf::InterestCorpus& corpus);

FixtureSet generate_fixtures(const FixtureConfig& cfg = {});

// writes taxonomy.txt, corpus.txt, catalog.txt, context_<p>.txt,
// context_skew.txt, profile_<p>.txt, impressions.csv, precategorized.tsv,
// planted_counts.csv and db.bin under dir
void write_fixtures(const FixtureSet& fx, const std::string& dir);

}  // namespace dring::fixtures
