#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dring/profile.hpp"
#include "dring/tfidf.hpp"

namespace dring::ads {

struct ClassifierError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyInput : ClassifierError {
    using ClassifierError::ClassifierError;
};
struct Unmappable : ClassifierError {
    using ClassifierError::ClassifierError;
};

// slash-separated taxonomy path, root segment first
struct CategoryNode {
    std::vector<std::string> path;

    const std::string& root() const { return path.front(); }
    std::string full() const;
    bool operator==(const CategoryNode& o) const { return path == o.path; }
};

CategoryNode parse_node(std::string_view slash_path);

struct Taxonomy {
    std::vector<CategoryNode> nodes;

    // token documents per node (keyed by full path) for similarity mapping
    tfidf::InterestCorpus token_docs() const;
    bool has_root(const std::string& root) const;
};

Taxonomy load_taxonomy(const std::string& path);
void save_taxonomy(const Taxonomy& t, const std::string& path);

struct AdImpression {
    std::string experiment_id;
    std::string profile;
    std::string app_category;
    std::int64_t arrival = 0;  // epoch seconds
    std::string network;
    std::string ad_url;
};

// CSV: experiment_id,profile,app_category,arrival_epoch_s,network,ad_url
std::vector<AdImpression> load_impressions(const std::string& path);
void save_impressions(std::span<const AdImpression> rows,
                      const std::string& path);

using Precategorized = std::map<std::string, CategoryNode>;

Precategorized load_precategorized(const std::string& path);
void save_precategorized(const Precategorized& pre, const std::string& path);

// direct table lookup, then tf-idf similarity of the URL tokens against
// the taxonomy docs; Unmappable when neither applies
CategoryNode map_url(const std::string& url, const Taxonomy& taxonomy,
                     const Precategorized& precategorized,
                     const tfidf::InterestCorpus& node_docs);

enum class AdClass { Random, Targeted, Contextual, Generic };

const char* ad_class_name(AdClass c);

struct ClassifiedAds {
    std::vector<AdClass> classes;  // parallel to the input impressions
    std::map<std::string, CategoryNode> url_nodes;  // successfully mapped urls

    std::array<std::size_t, 4> counts() const;
};

struct ClassifyOptions {
    std::int64_t overlap_s = 21600;  // shared-window length for random ads
    bool full_path = false;          // match whole paths instead of roots
};

// Filters strictly in order: random (url served to every profile inside a
// common overlap window), targeted (node meets the profile's categories),
// contextual (node meets the app category), generic (rest). URLs that map
// nowhere skip the two category filters.
ClassifiedAds classify(
    std::span<const AdImpression> impressions,
    const std::map<std::string, std::vector<CategoryNode>>& cr_by_profile,
    const std::map<std::string, std::vector<CategoryNode>>& cs_by_app,
    const Taxonomy& taxonomy, const Precategorized& precategorized,
    const ClassifyOptions& opt = {});

// profile categories above the floor, as root-level nodes
std::vector<CategoryNode> profile_categories(const profile::InterestProfile& p,
                                             double zeta_floor = 1e-4);

struct TimingStats {
    double idle_s = 0;
    std::vector<double> impression_s;
    struct Burst {
        std::string network;
        double span_s = 0;
    };
    std::vector<Burst> bursts;
    std::map<std::string, double> airtime_s;
};

// arrivals must be sorted; the last impression runs to start+duration
TimingStats timing_stats(std::span<const AdImpression> impressions,
                         double duration_s, double start_s = 0);

struct FrequencyReport {
    std::map<std::string, std::size_t> counts;       // serves per unique url
    std::vector<std::pair<std::size_t, double>> cdf; // count -> fraction of urls
    std::vector<std::size_t> bins;                   // unique urls per bin
    std::size_t bin_width = 100;
    std::size_t bin_max = 3100;
};

FrequencyReport frequency_report(std::span<const AdImpression> impressions,
                                 std::size_t bin_width = 100,
                                 std::size_t bin_max = 3100);

struct DpEffectReport {
    std::array<std::size_t, 4> before_counts{};
    std::array<std::size_t, 4> after_counts{};
    std::array<double, 4> before_pct{};
    std::array<double, 4> after_pct{};
    std::array<double, 4> diff_pct{};  // after - before
};

// Classifies the same log twice, with every profile's category set taken
// from the plain profile and then from the privatized one.
DpEffectReport dp_effect_report(std::span<const AdImpression> impressions,
                                const profile::InterestProfile& plain,
                                const profile::InterestProfile& privatized,
                                const Taxonomy& taxonomy,
                                const Precategorized& precategorized,
                                const ClassifyOptions& opt = {},
                                double zeta_floor = 1e-4);

// report serialization, all deterministic
std::string classes_csv(std::span<const AdImpression> impressions,
                        const ClassifiedAds& result);
std::string class_summary_csv(const ClassifiedAds& result);
std::string dp_effect_csv(const DpEffectReport& report);
std::string timing_csv(const TimingStats& stats);
std::string frequency_csv(const FrequencyReport& report);

}  // namespace dring::ads
