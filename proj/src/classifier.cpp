#include "dring/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "dring/io.hpp"

namespace dring::ads {

namespace {

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line,
                                        std::size_t expected) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',' && out.size() + 1 < expected) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::string CategoryNode::full() const {
    std::string out;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i) out += '/';
        out += path[i];
    }
    return out;
}

CategoryNode parse_node(std::string_view slash_path) {
    CategoryNode node;
    std::string cur;
    for (char c : slash_path) {
        if (c == '/') {
            if (!cur.empty()) node.path.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) node.path.push_back(cur);
    if (node.path.empty())
        throw ClassifierError("parse_node: empty path");
    return node;
}

tfidf::InterestCorpus Taxonomy::token_docs() const {
    tfidf::InterestCorpus corpus;
    for (const auto& n : nodes) {
        std::vector<std::string> doc;
        for (const auto& seg : n.path) {
            auto toks = tfidf::tokenize(seg);
            doc.insert(doc.end(), toks.begin(), toks.end());
        }
        corpus.docs[n.full()] = std::move(doc);
    }
    return corpus;
}

bool Taxonomy::has_root(const std::string& root) const {
    for (const auto& n : nodes)
        if (n.root() == root) return true;
    return false;
}

Taxonomy load_taxonomy(const std::string& path) {
    std::istringstream in(read_file(path));
    Taxonomy t;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        t.nodes.push_back(parse_node(line));
    }
    if (t.nodes.empty()) throw IoError("load_taxonomy: no nodes in " + path);
    return t;
}

void save_taxonomy(const Taxonomy& t, const std::string& path) {
    std::string out;
    for (const auto& n : t.nodes) out += n.full() + "\n";
    write_file(path, out);
}

std::vector<AdImpression> load_impressions(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line) ||
        line != "experiment_id,profile,app_category,arrival_epoch_s,network,"
                "ad_url")
        throw IoError("load_impressions: bad header in " + path);
    std::vector<AdImpression> rows;
    std::map<std::string, std::int64_t> last_arrival;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line, 6);
        if (f.size() != 6)
            throw IoError("load_impressions: malformed row in " + path);
        AdImpression imp;
        imp.experiment_id = f[0];
        imp.profile = f[1];
        imp.app_category = f[2];
        imp.arrival = std::stoll(f[3]);
        imp.network = f[4];
        imp.ad_url = f[5];
        auto it = last_arrival.find(imp.experiment_id);
        if (it != last_arrival.end() && imp.arrival < it->second)
            throw IoError("load_impressions: arrivals out of order in " +
                          path);
        last_arrival[imp.experiment_id] = imp.arrival;
        rows.push_back(std::move(imp));
    }
    return rows;
}

void save_impressions(std::span<const AdImpression> rows,
                      const std::string& path) {
    std::string out =
        "experiment_id,profile,app_category,arrival_epoch_s,network,ad_url\n";
    for (const auto& r : rows) {
        out += r.experiment_id + ',' + r.profile + ',' + r.app_category + ',' +
               std::to_string(r.arrival) + ',' + r.network + ',' + r.ad_url +
               '\n';
    }
    write_file(path, out);
}

Precategorized load_precategorized(const std::string& path) {
    std::istringstream in(read_file(path));
    Precategorized pre;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw IoError("load_precategorized: malformed line in " + path);
        pre[line.substr(0, tab)] = parse_node(line.substr(tab + 1));
    }
    return pre;
}

void save_precategorized(const Precategorized& pre, const std::string& path) {
    std::string out;
    for (const auto& [url, node] : pre) out += url + '\t' + node.full() + '\n';
    write_file(path, out);
}

CategoryNode map_url(const std::string& url, const Taxonomy& taxonomy,
                     const Precategorized& precategorized,
                     const tfidf::InterestCorpus& node_docs) {
    if (taxonomy.nodes.empty())
        throw ClassifierError("map_url: empty taxonomy");
    auto it = precategorized.find(url);
    if (it != precategorized.end()) return it->second;
    auto tokens = tfidf::tokenize(url);
    try {
        const std::string winner = tfidf::map_keywords(tokens, node_docs);
        for (const auto& n : taxonomy.nodes)
            if (n.full() == winner) return n;
        throw Unmappable("map_url: winner not in taxonomy: " + winner);
    } catch (const tfidf::NoPositiveMatch&) {
        throw Unmappable("map_url: no category matches " + url);
    }
}

const char* ad_class_name(AdClass c) {
    switch (c) {
        case AdClass::Random: return "random";
        case AdClass::Targeted: return "targeted";
        case AdClass::Contextual: return "contextual";
        case AdClass::Generic: return "generic";
    }
    return "generic";
}

std::array<std::size_t, 4> ClassifiedAds::counts() const {
    std::array<std::size_t, 4> c{};
    for (AdClass a : classes) ++c[static_cast<std::size_t>(a)];
    return c;
}

namespace {

bool node_matches(const CategoryNode& node,
                  const std::vector<CategoryNode>& against, bool full_path) {
    for (const auto& c : against) {
        if (full_path ? node.full() == c.full() : node.root() == c.root())
            return true;
    }
    return false;
}

// true when some window of length overlap covers one arrival per profile
bool served_to_all_within(
    const std::vector<std::pair<std::int64_t, std::string>>& events,
    std::size_t num_profiles, std::int64_t overlap_s) {
    std::map<std::string, std::size_t> in_window;
    std::size_t covered = 0;
    std::size_t i = 0;
    for (std::size_t j = 0; j < events.size(); ++j) {
        if (++in_window[events[j].second] == 1) ++covered;
        while (events[j].first - events[i].first > overlap_s) {
            if (--in_window[events[i].second] == 0) --covered;
            ++i;
        }
        if (covered == num_profiles) return true;
    }
    return false;
}

}  // namespace

ClassifiedAds classify(
    std::span<const AdImpression> impressions,
    const std::map<std::string, std::vector<CategoryNode>>& cr_by_profile,
    const std::map<std::string, std::vector<CategoryNode>>& cs_by_app,
    const Taxonomy& taxonomy, const Precategorized& precategorized,
    const ClassifyOptions& opt) {
    if (impressions.empty()) throw EmptyInput("classify: no impressions");

    ClassifiedAds result;
    result.classes.resize(impressions.size(), AdClass::Generic);

    const auto node_docs = taxonomy.token_docs();
    std::set<std::string> unmappable;
    for (const auto& imp : impressions) {
        if (result.url_nodes.count(imp.ad_url) ||
            unmappable.count(imp.ad_url))
            continue;
        try {
            result.url_nodes.emplace(
                imp.ad_url,
                map_url(imp.ad_url, taxonomy, precategorized, node_docs));
        } catch (const Unmappable&) {
            unmappable.insert(imp.ad_url);
        }
    }

    // random filter first: it never consults categories or profiles'
    // interest content, only who saw the url and when
    std::set<std::string> profiles;
    for (const auto& imp : impressions) profiles.insert(imp.profile);
    std::map<std::string, std::vector<std::pair<std::int64_t, std::string>>>
        events_by_url;
    for (const auto& imp : impressions)
        events_by_url[imp.ad_url].emplace_back(imp.arrival, imp.profile);
    std::set<std::string> random_urls;
    if (profiles.size() >= 2) {
        for (auto& [url, events] : events_by_url) {
            std::set<std::string> seen;
            for (const auto& [t, p] : events) seen.insert(p);
            if (seen.size() != profiles.size()) continue;
            std::sort(events.begin(), events.end());
            if (served_to_all_within(events, profiles.size(), opt.overlap_s))
                random_urls.insert(url);
        }
    }

    for (std::size_t i = 0; i < impressions.size(); ++i) {
        const auto& imp = impressions[i];
        if (random_urls.count(imp.ad_url)) {
            result.classes[i] = AdClass::Random;
            continue;
        }
        auto node_it = result.url_nodes.find(imp.ad_url);
        if (node_it == result.url_nodes.end()) {
            result.classes[i] = AdClass::Generic;
            continue;
        }
        const auto cr = cr_by_profile.find(imp.profile);
        if (cr != cr_by_profile.end() &&
            node_matches(node_it->second, cr->second, opt.full_path)) {
            result.classes[i] = AdClass::Targeted;
            continue;
        }
        const auto cs = cs_by_app.find(imp.app_category);
        if (cs != cs_by_app.end() &&
            node_matches(node_it->second, cs->second, opt.full_path)) {
            result.classes[i] = AdClass::Contextual;
            continue;
        }
        result.classes[i] = AdClass::Generic;
    }
    return result;
}

std::vector<CategoryNode> profile_categories(const profile::InterestProfile& p,
                                             double zeta_floor) {
    std::vector<CategoryNode> out;
    for (const auto& [cat, w] : p.weights)
        if (w > zeta_floor) out.push_back(CategoryNode{{cat}});
    return out;
}

TimingStats timing_stats(std::span<const AdImpression> impressions,
                         double duration_s, double start_s) {
    TimingStats stats;
    if (impressions.empty()) {
        stats.idle_s = duration_s;
        return stats;
    }
    for (std::size_t i = 1; i < impressions.size(); ++i)
        if (impressions[i].arrival < impressions[i - 1].arrival)
            throw std::invalid_argument("timing_stats: arrivals not sorted");

    const double end_s = start_s + duration_s;
    stats.idle_s = static_cast<double>(impressions.front().arrival) - start_s;
    for (std::size_t i = 0; i < impressions.size(); ++i) {
        const double t = static_cast<double>(impressions[i].arrival);
        const double next = (i + 1 < impressions.size())
                                ? static_cast<double>(impressions[i + 1].arrival)
                                : end_s;
        const double dur = next - t;
        stats.impression_s.push_back(dur);
        stats.airtime_s[impressions[i].network] += dur;
    }
    std::size_t run_start = 0;
    for (std::size_t i = 1; i <= impressions.size(); ++i) {
        if (i == impressions.size() ||
            impressions[i].network != impressions[run_start].network) {
            stats.bursts.push_back(
                {impressions[run_start].network,
                 static_cast<double>(impressions[i - 1].arrival -
                                     impressions[run_start].arrival)});
            run_start = i;
        }
    }
    return stats;
}

FrequencyReport frequency_report(std::span<const AdImpression> impressions,
                                 std::size_t bin_width, std::size_t bin_max) {
    if (bin_width == 0 || bin_max < bin_width)
        throw std::invalid_argument("frequency_report: bad bin layout");
    FrequencyReport rep;
    rep.bin_width = bin_width;
    rep.bin_max = bin_max;
    for (const auto& imp : impressions) ++rep.counts[imp.ad_url];

    rep.bins.assign(bin_max / bin_width, 0);
    std::map<std::size_t, std::size_t> by_count;
    for (const auto& [url, n] : rep.counts) {
        ++by_count[n];
        std::size_t bin = (n - 1) / bin_width;
        if (bin >= rep.bins.size()) bin = rep.bins.size() - 1;
        ++rep.bins[bin];
    }
    const double total = static_cast<double>(rep.counts.size());
    std::size_t running = 0;
    for (const auto& [count, n] : by_count) {
        running += n;
        rep.cdf.emplace_back(count, static_cast<double>(running) / total);
    }
    return rep;
}

DpEffectReport dp_effect_report(std::span<const AdImpression> impressions,
                                const profile::InterestProfile& plain,
                                const profile::InterestProfile& privatized,
                                const Taxonomy& taxonomy,
                                const Precategorized& precategorized,
                                const ClassifyOptions& opt,
                                double zeta_floor) {
    std::set<std::string> profiles, apps;
    for (const auto& imp : impressions) {
        profiles.insert(imp.profile);
        apps.insert(imp.app_category);
    }
    std::map<std::string, std::vector<CategoryNode>> cs;
    for (const auto& a : apps)
        if (taxonomy.has_root(a)) cs[a].push_back(CategoryNode{{a}});

    auto run = [&](const profile::InterestProfile& p) {
        auto cats = profile_categories(p, zeta_floor);
        std::map<std::string, std::vector<CategoryNode>> cr;
        for (const auto& id : profiles) cr[id] = cats;
        return classify(impressions, cr, cs, taxonomy, precategorized, opt);
    };

    DpEffectReport rep;
    rep.before_counts = run(plain).counts();
    rep.after_counts = run(privatized).counts();
    const double total = static_cast<double>(impressions.size());
    for (std::size_t i = 0; i < 4; ++i) {
        rep.before_pct[i] = 100.0 * static_cast<double>(rep.before_counts[i]) /
                            total;
        rep.after_pct[i] = 100.0 * static_cast<double>(rep.after_counts[i]) /
                           total;
        rep.diff_pct[i] = rep.after_pct[i] - rep.before_pct[i];
    }
    return rep;
}

std::string classes_csv(std::span<const AdImpression> impressions,
                        const ClassifiedAds& result) {
    std::string out =
        "experiment_id,profile,app_category,arrival_epoch_s,network,ad_url,"
        "class,node\n";
    for (std::size_t i = 0; i < impressions.size(); ++i) {
        const auto& imp = impressions[i];
        auto node = result.url_nodes.find(imp.ad_url);
        out += imp.experiment_id + ',' + imp.profile + ',' +
               imp.app_category + ',' + std::to_string(imp.arrival) + ',' +
               imp.network + ',' + imp.ad_url + ',' +
               ad_class_name(result.classes[i]) + ',' +
               (node == result.url_nodes.end() ? std::string()
                                               : node->second.full()) +
               '\n';
    }
    return out;
}

std::string class_summary_csv(const ClassifiedAds& result) {
    const auto c = result.counts();
    const double total = static_cast<double>(result.classes.size());
    std::string out = "class,count,percent\n";
    for (std::size_t i = 0; i < 4; ++i) {
        out += std::string(ad_class_name(static_cast<AdClass>(i))) + ',' +
               std::to_string(c[i]) + ',' +
               fmt6(total > 0 ? 100.0 * static_cast<double>(c[i]) / total
                              : 0.0) +
               '\n';
    }
    return out;
}

std::string dp_effect_csv(const DpEffectReport& report) {
    std::string out = "class,before_pct,after_pct,diff_pct\n";
    for (std::size_t i = 0; i < 4; ++i) {
        out += std::string(ad_class_name(static_cast<AdClass>(i))) + ',' +
               fmt6(report.before_pct[i]) + ',' + fmt6(report.after_pct[i]) +
               ',' + fmt6(report.diff_pct[i]) + '\n';
    }
    return out;
}

std::string timing_csv(const TimingStats& stats) {
    std::string out = "metric,key,value\n";
    out += "idle_s,," + fmt6(stats.idle_s) + '\n';
    for (std::size_t i = 0; i < stats.impression_s.size(); ++i)
        out += "impression_s," + std::to_string(i) + ',' +
               fmt6(stats.impression_s[i]) + '\n';
    for (const auto& b : stats.bursts)
        out += "burst_s," + b.network + ',' + fmt6(b.span_s) + '\n';
    for (const auto& [net, t] : stats.airtime_s)
        out += "airtime_s," + net + ',' + fmt6(t) + '\n';
    return out;
}

std::string frequency_csv(const FrequencyReport& report) {
    std::string out = "bin_lo,bin_hi,unique_ads\n";
    for (std::size_t i = 0; i < report.bins.size(); ++i) {
        const std::size_t lo = i * report.bin_width + 1;
        const std::size_t hi = (i + 1) * report.bin_width;
        out += std::to_string(lo) + ',' + std::to_string(hi) + ',' +
               std::to_string(report.bins[i]) + '\n';
    }
    return out;
}

}  // namespace dring::ads
