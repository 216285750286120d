#include "dring/dp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "dring/io.hpp"

namespace dring::dp {

void ProfileDatabase::validate() const {
    std::unordered_set<std::string> seen;
    for (const auto& r : rows)
        if (!seen.insert(r.temp_id).second)
            throw DpError("ProfileDatabase: duplicate temp_id " + r.temp_id);
}

const char* query_kind_name(QueryKind k) {
    switch (k) {
        case QueryKind::CountOptIn: return "count_optin";
        case QueryKind::CategoryHistogram: return "category_histogram";
        case QueryKind::MostRequestedService: return "most_requested_service";
    }
    return "unknown";
}

std::size_t StatQuery::output_dim() const {
    return kind == QueryKind::CountOptIn ? 1 : taxonomy.size();
}

void StatQuery::validate() const {
    switch (kind) {
        case QueryKind::CountOptIn:
            if (service_id.empty())
                throw UnsupportedQuery("StatQuery: CountOptIn needs a service");
            return;
        case QueryKind::CategoryHistogram:
        case QueryKind::MostRequestedService:
            if (taxonomy.empty())
                throw UnsupportedQuery("StatQuery: histogram needs bins");
            if (!std::is_sorted(taxonomy.begin(), taxonomy.end()) ||
                std::adjacent_find(taxonomy.begin(), taxonomy.end()) !=
                    taxonomy.end())
                throw UnsupportedQuery(
                    "StatQuery: taxonomy bins must be sorted and unique");
            return;
    }
    throw UnsupportedQuery("StatQuery: unknown kind");
}

double sensitivity(const StatQuery& q) {
    q.validate();
    // CountOptIn: one row moves one count by 1.
    // CategoryHistogram: a row contributes to exactly one bin (its
    // dominant category), so add/remove changes the L1 by 1. The argmax
    // variant is the histogram plus post-processing, which cannot raise
    // sensitivity.
    return 1.0;
}

namespace {

// dominant category of a profile: largest weight, ties toward the
// lexicographically smallest id (map order provides that)
const std::string* dominant_category(const profile::InterestProfile& p) {
    const std::string* best = nullptr;
    double best_w = 0;
    for (const auto& [cat, w] : p.weights) {
        if (!best || w > best_w) {
            best = &cat;
            best_w = w;
        }
    }
    return best;
}

}  // namespace

std::vector<double> evaluate(const StatQuery& q, const ProfileDatabase& db) {
    q.validate();
    db.validate();
    if (q.kind == QueryKind::CountOptIn) {
        double n = 0;
        for (const auto& r : db.rows)
            if (r.optin_services.count(q.service_id)) n += 1;
        return {n};
    }
    std::vector<double> hist(q.taxonomy.size(), 0.0);
    for (const auto& r : db.rows) {
        const std::string* cat = dominant_category(r.interests);
        if (!cat) continue;
        auto it = std::lower_bound(q.taxonomy.begin(), q.taxonomy.end(), *cat);
        if (it != q.taxonomy.end() && *it == *cat)
            hist[static_cast<std::size_t>(it - q.taxonomy.begin())] += 1;
    }
    return hist;
}

std::size_t argmax_bin(std::span<const double> values) {
    if (values.empty()) throw UnsupportedQuery("argmax_bin: empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

double laplace_sample(double lambda, Rng& rng) {
    if (lambda < 0)
        throw std::invalid_argument("laplace_sample: negative lambda");
    if (lambda == 0) return 0.0;
    // u uniform on (-1/2, 1/2); real01 can hit exactly 0, redraw that edge
    double u;
    do {
        u = rng.real01() - 0.5;
    } while (u == -0.5);
    if (u == 0.0) return 0.0;
    const double sign = u > 0 ? 1.0 : -1.0;
    return -lambda * sign * std::log(1.0 - 2.0 * std::abs(u));
}

NoisyOutput perturb(std::span<const double> c, double delta, double epsilon,
                    Rng& rng) {
    if (!(epsilon > 0))
        throw NonPositiveEpsilon("perturb: epsilon must be positive");
    if (delta < 0) throw std::invalid_argument("perturb: negative delta");
    NoisyOutput out;
    out.epsilon = epsilon;
    out.lambda = delta / epsilon;
    out.values.reserve(c.size());
    for (double v : c) out.values.push_back(v + laplace_sample(out.lambda, rng));
    return out;
}

double expected_error(double delta, double epsilon) {
    if (!(epsilon > 0))
        throw NonPositiveEpsilon("expected_error: epsilon must be positive");
    return std::sqrt(2.0) * delta / epsilon;
}

double mean_abs_error(double delta, double epsilon) {
    if (!(epsilon > 0))
        throw NonPositiveEpsilon("mean_abs_error: epsilon must be positive");
    return delta / epsilon;
}

profile::InterestProfile privatize_profile(const profile::InterestProfile& p,
                                           double epsilon,
                                           const profile::WeightBounds& bounds,
                                           Rng& rng, double zeta_floor) {
    if (!(epsilon > 0))
        throw NonPositiveEpsilon("privatize_profile: epsilon must be positive");
    bounds.validate();
    if (!(zeta_floor > 0 && zeta_floor <= bounds.zeta_max))
        throw std::invalid_argument("privatize_profile: bad zeta_floor");
    const double lambda = bounds.zeta_max / epsilon;
    profile::InterestProfile out = p;
    out.bounds = bounds;
    auto noisy = [&](std::map<std::string, double>& m) {
        for (auto& [k, w] : m) {
            double v = w + laplace_sample(lambda, rng);
            if (v <= 0) v = zeta_floor;
            if (v > bounds.zeta_max) v = bounds.zeta_max;
            w = v;
        }
    };
    noisy(out.weights);
    noisy(out.browsing_weights);
    noisy(out.interaction_weights);
    return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& x : a) inter += b.count(x);
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::vector<std::size_t>> group_profiles(
    const std::vector<ProfileRow>& rows, double threshold) {
    if (!(threshold >= 0.6 && threshold <= 1.0))
        throw ThresholdOutOfRange("group_profiles: threshold outside [0.6,1]");
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::set<std::string>> seeds;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::set<std::string> cats;
        for (const auto& [k, v] : rows[i].interests.weights) cats.insert(k);
        bool placed = false;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (jaccard(cats, seeds[g]) >= threshold) {
                groups[g].push_back(i);
                placed = true;
                break;
            }
        }
        if (!placed) {
            groups.push_back({i});
            seeds.push_back(std::move(cats));
        }
    }
    return groups;
}

std::string make_temp_id(Rng& rng) {
    char buf[33];
    std::snprintf(buf, sizeof(buf), "%016llx%016llx",
                  static_cast<unsigned long long>(rng.u64()),
                  static_cast<unsigned long long>(rng.u64()));
    return buf;
}

std::string noisy_output_csv(const StatQuery& q, double delta,
                             const NoisyOutput& out) {
    char num[64];
    std::string row = query_kind_name(q.kind);
    row += ',' + std::to_string(out.values.size());
    std::snprintf(num, sizeof(num), "%.9f", out.epsilon);
    row += ',';
    row += num;
    std::snprintf(num, sizeof(num), "%.9f", delta);
    row += ',';
    row += num;
    std::snprintf(num, sizeof(num), "%.9f", out.lambda);
    row += ',';
    row += num;
    for (double v : out.values) {
        std::snprintf(num, sizeof(num), "%.9f", v);
        row += ',';
        row += num;
    }
    return row;
}

ProfileDatabase load_profile_database(const std::vector<std::string>& paths) {
    ProfileDatabase db;
    for (const auto& path : paths) {
        std::map<std::string, std::string> meta;
        ProfileRow row;
        row.interests = profile::load_profile(path, &meta);
        auto it = meta.find("temp_id");
        if (it == meta.end())
            throw IoError(path + ": missing temp_id meta line");
        row.temp_id = it->second;
        if (auto op = meta.find("optin"); op != meta.end()) {
            std::string cur;
            for (char c : op->second) {
                if (c == ',') {
                    if (!cur.empty()) row.optin_services.insert(cur);
                    cur.clear();
                } else {
                    cur.push_back(c);
                }
            }
            if (!cur.empty()) row.optin_services.insert(cur);
        }
        db.rows.push_back(std::move(row));
    }
    db.validate();
    return db;
}

void save_profile_row(const ProfileRow& row, const std::string& path) {
    std::map<std::string, std::string> meta;
    meta["temp_id"] = row.temp_id;
    if (!row.optin_services.empty()) {
        std::string joined;
        for (const auto& s : row.optin_services) {
            if (!joined.empty()) joined += ',';
            joined += s;
        }
        meta["optin"] = joined;
    }
    profile::save_profile(row.interests, path, meta);
}

}  // namespace dring::dp
