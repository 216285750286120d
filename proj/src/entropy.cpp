#include "dring/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace dring::entropy {

void AttributeDistribution::validate() const {
    if (probs.empty())
        throw InvalidDistribution("AttributeDistribution: empty");
    if (weights.size() != probs.size())
        throw InvalidDistribution("AttributeDistribution: length mismatch");
    if (!ids.empty() && ids.size() != probs.size())
        throw InvalidDistribution("AttributeDistribution: ids length mismatch");
    double sum = 0;
    for (double p : probs) {
        if (!(p >= 0))
            throw InvalidDistribution("AttributeDistribution: negative prob");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw InvalidDistribution("AttributeDistribution: probs sum to " +
                                  std::to_string(sum));
    for (double w : weights)
        if (!(w >= 0))
            throw InvalidDistribution("AttributeDistribution: negative weight");
}

AttributeDistribution AttributeDistribution::from_profile(
    const profile::InterestProfile& p) {
    AttributeDistribution d;
    double total = 0;
    for (const auto& [k, w] : p.weights) total += w;
    if (total <= 0)
        throw InvalidDistribution("from_profile: no positive weights");
    for (const auto& [k, w] : p.weights) {
        d.ids.push_back(k);
        d.probs.push_back(w / total);
        d.weights.push_back(1.0);
    }
    return d;
}

namespace {

double plogp_bits(double p) { return p > 0 ? -p * std::log2(p) : 0.0; }

}  // namespace

double entropy(const AttributeDistribution& dist) {
    dist.validate();
    double h = 0;
    for (std::size_t i = 0; i < dist.size(); ++i)
        h += dist.weights[i] * plogp_bits(dist.probs[i]);
    return h;
}

double max_entropy(std::size_t n, std::span<const double> weights) {
    if (n < 1) throw InvalidDistribution("max_entropy: n must be >= 1");
    if (!weights.empty() && weights.size() != n)
        throw InvalidDistribution("max_entropy: weights length mismatch");
    const double sum_w =
        weights.empty()
            ? static_cast<double>(n)
            : std::accumulate(weights.begin(), weights.end(), 0.0);
    return (sum_w / static_cast<double>(n)) *
           std::log2(static_cast<double>(n));
}

EntropyState privacy_loss(const AttributeDistribution& dist,
                          std::int64_t slot) {
    EntropyState s;
    s.h = entropy(dist);
    s.h_max = max_entropy(dist.size(), dist.weights);
    s.loss = s.h_max - s.h;
    s.slot = slot;
    return s;
}

void MonitorPolicy::validate(double h_max) const {
    if (!(theta_apop >= 0 && theta_apop < theta_evap && theta_evap <= target &&
          target <= h_max))
        throw EntropyError(
            "MonitorPolicy: need 0 <= apop < evap <= target <= h_max");
}

const char* action_name(Action a) {
    switch (a) {
        case Action::None: return "none";
        case Action::Evaporate: return "evaporate";
        case Action::Apoptose: return "apoptose";
    }
    return "none";
}

Action decide(const EntropyState& state, const MonitorPolicy& policy) {
    policy.validate(state.h_max);
    if (state.h <= policy.theta_apop) return Action::Apoptose;
    if (state.h <= policy.theta_evap) return Action::Evaporate;
    return Action::None;
}

EvaporationResult evaporate(const AttributeDistribution& dist,
                            double target_bits) {
    dist.validate();
    const double h_max = max_entropy(dist.size(), dist.weights);
    if (target_bits > h_max + 1e-12)
        throw UnreachableTarget("evaporate: target " +
                                std::to_string(target_bits) + " > h_max " +
                                std::to_string(h_max));

    EvaporationResult res;
    res.dist = dist;
    const std::size_t n = dist.size();
    const double u = 1.0 / static_cast<double>(n);
    auto mix = [&](double alpha) {
        AttributeDistribution m = dist;
        for (std::size_t i = 0; i < n; ++i)
            m.probs[i] = (1.0 - alpha) * dist.probs[i] + alpha * u;
        return m;
    };

    if (entropy(dist) >= target_bits) {
        res.alpha = 0;
        return res;
    }
    if (target_bits >= h_max - 1e-15) {
        res.alpha = 1.0;
        res.dist = mix(1.0);
        return res;
    }

    double lo = 0.0, hi = 1.0;
    for (int iter = 0; iter < 200 && hi - lo > 1e-12; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (entropy(mix(mid)) >= target_bits)
            hi = mid;
        else
            lo = mid;
    }
    res.alpha = hi;
    res.dist = mix(hi);
    return res;
}

ApoptosisResult apoptose(const profile::InterestProfile& p,
                         const AttributeDistribution& dist, std::size_t k) {
    dist.validate();
    if (dist.ids.empty())
        throw InvalidDistribution("apoptose: distribution carries no ids");
    if (k < 1) throw std::invalid_argument("apoptose: k must be >= 1");
    if (k >= dist.size())
        throw KTooLarge("apoptose: k = " + std::to_string(k) +
                        " would leave no attributes");

    // rank by disclosure dominance w_i * p_i, largest first
    std::vector<std::size_t> order(dist.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double da = dist.weights[a] * dist.probs[a];
        const double db = dist.weights[b] * dist.probs[b];
        if (da != db) return da > db;
        return dist.ids[a] < dist.ids[b];
    });

    ApoptosisResult res;
    res.profile = p;
    for (std::size_t i = 0; i < k; ++i) {
        const std::string& id = dist.ids[order[i]];
        res.removed.push_back(id);
        res.profile.weights.erase(id);
        res.profile.browsing_weights.erase(id);
        res.profile.interaction_weights.erase(id);
    }
    std::sort(res.removed.begin(), res.removed.end());
    res.profile.state = profile::State::Evolution;
    res.reevaluate = true;
    return res;
}

profile::InterestProfile apply_distribution(const profile::InterestProfile& p,
                                            const AttributeDistribution& dist) {
    dist.validate();
    if (dist.ids.size() != dist.size())
        throw InvalidDistribution("apply_distribution: ids required");
    double total = 0;
    for (const auto& [k, w] : p.weights) total += w;
    profile::InterestProfile out = p;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        auto it = out.weights.find(dist.ids[i]);
        if (it == out.weights.end())
            throw InvalidDistribution("apply_distribution: id " +
                                      dist.ids[i] + " not in profile");
        double v = dist.probs[i] * total;
        if (v > p.bounds.zeta_max) v = p.bounds.zeta_max;
        if (v <= 0) v = p.bounds.zeta_min > 0 ? p.bounds.zeta_min : 1e-9;
        it->second = v;
    }
    return out;
}

std::string monitor_log_header() {
    return "slot,h,h_max,loss,action,alpha_or_k";
}

std::string monitor_log_row(const EntropyState& state, Action action,
                            double alpha_or_k) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%lld,%.9f,%.9f,%.9f,%s,%.9f",
                  static_cast<long long>(state.slot), state.h, state.h_max,
                  state.loss, action_name(action), alpha_or_k);
    return buf;
}

}  // namespace dring::entropy
