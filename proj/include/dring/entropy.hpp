#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dring/profile.hpp"

namespace dring::entropy {

struct EntropyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidDistribution : EntropyError {
    using EntropyError::EntropyError;
};
struct UnreachableTarget : EntropyError {
    using EntropyError::EntropyError;
};
struct KTooLarge : EntropyError {
    using EntropyError::EntropyError;
};

// Probability mass over profile attributes with per-attribute disclosure
// weights. ids, when present, run parallel to probs.
struct AttributeDistribution {
    std::vector<double> probs;
    std::vector<double> weights;
    std::vector<std::string> ids;

    std::size_t size() const { return probs.size(); }
    void validate() const;

    // normalized category weights with unit disclosure weights
    static AttributeDistribution from_profile(
        const profile::InterestProfile& p);
};

// weighted Shannon entropy, sum of w_i * (-p_i log2 p_i)
double entropy(const AttributeDistribution& dist);

// entropy at the uniform distribution; empty weights mean unit weights
double max_entropy(std::size_t n, std::span<const double> weights = {});

struct EntropyState {
    double h = 0;
    double h_max = 0;
    double loss = 0;  // h_max - h
    std::int64_t slot = 0;
};

EntropyState privacy_loss(const AttributeDistribution& dist,
                          std::int64_t slot = 0);

struct MonitorPolicy {
    double theta_evap = 0;  // at or below: distort
    double theta_apop = 0;  // at or below: destroy attributes
    double target = 0;      // entropy evaporation aims for

    static MonitorPolicy defaults_for(double h_max) {
        return {0.6 * h_max, 0.3 * h_max, 0.8 * h_max};
    }
    void validate(double h_max) const;
};

enum class Action { None, Evaporate, Apoptose };

const char* action_name(Action a);

// thresholds are inclusive; apoptosis wins where both apply
Action decide(const EntropyState& state, const MonitorPolicy& policy);

struct EvaporationResult {
    AttributeDistribution dist;
    double alpha = 0;  // mixing fraction toward uniform
};

// Smallest alpha (bisection, finer than 1e-9) whose mix
// (1-alpha)p + alpha*uniform reaches the target entropy.
EvaporationResult evaporate(const AttributeDistribution& dist,
                            double target_bits);

struct ApoptosisResult {
    profile::InterestProfile profile;
    std::vector<std::string> removed;
    bool reevaluate = true;  // caller is expected to re-establish
};

// Destroys the k most disclosure-dominant attributes (largest w_i * p_i,
// ties to the lexicographically smallest id). dist must carry ids aligned
// with the profile's categories.
ApoptosisResult apoptose(const profile::InterestProfile& p,
                         const AttributeDistribution& dist, std::size_t k);

// rescale a profile's category weights to match a distribution while
// preserving total mass; used to apply evaporation back to a profile
profile::InterestProfile apply_distribution(const profile::InterestProfile& p,
                                            const AttributeDistribution& dist);

std::string monitor_log_header();
std::string monitor_log_row(const EntropyState& state, Action action,
                            double alpha_or_k);

}  // namespace dring::entropy
