#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dring/profile.hpp"
#include "dring/rng.hpp"

namespace dring::dp {

struct DpError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonPositiveEpsilon : DpError {
    using DpError::DpError;
};
struct UnsupportedQuery : DpError {
    using DpError::DpError;
};
struct ThresholdOutOfRange : DpError {
    using DpError::DpError;
};

// One aggregated profile under a temporary identity. temp_id carries no
// relation to any permanent identifier; see make_temp_id.
struct ProfileRow {
    std::string temp_id;
    profile::InterestProfile interests;
    std::set<std::string> optin_services;  // service id strings
};

struct ProfileDatabase {
    std::vector<ProfileRow> rows;

    void validate() const;  // unique temp ids
};

enum class QueryKind { CountOptIn, CategoryHistogram, MostRequestedService };

const char* query_kind_name(QueryKind k);

struct StatQuery {
    QueryKind kind = QueryKind::CountOptIn;
    std::string service_id;              // CountOptIn target
    std::vector<std::string> taxonomy;   // histogram bins, sorted unique

    std::size_t output_dim() const;
    void validate() const;
};

// worst-case L1 output change under add/remove-one-row adjacency
double sensitivity(const StatQuery& q);

// the exact (pre-noise) answer; MostRequestedService answers a histogram
// and leaves the argmax for after perturbation
std::vector<double> evaluate(const StatQuery& q, const ProfileDatabase& db);

// index of the largest noisy bin, ties to the smaller index
std::size_t argmax_bin(std::span<const double> values);

// inverse-CDF Laplace(0, lambda); lambda = 0 returns exactly 0
double laplace_sample(double lambda, Rng& rng);

struct NoisyOutput {
    std::vector<double> values;
    double epsilon = 0;
    double lambda = 0;
};

NoisyOutput perturb(std::span<const double> c, double delta, double epsilon,
                    Rng& rng);

// the calibrated per-element noise stddev, sqrt(2)*delta/epsilon
double expected_error(double delta, double epsilon);
// expected absolute noise, delta/epsilon; differs from the above by sqrt(2)
double mean_abs_error(double delta, double epsilon);

// Per-weight Laplace noise with lambda = zeta_max/epsilon, clamped back to
// (0, zeta_max]. Non-positive results land on zeta_floor so the category
// support set never changes.
profile::InterestProfile privatize_profile(const profile::InterestProfile& p,
                                           double epsilon,
                                           const profile::WeightBounds& bounds,
                                           Rng& rng,
                                           double zeta_floor = 1e-4);

// Greedy first-fit grouping by Jaccard similarity of category sets against
// each group's first row. threshold must sit in [0.6, 1.0].
std::vector<std::vector<std::size_t>> group_profiles(
    const std::vector<ProfileRow>& rows, double threshold);

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

// 128-bit random hex token
std::string make_temp_id(Rng& rng);

// CSV row: query_kind,dim,epsilon,delta,lambda,values...
std::string noisy_output_csv(const StatQuery& q, double delta,
                             const NoisyOutput& out);

// rows from profile files carrying temp_id (and optionally optin) meta
ProfileDatabase load_profile_database(const std::vector<std::string>& paths);
void save_profile_row(const ProfileRow& row, const std::string& path);

}  // namespace dring::dp
