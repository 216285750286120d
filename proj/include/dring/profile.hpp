#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dring/tfidf.hpp"

namespace dring::profile {

struct ProfileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyContext : ProfileError {
    using ProfileError::ProfileError;
};
struct UnmappableCategory : ProfileError {
    using ProfileError::ProfileError;
};
struct WeightOutOfBounds : ProfileError {
    using ProfileError::ProfileError;
};
struct StaleDelta : ProfileError {
    using ProfileError::ProfileError;
};

// update cadence: one slot per day unless configured otherwise
constexpr std::int64_t kSlotSeconds = 86400;

struct WeightBounds {
    double zeta_min = 0.0;
    double zeta_max = 1.0;

    void validate() const {
        if (!(zeta_min >= 0.0 && zeta_min < zeta_max && zeta_max <= 1.0))
            throw WeightOutOfBounds("WeightBounds: need 0 <= min < max <= 1");
    }
};

struct Service {
    // marketplace ordinal pair (provider, service)
    std::pair<std::uint32_t, std::uint32_t> id;
    std::string category;
    std::vector<std::string> keywords;

    std::string id_string() const {
        return std::to_string(id.first) + "." + std::to_string(id.second);
    }
};

struct ContextProfile {
    std::vector<Service> services;
};

enum class State { Initiation, Stable, Evolution };

std::string state_name(State s);
State parse_state(std::string_view name);

// Weighted interest categories plus browsing/interaction components.
// Category weights live in [zeta_min, zeta_max]; component weights are
// only bounded above. Values are immutable; operations return copies.
struct InterestProfile {
    std::map<std::string, double> weights;
    std::map<std::string, double> browsing_weights;
    std::map<std::string, double> interaction_weights;
    std::int64_t timestamp = 0;
    State state = State::Initiation;
    WeightBounds bounds;

    std::int64_t slot(std::int64_t slot_seconds = kSlotSeconds) const {
        return timestamp / slot_seconds;
    }
};

struct ProfileDelta {
    std::map<std::string, double> category_changes;
    std::map<std::string, double> browsing_changes;
    std::map<std::string, double> interaction_changes;
    std::int64_t slot = 0;
    double max_change = 1.0;  // per-slot cap on any single change
};

struct UsageRecord {
    // fraction of the slot each opted-in service was used
    std::map<std::string, double> per_service_usage;  // keyed by id_string
    std::int64_t slot = 0;
};

// Static category table with keyword-similarity fallback. resolve maps a
// service's marketplace category to an interest category.
struct CategoryMap {
    std::map<std::string, std::string> table;
    const tfidf::InterestCorpus* fallback = nullptr;

    std::string resolve(const Service& s) const;
};

InterestProfile establish_profile(const ContextProfile& ctx,
                                  const CategoryMap& mapping,
                                  const WeightBounds& bounds = {},
                                  std::int64_t timestamp = 0);

InterestProfile apply_activity(
    const InterestProfile& p, const std::map<std::string, double>& browsing,
    const std::map<std::string, double>& interactions,
    const WeightBounds& bounds);

InterestProfile evolve(const InterestProfile& p, const ProfileDelta& d,
                       std::int64_t slot_seconds = kSlotSeconds);

InterestProfile incorporate_usage(const InterestProfile& p,
                                  const UsageRecord& u,
                                  const ContextProfile& ctx,
                                  const CategoryMap& mapping);

State detect_state(std::span<const InterestProfile> history,
                   double tol = 1e-6, std::size_t window = 3);

// context file: "DRCONTEXT 1" header, then provider.service<TAB>category
// <TAB>space-separated keywords, one installed service per line
ContextProfile load_context(const std::string& path);
void save_context(const ContextProfile& ctx, const std::string& path);

// Text form: "DRPROFILE 1" header, meta lines, then one line per weight
// entry sorted by kind then id. Deterministic for byte-compare tests.
std::string to_text(const InterestProfile& p,
                    const std::map<std::string, std::string>& extra_meta = {});
InterestProfile from_text(
    std::string_view text,
    std::map<std::string, std::string>* extra_meta = nullptr);
void save_profile(const InterestProfile& p, const std::string& path,
                  const std::map<std::string, std::string>& extra_meta = {});
InterestProfile load_profile(
    const std::string& path,
    std::map<std::string, std::string>* extra_meta = nullptr);

}  // namespace dring::profile
