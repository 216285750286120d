#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dring/fixtures.hpp"
#include "dring/profile.hpp"

namespace dring::pipeline {

struct PipelineConfig {
    std::uint64_t seed = 1;
    std::string out_dir;  // empty runs everything in memory
    double epsilon = 1.0;
    std::size_t top_k = 5;
    unsigned servers = 3;
    unsigned privacy = 1;
    unsigned depth = 1;
    std::size_t evolve_slots = 3;
    fixtures::FixtureConfig fixture;
};

struct StageRecord {
    std::string name;
    std::uint64_t digest = 0;  // over the stage's deterministic artifact
    double seconds = 0;        // wall time, never part of the digest
};

struct PipelineResult {
    std::vector<StageRecord> stages;
    profile::State detected_state = profile::State::Initiation;
    bool fetch_verified = false;
    // how often the monitor destroyed attributes and forced a context
    // re-establishment anywhere in the run
    std::size_t apoptosis_reestablishments = 0;
    std::array<std::size_t, 4> class_counts{};
    std::uint64_t fetch_up_bytes = 0;
    std::uint64_t fetch_down_bytes = 0;

    // one "<stage>\t<digest hex>" line per stage; byte-identical across
    // runs that share a seed
    std::string stage_log_text() const;
};

PipelineResult run_pipeline(const PipelineConfig& cfg);

}  // namespace dring::pipeline
