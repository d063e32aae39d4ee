#pragma once

#include "dlab/dataset/shard.hpp"
#include "dlab/sae/model.hpp"
#include "dlab/taxonomy/profile.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <vector>

namespace dlab {

// Structural screen for context-binding latents: antipodal pairs that fire
// in long runs and hand over to each other along the sequence. This only
// nominates candidates; it does not confirm a binding role.
struct ContextBindingConfig {
    double min_antipodality = 0.9;
    double min_density = 0.2;      // at least one member above this
    double position_cutoff = 0.4;  // both members need every |rho| <= this
    double min_mean_run = 5.0;     // both members
    double max_coactivation = 0.05;

    void validate() const;
};

ContextBindingConfig context_binding_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ContextBindingConfig& c);

struct RunStats {
    std::map<std::size_t, std::size_t> run_lengths;  // length -> number of runs
    std::size_t runs = 0;
    std::size_t active_tokens = 0;
    double mean_run = 0.0;
};

struct ContextBindingCandidate {
    Eigen::Index a = 0;  // a < b
    Eigen::Index b = 0;
    double antipodality = 0.0;
    RunStats runs_a;
    RunStats runs_b;
    double coactivation = 0.0;  // tokens with both active / tokens with either
    std::size_t flips = 0;      // changes of the active member, summed over contexts
    double flips_per_context = 0.0;
};

// Runs never cross context boundaries.
RunStats run_statistics(const std::vector<bool>& active, const std::vector<TokenMetadata>& metadata);

// Number of times the active member changes within each context, counting
// only tokens where exactly one of the pair is active.
std::size_t count_flips(const std::vector<bool>& a, const std::vector<bool>& b, const std::vector<TokenMetadata>& metadata);

std::vector<ContextBindingCandidate> context_binding_candidates(const SaeModelF& model, const ActivationShard& shard,
                                                                const std::vector<TokenMetadata>& metadata,
                                                                const std::vector<LatentProfile>& profiles,
                                                                const ContextBindingConfig& config = {});

nlohmann::json to_json(const ContextBindingCandidate& c);

}  // namespace dlab
