#pragma once

#include "dlab/taxonomy/context_binding.hpp"
#include "dlab/taxonomy/profile.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <optional>
#include <set>
#include <string_view>
#include <vector>

namespace dlab {

enum class TaxonomyClass {
    context_tracking,
    sentence_tracking,
    paragraph_tracking,
    alphabet,
    nullspace,
    context_binding_candidate,
    meaningful_word,
    pca,
    unclassified,
};

inline constexpr int kTaxonomyClassCount = 9;

std::string_view to_string(TaxonomyClass c);
TaxonomyClass taxonomy_class_from_string(std::string_view name);

struct Cutoffs {
    double position = 0.4;   // |rho| >
    double nullspace = 0.2;  // alpha >
    double alphabet = 0.9;   // metric >=
    double meaningful_auc = 0.75;  // auc >
    double pca = 0.75;       // pc1_cos >
    std::vector<TaxonomyClass> priority = {
        TaxonomyClass::context_tracking, TaxonomyClass::sentence_tracking, TaxonomyClass::alphabet,
        TaxonomyClass::nullspace,        TaxonomyClass::context_binding_candidate, TaxonomyClass::paragraph_tracking,
        TaxonomyClass::meaningful_word,  TaxonomyClass::pca,
    };
    // When set, latents with density <= dense_gate stay unclassified.
    std::optional<double> dense_gate;

    void validate() const;
};

Cutoffs cutoffs_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Cutoffs& c);

struct TaxonomyLabel {
    Eigen::Index latent = 0;
    TaxonomyClass cls = TaxonomyClass::unclassified;
    double score = 0.0;  // the metric compared against the winning cutoff
    std::vector<TaxonomyClass> passed;  // every class whose cutoff passed
    nlohmann::json details;
};

struct TaxonomyReport {
    std::vector<TaxonomyLabel> labels;
    std::array<std::size_t, kTaxonomyClassCount> counts{};
    double overlap_fraction = 0.0;  // latents passing two or more cutoffs, before tie-breaking
};

// Score used for `cls` and whether it passes; nullopt when the class does
// not apply (missing metric, or not a context-binding candidate).
std::optional<double> class_score(const LatentProfile& p, TaxonomyClass cls, const Cutoffs& cutoffs,
                                  const std::set<Eigen::Index>& binding_latents);
bool passes(const LatentProfile& p, TaxonomyClass cls, const Cutoffs& cutoffs, const std::set<Eigen::Index>& binding_latents);

TaxonomyReport classify_all(const std::vector<LatentProfile>& profiles, const Cutoffs& cutoffs = {},
                            const std::vector<ContextBindingCandidate>& binding = {});

nlohmann::json to_json(const TaxonomyReport& r);

}  // namespace dlab
