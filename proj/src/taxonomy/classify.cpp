#include "dlab/taxonomy/classify.hpp"

#include <cmath>

namespace dlab {

namespace {

constexpr std::array<std::string_view, kTaxonomyClassCount> kClassNames = {
    "context_tracking", "sentence_tracking", "paragraph_tracking", "alphabet", "nullspace",
    "context_binding_candidate", "meaningful_word", "pca", "unclassified",
};

std::optional<double> finite(double v)
{
    if (std::isnan(v)) return std::nullopt;
    return v;
}

}  // namespace

std::string_view to_string(TaxonomyClass c) { return kClassNames[static_cast<std::size_t>(c)]; }

TaxonomyClass taxonomy_class_from_string(std::string_view name)
{
    for (std::size_t i = 0; i < kClassNames.size(); ++i)
        if (kClassNames[i] == name) return static_cast<TaxonomyClass>(i);
    throw ValidationError("unknown taxonomy class '" + std::string(name) + "'");
}

void Cutoffs::validate() const
{
    require(position >= 0.0 && position <= 1.0, "position cutoff must lie in [0, 1]");
    require(nullspace >= 0.0 && nullspace <= 1.0, "nullspace cutoff must lie in [0, 1]");
    require(alphabet >= 0.0 && alphabet <= 1.0, "alphabet cutoff must lie in [0, 1]");
    require(meaningful_auc >= 0.0 && meaningful_auc <= 1.0, "AUC cutoff must lie in [0, 1]");
    require(pca >= 0.0 && pca <= 1.0, "PCA cutoff must lie in [0, 1]");
    std::set<TaxonomyClass> seen;
    for (auto c : priority) {
        require(c != TaxonomyClass::unclassified, "priority list cannot contain unclassified");
        require(seen.insert(c).second, "priority list contains a duplicate class");
    }
    if (dense_gate) require(*dense_gate >= 0.0 && *dense_gate <= 1.0, "dense_gate must lie in [0, 1]");
}

Cutoffs cutoffs_from_json(const nlohmann::json& j)
{
    Cutoffs c;
    c.position = j.value("position", c.position);
    c.nullspace = j.value("nullspace", c.nullspace);
    c.alphabet = j.value("alphabet", c.alphabet);
    c.meaningful_auc = j.value("meaningful_auc", c.meaningful_auc);
    c.pca = j.value("pca", c.pca);
    if (j.contains("priority")) {
        c.priority.clear();
        for (const auto& name : j.at("priority")) c.priority.push_back(taxonomy_class_from_string(name.get<std::string>()));
    }
    if (j.contains("dense_gate") && !j.at("dense_gate").is_null()) c.dense_gate = j.at("dense_gate").get<double>();
    c.validate();
    return c;
}

nlohmann::json to_json(const Cutoffs& c)
{
    nlohmann::json priority = nlohmann::json::array();
    for (auto p : c.priority) priority.push_back(std::string(to_string(p)));
    return {{"position", c.position},
            {"nullspace", c.nullspace},
            {"alphabet", c.alphabet},
            {"meaningful_auc", c.meaningful_auc},
            {"pca", c.pca},
            {"priority", priority},
            {"dense_gate", c.dense_gate ? nlohmann::json(*c.dense_gate) : nlohmann::json(nullptr)}};
}

std::optional<double> class_score(const LatentProfile& p, TaxonomyClass cls, const Cutoffs&,
                                  const std::set<Eigen::Index>& binding_latents)
{
    switch (cls) {
    case TaxonomyClass::context_tracking: return finite(p.rho_bos);
    case TaxonomyClass::sentence_tracking: return finite(p.rho_period);
    case TaxonomyClass::paragraph_tracking: return finite(p.rho_newline);
    case TaxonomyClass::alphabet: return finite(p.alphabet_metric);
    case TaxonomyClass::nullspace: return finite(p.alpha);
    case TaxonomyClass::context_binding_candidate:
        if (!binding_latents.count(p.latent)) return std::nullopt;
        return p.antipodality;
    case TaxonomyClass::meaningful_word: return finite(p.meaningful_auc);
    case TaxonomyClass::pca: return finite(p.pc1_cos);
    case TaxonomyClass::unclassified: return std::nullopt;
    }
    return std::nullopt;
}

bool passes(const LatentProfile& p, TaxonomyClass cls, const Cutoffs& cutoffs, const std::set<Eigen::Index>& binding_latents)
{
    const auto s = class_score(p, cls, cutoffs, binding_latents);
    if (!s) return false;
    switch (cls) {
    case TaxonomyClass::context_tracking:
    case TaxonomyClass::sentence_tracking:
    case TaxonomyClass::paragraph_tracking: return std::abs(*s) > cutoffs.position;
    case TaxonomyClass::alphabet: return *s >= cutoffs.alphabet;
    case TaxonomyClass::nullspace: return *s > cutoffs.nullspace;
    case TaxonomyClass::context_binding_candidate: return true;
    case TaxonomyClass::meaningful_word: return *s > cutoffs.meaningful_auc;
    case TaxonomyClass::pca: return *s > cutoffs.pca;
    case TaxonomyClass::unclassified: return false;
    }
    return false;
}

TaxonomyReport classify_all(const std::vector<LatentProfile>& profiles, const Cutoffs& cutoffs,
                            const std::vector<ContextBindingCandidate>& binding)
{
    cutoffs.validate();
    std::set<Eigen::Index> binding_latents;
    for (const auto& c : binding) {
        binding_latents.insert(c.a);
        binding_latents.insert(c.b);
    }

    TaxonomyReport report;
    report.labels.reserve(profiles.size());
    std::size_t overlapping = 0;
    for (const auto& p : profiles) {
        TaxonomyLabel label;
        label.latent = p.latent;
        const bool gated = cutoffs.dense_gate && !(p.density > *cutoffs.dense_gate);
        if (!gated) {
            for (auto cls : cutoffs.priority)
                if (passes(p, cls, cutoffs, binding_latents)) label.passed.push_back(cls);
        }
        if (label.passed.size() >= 2) ++overlapping;
        if (!label.passed.empty()) {
            label.cls = label.passed.front();
            label.score = *class_score(p, label.cls, cutoffs, binding_latents);
        }
        switch (label.cls) {
        case TaxonomyClass::context_tracking: label.details = {{"boundary", "bos"}, {"rho", p.rho_bos}}; break;
        case TaxonomyClass::sentence_tracking: label.details = {{"boundary", "period"}, {"rho", p.rho_period}}; break;
        case TaxonomyClass::paragraph_tracking: label.details = {{"boundary", "newline"}, {"rho", p.rho_newline}}; break;
        case TaxonomyClass::alphabet:
            label.details = {{"letter", p.alphabet_letter}, {"metric", p.alphabet_metric}, {"side", std::string(to_string(p.alphabet_side))}};
            break;
        case TaxonomyClass::nullspace: label.details = {{"alpha", p.alpha}}; break;
        case TaxonomyClass::context_binding_candidate:
            for (const auto& c : binding) {
                if (c.a == p.latent || c.b == p.latent) {
                    label.details = to_json(c);
                    break;
                }
            }
            break;
        case TaxonomyClass::meaningful_word: label.details = {{"auc", p.meaningful_auc}}; break;
        case TaxonomyClass::pca: label.details = {{"pc1_cos", p.pc1_cos}}; break;
        case TaxonomyClass::unclassified: label.details = nlohmann::json::object(); break;
        }
        ++report.counts[static_cast<std::size_t>(label.cls)];
        report.labels.push_back(std::move(label));
    }
    report.overlap_fraction = profiles.empty() ? 0.0 : static_cast<double>(overlapping) / static_cast<double>(profiles.size());
    return report;
}

nlohmann::json to_json(const TaxonomyReport& r)
{
    nlohmann::json counts = nlohmann::json::object();
    for (int c = 0; c < kTaxonomyClassCount; ++c) counts[std::string(to_string(static_cast<TaxonomyClass>(c)))] = r.counts[static_cast<std::size_t>(c)];
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& l : r.labels) {
        nlohmann::json passed = nlohmann::json::array();
        for (auto c : l.passed) passed.push_back(std::string(to_string(c)));
        labels.push_back({{"latent", l.latent}, {"class", std::string(to_string(l.cls))}, {"score", l.score}, {"passed", passed}, {"details", l.details}});
    }
    return {{"counts", counts}, {"overlap_fraction", r.overlap_fraction}, {"labels", labels}};
}

}  // namespace dlab
