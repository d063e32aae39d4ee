#include "dlab/taxonomy/context_binding.hpp"

#include "dlab/sae/activity.hpp"

#include <set>

namespace dlab {

void ContextBindingConfig::validate() const
{
    require(min_antipodality >= -1.0 && min_antipodality <= 1.0, "min_antipodality must lie in [-1, 1]");
    require(min_density >= 0.0 && min_density <= 1.0, "min_density must lie in [0, 1]");
    require(position_cutoff >= 0.0, "position_cutoff must be non-negative");
    require(min_mean_run >= 1.0, "min_mean_run must be at least 1");
    require(max_coactivation >= 0.0 && max_coactivation <= 1.0, "max_coactivation must lie in [0, 1]");
}

ContextBindingConfig context_binding_config_from_json(const nlohmann::json& j)
{
    ContextBindingConfig c;
    c.min_antipodality = j.value("min_antipodality", c.min_antipodality);
    c.min_density = j.value("min_density", c.min_density);
    c.position_cutoff = j.value("position_cutoff", c.position_cutoff);
    c.min_mean_run = j.value("min_mean_run", c.min_mean_run);
    c.max_coactivation = j.value("max_coactivation", c.max_coactivation);
    c.validate();
    return c;
}

nlohmann::json to_json(const ContextBindingConfig& c)
{
    return {{"min_antipodality", c.min_antipodality},
            {"min_density", c.min_density},
            {"position_cutoff", c.position_cutoff},
            {"min_mean_run", c.min_mean_run},
            {"max_coactivation", c.max_coactivation}};
}

RunStats run_statistics(const std::vector<bool>& active, const std::vector<TokenMetadata>& metadata)
{
    require(active.size() == metadata.size(), "run statistics: activity and metadata are misaligned");
    RunStats s;
    std::size_t run = 0;
    auto close = [&] {
        if (run > 0) {
            ++s.run_lengths[run];
            ++s.runs;
        }
        run = 0;
    };
    for (std::size_t t = 0; t < active.size(); ++t) {
        if (t > 0 && metadata[t].context_id != metadata[t - 1].context_id) close();
        if (active[t]) {
            ++run;
            ++s.active_tokens;
        } else {
            close();
        }
    }
    close();
    s.mean_run = s.runs ? static_cast<double>(s.active_tokens) / static_cast<double>(s.runs) : 0.0;
    return s;
}

std::size_t count_flips(const std::vector<bool>& a, const std::vector<bool>& b, const std::vector<TokenMetadata>& metadata)
{
    require(a.size() == metadata.size() && b.size() == metadata.size(), "flip count: activity and metadata are misaligned");
    std::size_t flips = 0;
    int last = -1;  // 0: a was the active member, 1: b
    for (std::size_t t = 0; t < a.size(); ++t) {
        if (t > 0 && metadata[t].context_id != metadata[t - 1].context_id) last = -1;
        if (a[t] == b[t]) continue;
        const int now = a[t] ? 0 : 1;
        if (last >= 0 && now != last) ++flips;
        last = now;
    }
    return flips;
}

std::vector<ContextBindingCandidate> context_binding_candidates(const SaeModelF& model, const ActivationShard& shard,
                                                                const std::vector<TokenMetadata>& metadata,
                                                                const std::vector<LatentProfile>& profiles,
                                                                const ContextBindingConfig& config)
{
    config.validate();
    require(static_cast<Eigen::Index>(profiles.size()) == model.d_sae(), "context binding: one profile per latent required");
    require(static_cast<std::size_t>(shard.n_tokens()) == metadata.size(), "context binding: shard and metadata are misaligned");

    std::set<std::pair<Eigen::Index, Eigen::Index>> pairs;
    for (const auto& p : profiles) {
        if (p.partner < 0 || !(p.antipodality > config.min_antipodality)) continue;
        const auto& q = profiles[static_cast<std::size_t>(p.partner)];
        if (!(std::max(p.density, q.density) > config.min_density)) continue;
        if (!is_non_positional(p, config.position_cutoff) || !is_non_positional(q, config.position_cutoff)) continue;
        pairs.emplace(std::min(p.latent, q.latent), std::max(p.latent, q.latent));
    }
    if (pairs.empty()) return {};

    std::vector<Eigen::Index> latents;
    std::map<Eigen::Index, std::size_t> slot;
    for (const auto& [a, b] : pairs) {
        for (auto l : {a, b})
            if (slot.emplace(l, latents.size()).second) latents.push_back(l);
    }
    const auto active = active_tokens(model, shard, latents);

    std::set<std::int64_t> contexts;
    for (const auto& m : metadata) contexts.insert(m.context_id);

    std::vector<ContextBindingCandidate> out;
    for (const auto& [a, b] : pairs) {
        const auto& fa = active[slot.at(a)];
        const auto& fb = active[slot.at(b)];
        ContextBindingCandidate c;
        c.a = a;
        c.b = b;
        c.antipodality = std::max(profiles[static_cast<std::size_t>(a)].antipodality, profiles[static_cast<std::size_t>(b)].antipodality);
        c.runs_a = run_statistics(fa, metadata);
        c.runs_b = run_statistics(fb, metadata);
        if (c.runs_a.mean_run < config.min_mean_run || c.runs_b.mean_run < config.min_mean_run) continue;
        std::size_t both = 0, either = 0;
        for (std::size_t t = 0; t < fa.size(); ++t) {
            both += fa[t] && fb[t];
            either += fa[t] || fb[t];
        }
        c.coactivation = either ? static_cast<double>(both) / static_cast<double>(either) : 0.0;
        if (!(c.coactivation < config.max_coactivation)) continue;
        c.flips = count_flips(fa, fb, metadata);
        c.flips_per_context = static_cast<double>(c.flips) / static_cast<double>(contexts.size());
        out.push_back(std::move(c));
    }
    return out;
}

nlohmann::json to_json(const ContextBindingCandidate& c)
{
    auto runs = [](const RunStats& s) {
        nlohmann::json hist = nlohmann::json::object();
        for (const auto& [len, count] : s.run_lengths) hist[std::to_string(len)] = count;
        return nlohmann::json{{"runs", s.runs}, {"active_tokens", s.active_tokens}, {"mean_run", s.mean_run}, {"histogram", hist}};
    };
    return {{"a", c.a},
            {"b", c.b},
            {"antipodality", c.antipodality},
            {"runs_a", runs(c.runs_a)},
            {"runs_b", runs(c.runs_b)},
            {"coactivation", c.coactivation},
            {"flips", c.flips},
            {"flips_per_context", c.flips_per_context}};
}

}  // namespace dlab
