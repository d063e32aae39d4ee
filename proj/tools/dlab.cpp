// dlab: command-line front end for the dense-latent toolkit.
//
// Exit codes: 0 success, 2 invalid input or arguments, 3 numeric failure,
// 1 for file errors and anything else.

#include "dlab/dataset/shard.hpp"
#include "dlab/dataset/synthetic.hpp"
#include "dlab/experiments/ablation.hpp"
#include "dlab/experiments/layerwise.hpp"
#include "dlab/experiments/report.hpp"
#include "dlab/geometry/nullspace.hpp"
#include "dlab/geometry/pca.hpp"
#include "dlab/geometry/similarity.hpp"
#include "dlab/geometry/unembedding.hpp"
#include "dlab/sae/activity.hpp"
#include "dlab/sae/train.hpp"
#include "dlab/sae/weights_io.hpp"
#include "dlab/taxonomy/alphabet.hpp"
#include "dlab/taxonomy/classify.hpp"
#include "dlab/taxonomy/context_binding.hpp"
#include "dlab/taxonomy/position.hpp"
#include "dlab/taxonomy/profile.hpp"
#include "dlab/taxonomy/rank_stats.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dlab;

namespace {

json read_json(const fs::path& path)
{
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

json read_json_or_empty(const std::string& path) { return path.empty() ? json::object() : read_json(path); }

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw IoError("failed writing " + path.string());
}

json section(const json& j, const char* key) { return j.contains(key) ? j.at(key) : json::object(); }

Activation<float> variant_from(const std::string& name, int k)
{
    if (name == "topk") return TopK{k};
    if (name == "abs_topk") return AbsoluteTopK{k};
    throw ValidationError("training supports variants topk and abs_topk, got '" + name + "'");
}

// Cutoffs for the dense-latent taxonomy: unless the config says otherwise,
// only latents with density > 0.1 are labelled.
Cutoffs taxonomy_cutoffs(const json& j)
{
    auto c = cutoffs_from_json(j);
    if (!j.contains("dense_gate")) c.dense_gate = 0.1;
    return c;
}

struct TaxonomyRun {
    std::vector<LatentProfile> profiles;
    std::vector<ContextBindingCandidate> binding;
    TaxonomyReport report;
};

TaxonomyRun run_taxonomy(const SaeModelF& model, const ActivationShard& shard, const std::vector<TokenMetadata>& metadata,
                         const Unembedding* unembedding, const PosCategoryMap* pos_map, const json& config)
{
    TaxonomyRun run;
    run.profiles = build_profiles({model, shard, metadata, unembedding, pos_map}, profile_config_from_json(section(config, "profile")));
    run.binding = context_binding_candidates(model, shard, metadata, run.profiles,
                                             context_binding_config_from_json(section(config, "context_binding")));
    run.report = classify_all(run.profiles, taxonomy_cutoffs(section(config, "cutoffs")), run.binding);
    return run;
}

void print_counts(const TaxonomyReport& r)
{
    for (int c = 0; c < kTaxonomyClassCount; ++c) {
        const auto n = r.counts[static_cast<std::size_t>(c)];
        if (n) std::printf("  %-26s %zu\n", std::string(to_string(static_cast<TaxonomyClass>(c))).c_str(), n);
    }
    std::printf("  overlap fraction           %.4f\n", r.overlap_fraction);
}

std::string csv_row(std::initializer_list<std::string> cells)
{
    std::string out;
    for (const auto& c : cells) out += (out.empty() ? "" : ",") + c;
    return out + '\n';
}

std::string num(double v) { return format_number(v); }

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sparse autoencoder training and dense-latent analysis"};
    app.require_subcommand(1);

    // Shared option storage; each subcommand binds the subset it uses.
    std::string config_path, out_path, data_path, sae_path, unembed_path, pos_map_path;
    std::optional<std::uint64_t> seed;
    std::string variant = "topk", boundary = "all";
    int k = 8, top_n = 100, components = 5, nullspace_k = 10;
    double min_density = 0.0, threshold = 0.2;
    bool signed_sum = false;
    std::vector<std::string> sae_paths, data_paths;
    std::vector<double> thresholds = {0.05, 0.1, 0.2, 0.3};

    auto common = [&](CLI::App* sub, bool out_required = true) {
        sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "random seed (overrides the config)");
        auto* o = sub->add_option("--out", out_path, "output path");
        if (out_required) o->required();
    };

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with planted dense directions");
    common(synth);

    auto* train_cmd = app.add_subcommand("train", "train a TopK or AbsoluteTopK SAE");
    common(train_cmd);
    train_cmd->add_option("--data", data_path, ".dlab shard")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--variant", variant, "topk | abs_topk");
    train_cmd->add_option("--k", k, "active latents per token");

    auto* density = app.add_subcommand("density", "per-latent activation frequency");
    common(density);
    density->add_option("--sae", sae_path)->required()->check(CLI::ExistingFile);
    density->add_option("--data", data_path)->required()->check(CLI::ExistingFile);

    auto* anti = app.add_subcommand("antipodality", "antipodality, max pairwise and bias similarities");
    common(anti);
    anti->add_option("--sae", sae_path)->required()->check(CLI::ExistingFile);
    anti->add_option("--data", data_path, "optional shard for a density column")->check(CLI::ExistingFile);

    auto* nullspace = app.add_subcommand("nullspace", "encoder alignment with trailing unembedding singular directions");
    common(nullspace);
    nullspace->add_option("--sae", sae_path)->required()->check(CLI::ExistingFile);
    nullspace->add_option("--unembedding", unembed_path)->required()->check(CLI::ExistingFile);
    nullspace->add_option("--k", nullspace_k, "trailing subspace size");
    nullspace->add_flag("--signed-sum", signed_sum, "also report the signed-sum variant");

    auto* alphabet = app.add_subcommand("alphabet", "first-letter concentration of top and bottom logits");
    common(alphabet);
    alphabet->add_option("--sae", sae_path)->required()->check(CLI::ExistingFile);
    alphabet->add_option("--unembedding", unembed_path)->required()->check(CLI::ExistingFile);
    alphabet->add_option("--top", top_n, "tokens per side");

    auto* position = app.add_subcommand("position", "Spearman correlation of decoder projections with boundary distance");
    common(position);
    position->add_option("--sae", sae_path)->required()->check(CLI::ExistingFile);
    position->add_option("--data", data_path)->required()->check(CLI::ExistingFile);
    position->add_option("--boundary", boundary, "period | newline | bos | all");
    position->add_option("--min-density", min_density, "score only latents above this density");

    auto* auc = app.add_subcommand("auc", "meaningful-word AUC of binary latent activity");
    common(auc);
    auc->add_option("--sae", sae_path)->required()->check(CLI::ExistingFile);
    auc->add_option("--data", data_path)->required()->check(CLI::ExistingFile);
    auc->add_option("--pos-map", pos_map_path, "POS category map JSON")->check(CLI::ExistingFile);
    auc->add_option("--min-density", min_density, "score only latents above this density");

    auto* pca = app.add_subcommand("pca", "decoder alignment with activation principal components");
    common(pca);
    pca->add_option("--sae", sae_path)->required()->check(CLI::ExistingFile);
    pca->add_option("--data", data_path)->required()->check(CLI::ExistingFile);
    pca->add_option("--m", components, "number of leading components");

    auto* classify = app.add_subcommand("classify", "profile every latent and assign taxonomy classes");
    common(classify);
    classify->add_option("--sae", sae_path)->required()->check(CLI::ExistingFile);
    classify->add_option("--data", data_path)->required()->check(CLI::ExistingFile);
    classify->add_option("--unembedding", unembed_path)->check(CLI::ExistingFile);
    classify->add_option("--pos-map", pos_map_path)->check(CLI::ExistingFile);

    auto* ablate = app.add_subcommand("ablate-retrain", "baseline, dense-ablated and sparse-ablated retraining");
    common(ablate);
    ablate->add_option("--data", data_path)->required()->check(CLI::ExistingFile);

    auto* angles = app.add_subcommand("angles", "layer-wise density fractions and dense-subspace angles");
    common(angles);
    angles->add_option("--sae", sae_paths, "one SAE per layer")->required()->check(CLI::ExistingFile);
    angles->add_option("--data", data_paths, "one shard per layer")->required()->check(CLI::ExistingFile);
    angles->add_option("--threshold", threshold, "density threshold for the subspaces");
    angles->add_option("--thresholds", thresholds, "density thresholds for the fraction table");

    auto* report = app.add_subcommand("report", "synthetic end-to-end run: generate, ablate, classify, plot");
    common(report);

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the training gradients");
    common(gradcheck, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const json config = read_json_or_empty(config_path);

        if (synth->parsed()) {
            const auto cfg = synthetic_config_from_json(section(config, "synthetic").empty() ? config : config.at("synthetic"));
            const auto s = seed.value_or(config.value("seed", std::uint64_t{0}));
            const auto data = generate_synthetic(cfg, s);
            const fs::path dir = out_path;
            fs::create_directories(dir);
            write_shard(data.shard, data.metadata, dir / "acts.dlab");
            write_unembedding(data.unembedding, dir / "unembedding.dlnt");
            write_text(dir / "truth.json", to_json(data.truth).dump(2) + '\n');
            write_text(dir / "config.json", json{{"synthetic", to_json(cfg)}, {"seed", s}}.dump(2) + '\n');
            std::printf("wrote %lld tokens x %lld dims, %zu planted directions to %s\n",
                        static_cast<long long>(data.shard.n_tokens()), static_cast<long long>(data.shard.d_model()),
                        data.truth.planted.size(), dir.string().c_str());
        } else if (train_cmd->parsed()) {
            auto tc = train_config_from_json(section(config, "train").empty() ? config : config.at("train"));
            if (seed) tc.seed = *seed;
            const auto name = train_cmd->count("--variant") ? variant : config.value("variant", variant);
            const int kk = train_cmd->count("--k") ? k : config.value("k", k);
            const auto data = read_activations(data_path);
            const auto result = train(tc, data, variant_from(name, kk));
            write_sae(result.model, out_path);
            std::string telemetry = "step,dense_count\n";
            for (const auto& cp : result.telemetry.checkpoints) telemetry += csv_row({std::to_string(cp.step), std::to_string(cp.dense_count)});
            write_text(fs::path(out_path).replace_extension(".telemetry.csv"), telemetry);
            std::printf("loss %.6g -> %.6g over %d steps\n", result.loss_history.front(), result.loss_history.back(), tc.steps);
        } else if (density->parsed()) {
            const auto model = read_sae(sae_path);
            const auto d = latent_density(model, read_activations(data_path));
            std::string csv = "latent,density\n";
            for (Eigen::Index i = 0; i < d.size(); ++i) csv += csv_row({std::to_string(i), num(d(i))});
            write_text(out_path, csv);
            std::printf("%zu of %lld latents have density > 0.1\n", count_above(d, 0.1), static_cast<long long>(d.size()));
        } else if (anti->parsed()) {
            const auto model = read_sae(sae_path);
            const auto s = antipodality_scores(model);
            const auto pw = max_pairwise_sims(model);
            const auto bias = bias_similarity(model);
            std::optional<VectorXd> d;
            if (!data_path.empty()) d = latent_density(model, read_activations(data_path));
            std::string csv = "latent,antipodality,partner,degenerate,enc_sim,dec_sim,bias_cos_abs" + std::string(d ? ",density" : "") + "\n";
            for (Eigen::Index i = 0; i < model.d_sae(); ++i) {
                std::string row = csv_row({std::to_string(i), num(s.score(i)), std::to_string(s.partner(i)),
                                           s.degenerate[static_cast<std::size_t>(i)] ? "1" : "0", num(pw.enc_sim(i)), num(pw.dec_sim(i)),
                                           num(bias.abs_cos(i))});
                if (d) row.insert(row.size() - 1, "," + num((*d)(i)));
                csv += row;
            }
            write_text(out_path, csv);
            if (bias.zero_bias) std::fprintf(stderr, "note: b_dec is zero; bias similarities are all 0\n");
        } else if (nullspace->parsed()) {
            const auto model = read_sae(sae_path);
            const auto u = read_unembedding(unembed_path);
            require(u.d_model() == model.d_model(), "unembedding d_model must match the SAE");
            const auto trailing = left_singular_basis(u).trailing(nullspace_k);
            const VectorXd alpha = nullspace_alignment(model.w_enc, trailing);
            VectorXd raw;
            if (signed_sum) raw = nullspace_alignment_signed_sum(model.w_enc, trailing);
            std::string csv = "latent,alpha" + std::string(signed_sum ? ",signed_sum" : "") + "\n";
            for (Eigen::Index i = 0; i < alpha.size(); ++i)
                csv += signed_sum ? csv_row({std::to_string(i), num(alpha(i)), num(raw(i))}) : csv_row({std::to_string(i), num(alpha(i))});
            write_text(out_path, csv);
            std::printf("%.4f of latents have alpha_%d < 0.2\n", static_cast<double>((alpha.array() < 0.2).count()) / alpha.size(), nullspace_k);
        } else if (alphabet->parsed()) {
            const auto model = read_sae(sae_path);
            const auto scores = alphabet_scores(model, read_unembedding(unembed_path), top_n);
            std::string csv = "latent,letter,metric,side,degenerate,alphabet\n";
            std::size_t hits = 0;
            for (std::size_t i = 0; i < scores.size(); ++i) {
                const auto& s = scores[i];
                const bool is_alpha = s.metric >= kAlphabetCutoff;
                hits += is_alpha;
                std::string letter = s.letter;
                if (letter.find_first_of(",\"\n") != std::string::npos) letter = '"' + letter + '"';
                csv += csv_row({std::to_string(i), letter, num(s.metric), std::string(to_string(s.side)), s.degenerate ? "1" : "0", is_alpha ? "1" : "0"});
            }
            write_text(out_path, csv);
            std::printf("%zu alphabet latents\n", hits);
        } else if (position->parsed()) {
            const auto model = read_sae(sae_path);
            const auto data = read_shard(data_path);
            std::vector<Eigen::Index> latents;
            if (min_density > 0.0) {
                const auto d = latent_density(model, data.shard);
                for (Eigen::Index i = 0; i < d.size(); ++i)
                    if (d(i) > min_density) latents.push_back(i);
                if (latents.empty()) throw ValidationError("no latent has density above the --min-density gate");
            }
            std::vector<BoundaryKind> kinds;
            if (boundary == "all") {
                kinds = {BoundaryKind::period, BoundaryKind::newline, BoundaryKind::bos};
            } else {
                kinds = {boundary_kind_from_string(boundary)};
            }
            std::vector<PositionScores> scores;
            for (auto b : kinds) scores.push_back(position_scores(model, data.shard, data.metadata, b, latents));
            std::string csv = "latent";
            for (auto b : kinds) csv += ",rho_" + std::string(to_string(b));
            csv += '\n';
            for (Eigen::Index i = 0; i < model.d_sae(); ++i) {
                if (std::isnan(scores.front().rho(i))) continue;
                csv += std::to_string(i);
                for (const auto& s : scores) csv += ',' + num(s.rho(i));
                csv += '\n';
            }
            write_text(out_path, csv);
        } else if (auc->parsed()) {
            const auto model = read_sae(sae_path);
            const auto data = read_shard(data_path);
            const auto map = pos_map_path.empty() ? default_pos_map() : load_pos_map(pos_map_path);
            const auto d = latent_density(model, data.shard);
            std::vector<Eigen::Index> latents;
            for (Eigen::Index i = 0; i < d.size(); ++i)
                if (d(i) > min_density || min_density == 0.0) latents.push_back(i);
            std::vector<bool> meaningful(data.metadata.size());
            for (std::size_t t = 0; t < meaningful.size(); ++t) meaningful[t] = map.is_meaningful(data.metadata[t].pos_category);
            const auto active = active_tokens(model, data.shard, latents);
            std::string csv = "latent,density,auc,degenerate\n";
            for (std::size_t j = 0; j < latents.size(); ++j) {
                const auto r = binary_auc(active[j], meaningful);
                csv += csv_row({std::to_string(latents[j]), num(d(latents[j])), num(r.auc), r.degenerate ? "1" : "0"});
            }
            write_text(out_path, csv);
        } else if (pca->parsed()) {
            const auto model = read_sae(sae_path);
            const auto a = pca_alignment(model, read_activations(data_path), components);
            std::string csv = "latent,pc1_cos,topm_fraction\n";
            for (Eigen::Index i = 0; i < a.pc1_cos.size(); ++i) csv += csv_row({std::to_string(i), num(a.pc1_cos(i)), num(a.topm_fraction(i))});
            write_text(out_path, csv);
            if (a.rank_deficient) std::fprintf(stderr, "note: covariance rank below m; used %lld components\n", static_cast<long long>(a.used_components));
        } else if (classify->parsed()) {
            const auto model = read_sae(sae_path);
            const auto data = read_shard(data_path);
            std::optional<Unembedding> u;
            if (!unembed_path.empty()) u = read_unembedding(unembed_path);
            std::optional<PosCategoryMap> map;
            if (!pos_map_path.empty()) map = load_pos_map(pos_map_path);
            const auto run = run_taxonomy(model, data.shard, data.metadata, u ? &*u : nullptr, map ? &*map : nullptr, config);
            ReportInputs in;
            in.profiles = &run.profiles;
            in.taxonomy.emplace_back("sae", run.report);
            emit_report(in, out_path);
            json binding = json::array();
            for (const auto& c : run.binding) binding.push_back(to_json(c));
            write_text(fs::path(out_path) / "taxonomy.json", to_json(run.report).dump(2) + '\n');
            write_text(fs::path(out_path) / "context_binding.json", binding.dump(2) + '\n');
            print_counts(run.report);
        } else if (ablate->parsed()) {
            auto cfg = ablation_config_from_json(section(config, "ablation").empty() ? config : config.at("ablation"));
            if (seed) cfg.train.seed = *seed;
            const auto result = run_ablation_experiment(cfg, read_activations(data_path));
            ReportInputs in;
            in.ablation = &result;
            emit_report(in, out_path);
            write_text(fs::path(out_path) / "ablation.json", to_json(result).dump(2) + '\n');
            std::printf("dense latents: baseline %zu, dense-ablated %zu, sparse-ablated %zu\n", result.dense_count(result.baseline),
                        result.dense_count(result.dense_ablated), result.dense_count(result.sparse_ablated));
        } else if (angles->parsed()) {
            require(sae_paths.size() == data_paths.size(), "pass one --data shard per --sae model");
            std::vector<SaeModelF> models;
            std::vector<VectorXd> densities;
            DensityFractionTable table;
            for (std::size_t l = 0; l < sae_paths.size(); ++l) {
                models.push_back(read_sae(sae_paths[l]));
                densities.push_back(latent_density(models.back(), read_activations(data_paths[l])));
                table.layers.push_back(fs::path(sae_paths[l]).stem().string());
            }
            table.thresholds = thresholds;
            table.fractions = layerwise_density_fractions(densities, thresholds);
            const auto m = layerwise_subspace_angles(models, densities, threshold);
            ReportInputs in;
            in.angles = &m;
            in.angle_layers = table.layers;
            in.fractions = &table;
            emit_report(in, out_path);
            write_text(fs::path(out_path) / "angles.json", to_json(m).dump(2) + '\n');
        } else if (report->parsed()) {
            const auto s = seed.value_or(config.value("seed", std::uint64_t{0}));
            const auto data = generate_synthetic(synthetic_config_from_json(section(config, "synthetic")), s);
            auto cfg = ablation_config_from_json(section(config, "ablation"));
            cfg.train.seed = s;
            const auto result = run_ablation_experiment(cfg, data.shard);
            const auto run = run_taxonomy(result.baseline.result.model, data.shard, data.metadata, &data.unembedding, nullptr, config);
            ReportInputs in;
            in.ablation = &result;
            in.profiles = &run.profiles;
            in.taxonomy.emplace_back("baseline", run.report);
            emit_report(in, out_path);
            write_text(fs::path(out_path) / "ablation.json", to_json(result).dump(2) + '\n');
            write_text(fs::path(out_path) / "taxonomy.json", to_json(run.report).dump(2) + '\n');
            write_text(fs::path(out_path) / "truth.json", to_json(data.truth).dump(2) + '\n');
            print_counts(run.report);
        } else if (gradcheck->parsed()) {
            const int d_model = config.value("d_model", 16);
            const int d_sae = config.value("d_sae", 32);
            const int kk = config.value("k", 4);
            const int batch = config.value("batch", 16);
            const int n_models = config.value("models", 5);
            const double eps = config.value("epsilon", 1e-6);
            const double tol = config.value("tolerance", 1e-4);
            std::mt19937_64 rng(seed.value_or(config.value("seed", std::uint64_t{0})));
            std::normal_distribution<double> normal;
            json results = json::array();
            double worst = 0.0;
            for (int m = 0; m < n_models; ++m) {
                auto model = init_sae<double>(d_model, d_sae, TopK{kk}, rng);
                for (Eigen::Index i = 0; i < model.b_enc.size(); ++i) model.b_enc(i) = 0.1 * normal(rng);
                for (Eigen::Index i = 0; i < model.b_dec.size(); ++i) model.b_dec(i) = 0.1 * normal(rng);
                MatrixXd x(batch, d_model);
                for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
                const auto r = gradient_check(model, x, eps, 400, rng());
                worst = std::max(worst, r.max_relative_error);
                results.push_back({{"max_relative_error", r.max_relative_error}, {"checked", r.checked}, {"skipped_unstable", r.skipped_unstable}});
                std::printf("model %d: max relative error %.3e over %d parameters (%d skipped)\n", m, r.max_relative_error, r.checked, r.skipped_unstable);
            }
            if (!out_path.empty()) write_text(out_path, json{{"models", results}, {"max_relative_error", worst}}.dump(2) + '\n');
            if (!(worst < tol)) throw NumericError("gradient check failed: max relative error " + std::to_string(worst));
        }
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const json::exception& e) {
        std::fprintf(stderr, "error: bad config: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
