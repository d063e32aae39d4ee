// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Training-based checks use fixed seeds and take a few
// minutes on one core.

#include "../helpers.hpp"

#include "dlab/dataset/synthetic.hpp"
#include "dlab/experiments/ablation.hpp"
#include "dlab/experiments/layerwise.hpp"
#include "dlab/experiments/report.hpp"
#include "dlab/geometry/jacobi_svd.hpp"
#include "dlab/geometry/nullspace.hpp"
#include "dlab/geometry/pca.hpp"
#include "dlab/geometry/similarity.hpp"
#include "dlab/geometry/subspace.hpp"
#include "dlab/sae/train.hpp"
#include "dlab/sae/weights_io.hpp"
#include "dlab/taxonomy/classify.hpp"
#include "dlab/taxonomy/context_binding.hpp"
#include "dlab/taxonomy/profile.hpp"
#include "dlab/taxonomy/rank_stats.hpp"

#include <Eigen/SVD>

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

using namespace dlab;
using namespace dlab::test;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<Outcome()>& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s  %-28s %s [%.1f s of %.0f s]%s\n", pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs, budget_s,
                in_time ? "" : " over budget");
    std::fflush(stdout);
}

// ---------------------------------------------------------------- gradients

Outcome gradients()
{
    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int dims[5][3] = {{8, 16, 2}, {12, 24, 3}, {16, 32, 4}, {10, 20, 5}, {16, 32, 8}};
    double worst = 0.0;
    int checked = 0, skipped = 0;
    for (const auto& d : dims) {
        auto m = init_sae<double>(d[0], d[1], TopK{d[2]}, rng);
        for (Eigen::Index i = 0; i < m.b_enc.size(); ++i) m.b_enc(i) = 0.1 * normal(rng);
        for (Eigen::Index i = 0; i < m.b_dec.size(); ++i) m.b_dec(i) = 0.1 * normal(rng);
        const MatrixXd batch = random_matrix(16, d[0], rng);
        const auto r = gradient_check(m, batch, 1e-5, 0);
        if (r.checked == 0) return {false, "no stable parameters to check"};
        worst = std::max(worst, r.max_relative_error);
        checked += r.checked;
        skipped += r.skipped_unstable;
    }
    return {worst < 1e-4, "max rel err " + fmt("%.2e", worst) + " over " + std::to_string(checked) + " params, 5 models (" +
                              std::to_string(skipped) + " at mask boundaries skipped)"};
}

// ------------------------------------------------------ activation contracts

template <typename Key>
std::vector<int> oracle_top_k(const std::vector<double>& v, int k, Key key)
{
    std::vector<int> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return key(v[static_cast<std::size_t>(a)]) > key(v[static_cast<std::size_t>(b)]); });
    idx.resize(static_cast<std::size_t>(std::min<int>(k, static_cast<int>(v.size()))));
    return idx;
}

Outcome activations()
{
    const double grid[] = {-2.0, -1.0, 0.0, 1.0, 2.0};
    long cases = 0;
    for (int n = 1; n <= 6; ++n) {
        int total = 1;
        for (int i = 0; i < n; ++i) total *= 5;
        for (int code = 0; code < total; ++code) {
            std::vector<double> v(static_cast<std::size_t>(n));
            VectorXd pre(n);
            for (int i = 0, c = code; i < n; ++i, c /= 5) pre(i) = v[static_cast<std::size_t>(i)] = grid[c % 5];
            const auto positive = (pre.array() > 0).count();
            const auto nonzero = (pre.array() != 0).count();
            for (int k = 1; k <= n; ++k) {
                ++cases;
                const VectorXd t = apply_activation(pre, TopK{k});
                VectorXd t_oracle = VectorXd::Zero(n);
                for (int i : oracle_top_k(v, k, [](double x) { return x; })) t_oracle(i) = std::max(0.0, pre(i));
                if ((t.array() != 0).count() > k) return {false, "TopK produced more than k nonzeros"};
                if ((t.array() != 0).count() != std::min<Eigen::Index>(k, positive)) return {false, "TopK nonzero count"};
                if (t != t_oracle) return {false, "TopK disagrees with the sort oracle"};

                const VectorXd a = apply_activation(pre, AbsoluteTopK{k});
                VectorXd a_oracle = VectorXd::Zero(n);
                for (int i : oracle_top_k(v, k, [](double x) { return std::abs(x); })) a_oracle(i) = pre(i);
                if ((a.array() != 0).count() != std::min<Eigen::Index>(k, nonzero)) return {false, "AbsoluteTopK nonzero count"};
                for (int i = 0; i < n; ++i)
                    if (a(i) != 0 && a(i) != pre(i)) return {false, "AbsoluteTopK changed a sign or value"};
                if (a != a_oracle) return {false, "AbsoluteTopK disagrees with the sort oracle"};
            }
        }
    }
    // JumpReLU: every pre-activation pattern against every threshold pattern.
    const double thetas[] = {0.0, 0.5, 1.0, 2.0};
    for (int n = 1; n <= 4; ++n) {
        int pre_total = 1, th_total = 1;
        for (int i = 0; i < n; ++i) {
            pre_total *= 5;
            th_total *= 4;
        }
        for (int pc = 0; pc < pre_total; ++pc) {
            VectorXd pre(n);
            for (int i = 0, c = pc; i < n; ++i, c /= 5) pre(i) = grid[c % 5];
            for (int tc = 0; tc < th_total; ++tc) {
                ++cases;
                VectorXd th(n);
                for (int i = 0, c = tc; i < n; ++i, c /= 4) th(i) = thetas[c % 4];
                const VectorXd out = apply_activation(pre, JumpReLU<double>{th});
                for (int i = 0; i < n; ++i) {
                    const bool zeroed = pre(i) <= th(i);
                    if (zeroed ? out(i) != 0.0 : out(i) != pre(i)) return {false, "JumpReLU threshold contract"};
                }
            }
        }
    }
    return {true, std::to_string(cases) + " exhaustive cases"};
}

// ------------------------------------------------------------------ oracles

std::vector<double> pair_count_ranks(const std::vector<double>& v)
{
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double less = 0, equal = 0;
        for (double w : v) {
            less += w < v[i];
            equal += w == v[i];
        }
        r[i] = 1.0 + less + (equal - 1.0) / 2.0;
    }
    return r;
}

double oracle_pearson(const std::vector<double>& a, const std::vector<double>& b)
{
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i] / n;
        mb += b[i] / n;
    }
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

double oracle_auc(const std::vector<bool>& labels, const std::vector<bool>& pred)
{
    double num = 0, pairs = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j]) continue;
            pairs += 1;
            num += pred[i] > pred[j] ? 1.0 : pred[i] == pred[j] ? 0.5 : 0.0;
        }
    }
    return num / pairs;
}

Outcome oracles()
{
    std::mt19937_64 rng(2);
    std::ostringstream detail;
    bool ok = true;
    auto note = [&](const char* what, double err, double tol) {
        detail << what << ' ' << fmt("%.1e", err) << ' ';
        ok = ok && err < tol;
    };

    double e_anti = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_model<double>(4 + trial % 8, 6 + trial * 2, TopK{1}, rng);
        const auto r = antipodality_scores(m);
        for (Eigen::Index i = 0; i < m.d_sae(); ++i) {
            double best = -2;
            for (Eigen::Index j = 0; j < m.d_sae(); ++j) {
                if (j == i) continue;
                double ee = 0, en_i = 0, en_j = 0, dd = 0, dn_i = 0, dn_j = 0;
                for (Eigen::Index c = 0; c < m.d_model(); ++c) {
                    ee += m.w_enc(i, c) * m.w_enc(j, c);
                    en_i += m.w_enc(i, c) * m.w_enc(i, c);
                    en_j += m.w_enc(j, c) * m.w_enc(j, c);
                    dd += m.w_dec(c, i) * m.w_dec(c, j);
                    dn_i += m.w_dec(c, i) * m.w_dec(c, i);
                    dn_j += m.w_dec(c, j) * m.w_dec(c, j);
                }
                best = std::max(best, ee / std::sqrt(en_i * en_j) * dd / std::sqrt(dn_i * dn_j));
            }
            e_anti = std::max(e_anti, std::abs(best - r.score(i)));
        }
    }
    note("antipodality", e_anti, 1e-6);

    double e_alpha = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const MatrixXd w_u = random_matrix(8, 20 + trial * 2, rng);
        Eigen::JacobiSVD<MatrixXd> ref(w_u, Eigen::ComputeFullU);
        const MatrixXd u = ref.matrixU();
        const int k = 1 + trial % 7;
        MatrixXd p = MatrixXd::Zero(8, 8);
        for (int j = 1; j <= k; ++j) p += u.col(8 - j) * u.col(8 - j).transpose();
        const MatrixXd w = random_matrix(12, 8, rng);
        const VectorXd a = nullspace_alignment(w, left_singular_basis(w_u).trailing(k));
        for (Eigen::Index i = 0; i < 12; ++i) {
            const VectorXd wi = w.row(i).transpose();
            e_alpha = std::max(e_alpha, std::abs(a(i) - (p * wi).norm() / wi.norm()));
        }
    }
    note("alpha_k", e_alpha, 1e-6);

    double e_rho = 0;
    std::uniform_int_distribution<int> small(0, 5);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 11);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = trial % 3 ? small(rng) : normal(rng);
            b[i] = small(rng);
        }
        const auto r = spearman(a, b);
        const auto ra = pair_count_ranks(a), rb = pair_count_ranks(b);
        const bool constant = std::adjacent_find(a.begin(), a.end(), std::not_equal_to<>()) == a.end() ||
                              std::adjacent_find(b.begin(), b.end(), std::not_equal_to<>()) == b.end();
        if (constant) {
            if (!r.degenerate || r.value != 0.0) e_rho = 1.0;
            continue;
        }
        e_rho = std::max(e_rho, std::abs(r.value - oracle_pearson(ra, rb)));
    }
    note("spearman", e_rho, 1e-12);

    double e_auc = 0;
    for (std::size_t n = 2; n <= 7; ++n) {
        for (unsigned lm = 1; lm + 1 < (1u << n); ++lm) {
            std::vector<bool> labels(n);
            for (std::size_t i = 0; i < n; ++i) labels[i] = (lm >> i) & 1u;
            for (unsigned pm = 0; pm < (1u << n); ++pm) {
                std::vector<bool> pred(n);
                for (std::size_t i = 0; i < n; ++i) pred[i] = (pm >> i) & 1u;
                e_auc = std::max(e_auc, std::abs(binary_auc(labels, pred).auc - oracle_auc(labels, pred)));
            }
        }
    }
    std::bernoulli_distribution coin(0.5);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 8 + static_cast<std::size_t>(trial % 5);
        std::vector<bool> labels(n), pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = coin(rng);
            pred[i] = coin(rng);
        }
        if (std::count(labels.begin(), labels.end(), true) % static_cast<long>(n) == 0) continue;
        e_auc = std::max(e_auc, std::abs(binary_auc(labels, pred).auc - oracle_auc(labels, pred)));
    }
    note("auc", e_auc, 1e-12);

    // PCA oracle: right singular vectors of the centred data from the
    // one-sided Jacobi routine, not the covariance eigensolver.
    double e_pca = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index d = 4 + trial % 7;
        MatrixXd rows = random_matrix(60 + trial * 15, d, rng) * VectorXd::LinSpaced(d, 3.0, 0.3).asDiagonal();
        rows = rows * random_orthonormal(d, d, rng).transpose();
        const auto pcs = principal_components(rows);
        const Eigen::Index m = std::min<Eigen::Index>(3, d);
        const MatrixXd w_dec = random_matrix(d, 15, rng);
        const auto got = pca_alignment(w_dec, pcs, m);
        const MatrixXd centred = rows.rowwise() - rows.colwise().mean();
        const auto svd = jacobi_svd(centred, false);
        for (Eigen::Index i = 0; i < w_dec.cols(); ++i) {
            const VectorXd u = w_dec.col(i).normalized();
            e_pca = std::max(e_pca, std::abs(got.pc1_cos(i) - std::abs(u.dot(svd.v.col(0)))));
            e_pca = std::max(e_pca, std::abs(got.topm_fraction(i) - (svd.v.leftCols(m).transpose() * u).norm()));
        }
    }
    note("pca", e_pca, 1e-6);

    // Principal angles against subspaces built from known plane rotations.
    double e_ang = 0;
    std::uniform_real_distribution<double> angle(0.0, 90.0);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index r = 1 + trial % 4;
        const MatrixXd frame = random_orthonormal(2 * r + 2, 2 * r, rng);
        MatrixXd qa(frame.rows(), r), qb(frame.rows(), r);
        std::vector<double> expected;
        for (Eigen::Index i = 0; i < r; ++i) {
            const double th = angle(rng);
            expected.push_back(th);
            qa.col(i) = frame.col(i);
            qb.col(i) = std::cos(th * std::numbers::pi / 180) * frame.col(i) + std::sin(th * std::numbers::pi / 180) * frame.col(r + i);
        }
        std::sort(expected.begin(), expected.end());
        const MatrixXd rot = random_orthonormal(r, r, rng);
        const auto got = principal_angles(qa * rot, qb);
        const auto back = principal_angles(qb, qa * rot);
        for (std::size_t i = 0; i < expected.size(); ++i) {
            e_ang = std::max(e_ang, std::abs(got.degrees[i] - expected[i]));
            e_ang = std::max(e_ang, std::abs(back.degrees[i] - expected[i]));
        }
    }
    note("angles(deg)", e_ang, 1e-6);

    return {ok, "max errors: " + detail.str()};
}

// ---------------------------------------------------- training experiments

nlohmann::json antipodal_config()
{
    nlohmann::json gated = {{"kind", "antipodal_line"}, {"active_rate", 0.5}};
    return {{"d_model", 64},          {"n_contexts", 256}, {"context_len", 256},
            {"n_sparse_features", 256}, {"sparse_rate", 0.04}, {"planted", {gated, gated, gated}}};
}

TrainConfig desk_train()
{
    TrainConfig t;
    t.d_sae = 512;
    t.batch_size = 256;
    t.steps = 5000;
    return t;
}

struct Pair {
    Eigen::Index a, b;
    double score, axis_cos;
    int planted;
};

Outcome antipodal_emergence(const SyntheticDataset& ds)
{
    std::ostringstream detail;
    const auto topk = train(desk_train(), ds.shard, TopK{8});
    const auto anti = antipodality_scores(topk.model);
    const VectorXd dens = latent_density(topk.model, ds.shard);

    std::set<std::pair<Eigen::Index, Eigen::Index>> seen;
    std::set<int> matched;
    std::vector<Pair> pairs;
    for (Eigen::Index i = 0; i < topk.model.d_sae(); ++i) {
        const auto j = anti.partner(i);
        if (j < 0 || !(anti.score(i) > 0.9) || !(dens(i) > 0.1) || !(dens(j) > 0.1)) continue;
        if (!seen.emplace(std::min(i, j), std::max(i, j)).second) continue;
        const VectorXd axis = (topk.model.w_dec.col(i) - topk.model.w_dec.col(j)).cast<double>().normalized();
        int best = -1;
        double best_cos = 0;
        for (std::size_t p = 0; p < ds.truth.planted.size(); ++p) {
            const double c = std::abs(axis.dot(ds.truth.planted[p].direction));
            if (c > best_cos) {
                best_cos = c;
                best = static_cast<int>(p);
            }
        }
        pairs.push_back({std::min(i, j), std::max(i, j), anti.score(i), best_cos, best});
        if (best_cos > 0.9) matched.insert(best);
    }
    detail << "TopK: " << pairs.size() << " dense pairs with s>0.9, " << matched.size() << " distinct planted axes (";
    for (std::size_t p = 0; p < pairs.size(); ++p)
        detail << (p ? " " : "") << "|cos|=" << fmt("%.3f", pairs[p].axis_cos);
    detail << ")";

    const auto abs_model = train(desk_train(), ds.shard, AbsoluteTopK{8});
    const auto abs_anti = antipodality_scores(abs_model.model);
    const VectorXd abs_dens = latent_density(abs_model.model, ds.shard);
    int abs_pairs = 0;
    for (Eigen::Index i = 0; i < abs_model.model.d_sae(); ++i) abs_pairs += abs_anti.score(i) > 0.9 && abs_dens(i) > 0.1;
    detail << "; AbsoluteTopK: " << abs_pairs << " dense latents with s>0.9";
    return {matched.size() >= 3 && abs_pairs == 0, detail.str()};
}

Outcome ablation(const SyntheticDataset& ds)
{
    AblationConfig cfg;
    cfg.train = desk_train();
    cfg.k = 8;
    const auto r = run_ablation_experiment(cfg, ds.shard);
    const double base = static_cast<double>(r.dense_count(r.baseline));
    const double dense = static_cast<double>(r.dense_count(r.dense_ablated));
    const double sparse = static_cast<double>(r.dense_count(r.sparse_ablated));
    const bool ok = base > 0 && dense <= 0.2 * base && std::abs(sparse - base) <= 0.3 * base;
    return {ok, "density>0.1 latents: baseline " + fmt("%.0f", base) + ", dense-ablated " + fmt("%.0f", dense) +
                    ", sparse-ablated " + fmt("%.0f", sparse) + " (rank " + std::to_string(r.dense_rank) + ")"};
}

nlohmann::json taxonomy_config()
{
    auto ramp = [](const char* b) {
        return nlohmann::json{{"kind", "positional_ramp"}, {"boundary", b}, {"active_rate", 0.7}, {"scale", 4}};
    };
    return {{"d_model", 64},
            {"n_contexts", 256},
            {"context_len", 256},
            {"n_sparse_features", 256},
            {"sparse_rate", 0.04},
            {"newline_rate", 0.04},
            {"planted",
             {ramp("period"), ramp("newline"), ramp("bos"), {{"kind", "nullspace_mass"}, {"active_rate", 0.5}},
              {{"kind", "alphabet_centroid"}, {"letter", "T"}}, {{"kind", "pc1_dominant"}}, {{"kind", "meaningful_indicator"}}}}};
}

Outcome taxonomy()
{
    const auto ds = generate_synthetic(synthetic_config_from_json(taxonomy_config()), 0);
    const auto trained = train(desk_train(), ds.shard, TopK{16});
    const auto& model = trained.model;
    const auto profiles = build_profiles({model, ds.shard, ds.metadata, &ds.unembedding, nullptr});
    Cutoffs cut;
    cut.dense_gate = 0.1;
    const auto binding = context_binding_candidates(model, ds.shard, ds.metadata, profiles);
    const auto report = classify_all(profiles, cut, binding);

    std::set<Eigen::Index> binding_latents;
    for (const auto& c : binding) {
        binding_latents.insert(c.a);
        binding_latents.insert(c.b);
    }
    bool priority_ok = true;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const auto& l = report.labels[i];
        TaxonomyClass first = TaxonomyClass::unclassified;
        if (profiles[i].density > 0.1) {
            for (auto c : cut.priority) {
                if (passes(profiles[i], c, cut, binding_latents)) {
                    first = c;
                    break;
                }
            }
        }
        priority_ok = priority_ok && l.cls == first;
    }

    std::ostringstream detail;
    bool ok = priority_ok;
    for (const auto& p : ds.truth.planted) {
        // The planted subspace: the direction itself, or for nullspace mass
        // the block it was drawn from.
        MatrixXd span = p.direction;
        if (p.spec.kind == PlantedKind::nullspace_mass) span = ds.truth.nullspace_basis.rightCols(p.spec.subspace_dim);
        Eigen::Index best = -1;
        double best_cos = 0;
        for (Eigen::Index i = 0; i < model.d_sae(); ++i) {
            if (!(profiles[static_cast<std::size_t>(i)].density > 0.1)) continue;
            const double c = (span.transpose() * model.w_dec.col(i).cast<double>().normalized()).norm();
            if (c > best_cos) {
                best_cos = c;
                best = i;
            }
        }
        std::string tag(to_string(p.spec.kind));
        if (best < 0) {
            ok = false;
            detail << tag << ":none ";
            continue;
        }
        const auto& q = profiles[static_cast<std::size_t>(best)];
        bool good = false;
        std::string what;
        switch (p.spec.kind) {
        case PlantedKind::positional_ramp: {
            const double rho[3] = {q.rho_period, q.rho_newline, q.rho_bos};
            const int b = static_cast<int>(p.spec.boundary);
            good = std::abs(rho[b]) > 0.9;
            double off = 0;
            for (int o = 0; o < 3; ++o)
                if (o != b) off = std::max(off, std::abs(rho[o]));
            good = good && off <= 0.4;
            tag += "(" + std::string(to_string(p.spec.boundary)) + ")";
            what = "rho " + fmt("%.3f", rho[b]) + " off " + fmt("%.3f", off);
            break;
        }
        case PlantedKind::nullspace_mass:
            good = q.alpha > 0.2 && best_cos > 0.8;
            what = "alpha " + fmt("%.3f", q.alpha) + " |cos| " + fmt("%.3f", best_cos);
            break;
        case PlantedKind::alphabet_centroid:
            good = q.alphabet_metric >= 0.9 && q.alphabet_letter == std::string(1, p.spec.letter);
            what = "letter " + q.alphabet_letter + " metric " + fmt("%.2f", q.alphabet_metric);
            break;
        case PlantedKind::meaningful_indicator:
            good = q.meaningful_auc > 0.9;
            what = "auc " + fmt("%.3f", q.meaningful_auc);
            break;
        case PlantedKind::pc1_dominant:
            good = q.pc1_cos > 0.9;
            what = "pc1_cos " + fmt("%.3f", q.pc1_cos);
            break;
        case PlantedKind::antipodal_line: break;
        }
        ok = ok && good;
        detail << tag << ":" << (good ? "ok" : "MISS") << "[" << what << ", label "
               << to_string(report.labels[static_cast<std::size_t>(best)].cls) << "] ";
    }
    detail << "priority " << (priority_ok ? "consistent" : "VIOLATED");
    return {ok, detail.str()};
}

// ------------------------------------------------------------------ angles

Outcome angles()
{
    std::mt19937_64 rng(3);
    const auto s = rotation_scenario(rng);
    const auto m = layerwise_subspace_angles(s.decoders, s.densities, 0.1);
    double err = 0;
    bool sym = true;
    for (int a = 0; a < 3; ++a) {
        sym = sym && m.degrees(a, a) == 0.0;
        for (int b = 0; b < 3; ++b) {
            sym = sym && m.degrees(a, b) == m.degrees(b, a);
            err = std::max(err, std::abs(m.degrees(a, b) - analytic_median_angle(s.thetas[static_cast<std::size_t>(a)],
                                                                              s.thetas[static_cast<std::size_t>(b)])));
        }
    }
    return {err < 0.1 && sym, "max deviation " + fmt("%.2e", err) + " deg; medians " + fmt("%.3f", m.degrees(0, 1)) + "/" +
                                  fmt("%.3f", m.degrees(0, 2)) + "/" + fmt("%.3f", m.degrees(1, 2)) +
                                  (sym ? ", symmetric, zero diagonal" : ", NOT symmetric")};
}

// ------------------------------------------------------------- determinism

Outcome determinism()
{
    std::vector<std::string> broken;
    const auto dir = std::filesystem::temp_directory_path() / "dlab_acceptance_det";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir / "a");
    std::filesystem::create_directories(dir / "b");

    auto cfg = synthetic_config_from_json(taxonomy_config());
    cfg.n_contexts = 32;
    const auto a = generate_synthetic(cfg, 7);
    const auto b = generate_synthetic(cfg, 7);
    write_shard(a.shard, a.metadata, dir / "a" / "acts.dlab");
    write_shard(b.shard, b.metadata, dir / "b" / "acts.dlab");
    write_unembedding(a.unembedding, dir / "a" / "u.dlnt");
    write_unembedding(b.unembedding, dir / "b" / "u.dlnt");
    for (const char* f : {"acts.dlab", "acts.dlmeta", "u.dlnt"})
        if (slurp(dir / "a" / f) != slurp(dir / "b" / f)) broken.push_back(std::string("synth:") + f);
    if (to_json(a.truth) != to_json(b.truth)) broken.push_back("synth:truth");

    TrainConfig tc;
    tc.d_sae = 128;
    tc.batch_size = 128;
    tc.steps = 300;
    tc.seed = 5;
    const auto ta = train(tc, a.shard, TopK{8});
    const auto tb = train(tc, a.shard, TopK{8});
    write_sae(ta.model, dir / "a" / "sae.dlnt");
    write_sae(tb.model, dir / "b" / "sae.dlnt");
    if (slurp(dir / "a" / "sae.dlnt") != slurp(dir / "b" / "sae.dlnt") || ta.loss_history != tb.loss_history)
        broken.push_back("train");

    AblationConfig ac;
    ac.train = tc;
    ac.train.steps = 150;
    const auto aa = run_ablation_experiment(ac, a.shard);
    const auto ab = run_ablation_experiment(ac, a.shard);
    if (to_json(aa) != to_json(ab) || !(aa.dense_ablated.result.model == ab.dense_ablated.result.model) ||
        !(aa.sparse_ablated.result.model == ab.sparse_ablated.result.model) || aa.baseline.density != ab.baseline.density)
        broken.push_back("ablation");

    auto profile_json = [&](const SaeModelF& m) {
        const auto p = build_profiles({m, a.shard, a.metadata, &a.unembedding, nullptr});
        nlohmann::json j = nlohmann::json::array();
        for (const auto& q : p) j.push_back(to_json(q));
        Cutoffs c;
        c.dense_gate = 0.1;
        return std::make_pair(j, to_json(classify_all(p, c, context_binding_candidates(m, a.shard, a.metadata, p))));
    };
    if (profile_json(ta.model) != profile_json(tb.model)) broken.push_back("taxonomy");

    std::mt19937_64 rng_a(9), rng_b(9);
    const auto sa = rotation_scenario(rng_a), sb = rotation_scenario(rng_b);
    const auto ma = layerwise_subspace_angles(sa.decoders, sa.densities, 0.1);
    const auto mb = layerwise_subspace_angles(sb.decoders, sb.densities, 0.1);
    if (to_json(ma) != to_json(mb)) broken.push_back("angles");

    const auto pa = build_profiles({ta.model, a.shard, a.metadata, &a.unembedding, nullptr});
    ReportInputs in;
    in.ablation = &aa;
    in.profiles = &pa;
    in.taxonomy = {{"det", classify_all(pa)}};
    in.angles = &ma;
    const auto fa = emit_report(in, dir / "a" / "report");
    emit_report(in, dir / "b" / "report");
    for (const auto& f : fa)
        if (slurp(dir / "a" / "report" / f) != slurp(dir / "b" / "report" / f)) broken.push_back("report:" + f);

    std::mt19937_64 grng(4);
    const auto gm = random_model<double>(8, 16, TopK{3}, grng);
    const MatrixXd gx = random_matrix(8, 8, grng);
    const auto g1 = gradient_check(gm, gx, 1e-5, 100, 2);
    const auto g2 = gradient_check(gm, gx, 1e-5, 100, 2);
    if (g1.max_relative_error != g2.max_relative_error || g1.checked != g2.checked) broken.push_back("gradcheck");

    std::filesystem::remove_all(dir);
    std::string detail = "synth, train, ablation, profiles+taxonomy, angles, report, gradcheck";
    if (broken.empty()) return {true, detail + " bit-identical across two runs"};
    detail = "differs:";
    for (const auto& s : broken) detail += " " + s;
    return {false, detail};
}

}  // namespace

int main()
{
    Eigen::setNbThreads(1);
    criterion("gradient-correctness", 10, gradients);
    criterion("activation-contracts", 5, activations);
    criterion("oracle-equivalence", 30, oracles);

    const auto anti_data = generate_synthetic(synthetic_config_from_json(antipodal_config()), 0);
    criterion("antipodal-pair-emergence", 600, [&] { return antipodal_emergence(anti_data); });
    criterion("ablation-study", 1800, [&] { return ablation(anti_data); });
    criterion("taxonomy-recovery", 900, taxonomy);
    criterion("subspace-angle-analytics", 10, angles);
    criterion("determinism", 300, determinism);

    std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
    return failures ? 1 : 0;
}
