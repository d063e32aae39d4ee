#include "helpers.hpp"

#include "dlab/dataset/synthetic.hpp"
#include "dlab/experiments/ablation.hpp"
#include "dlab/experiments/layerwise.hpp"
#include "dlab/experiments/report.hpp"

#include <doctest.h>

using namespace dlab;
using namespace dlab::test;

TEST_CASE("density histogram bins")
{
    VectorXd d(7);
    d << 0.0, 1e-6, 1e-5, 0.001, 0.5, 1.0, 0.0;
    const auto h = density_histogram(d);
    CHECK(h.edges.size() == 61);
    CHECK(h.edges.front() == 1e-5);
    CHECK(h.edges.back() == 1.0);
    for (std::size_t i = 1; i < h.edges.size(); ++i) CHECK(h.edges[i] > h.edges[i - 1]);
    CHECK(h.zero == 2);
    CHECK(h.underflow == 1);
    CHECK(h.counts.front() == 1);
    CHECK(h.counts.back() == 1);
    std::size_t total = h.zero + h.underflow;
    for (auto c : h.counts) total += c;
    CHECK(total == 7);

    VectorXd bad(1);
    bad << 1.5;
    CHECK_THROWS_AS(density_histogram(bad), ValidationError);
}

TEST_CASE("layer-wise density fractions: worked examples")
{
    const std::vector<double> th = {0.05, 0.1, 0.2, 0.3};
    VectorXd a(2);
    a << 0.06, 0.25;
    const MatrixXd f = layerwise_density_fractions({VectorXd::Zero(5), a}, th);
    CHECK(f.row(0).isZero());
    CHECK(f(1, 0) == 1.0);
    CHECK(f(1, 1) == 0.5);
    CHECK(f(1, 2) == 0.5);
    CHECK(f(1, 3) == 0.0);
    CHECK_THROWS_AS(layerwise_density_fractions({a}, {0.2, 0.1}), ValidationError);
}

TEST_CASE("layer-wise density fractions match counting and are monotone")
{
    std::mt19937_64 rng(81);
    std::uniform_real_distribution<double> u(0.0, 0.5);
    std::vector<VectorXd> layers;
    for (int l = 0; l < 4; ++l) {
        VectorXd d(100);
        for (Eigen::Index i = 0; i < 100; ++i) d(i) = u(rng);
        layers.push_back(d);
    }
    const std::vector<double> th = {0.01, 0.05, 0.1, 0.2, 0.3, 0.45};
    const MatrixXd f = layerwise_density_fractions(layers, th);
    for (int l = 0; l < 4; ++l) {
        for (std::size_t t = 0; t < th.size(); ++t) {
            int c = 0;
            for (Eigen::Index i = 0; i < 100; ++i) c += layers[static_cast<std::size_t>(l)](i) > th[t];
            CHECK(f(l, static_cast<Eigen::Index>(t)) == c / 100.0);
            if (t > 0) CHECK(f(l, static_cast<Eigen::Index>(t)) <= f(l, static_cast<Eigen::Index>(t - 1)));
        }
    }
}

TEST_CASE("subspace angles: duplicates, orthogonal lines, constructed rotations")
{
    std::mt19937_64 rng(82);
    const MatrixXd dec = random_matrix(8, 10, rng);
    VectorXd dens = VectorXd::Constant(10, 0.01);
    dens.head(3).setConstant(0.4);
    const auto dup = layerwise_subspace_angles({dec, dec, dec}, {dens, dens, dens}, 0.1);
    CHECK(dup.degrees.cwiseAbs().maxCoeff() < 1e-6);

    MatrixXd d1 = random_matrix(4, 3, rng), d2 = random_matrix(4, 3, rng);
    d1.col(0) = VectorXd::Unit(4, 0);
    d2.col(0) = VectorXd::Unit(4, 3);
    VectorXd one = VectorXd::Zero(3);
    one(0) = 0.5;
    const auto orth = layerwise_subspace_angles({d1, d2}, {one, one}, 0.1);
    CHECK(orth.degrees(0, 1) == doctest::Approx(90.0));

    const auto s = rotation_scenario(rng);
    const auto m = layerwise_subspace_angles(s.decoders, s.densities, 0.1);
    for (int a = 0; a < 3; ++a) {
        CHECK(m.ranks[static_cast<std::size_t>(a)] == 3);
        CHECK(m.degrees(a, a) == 0.0);
        for (int b = 0; b < 3; ++b) {
            CHECK(m.degrees(a, b) == m.degrees(b, a));
            CHECK(std::abs(m.degrees(a, b) - analytic_median_angle(s.thetas[static_cast<std::size_t>(a)],
                                                                  s.thetas[static_cast<std::size_t>(b)])) < 0.1);
        }
    }
}

TEST_CASE("subspace angles mark layers without dense latents")
{
    std::mt19937_64 rng(83);
    const MatrixXd dec = random_matrix(8, 10, rng);
    VectorXd dense = VectorXd::Constant(10, 0.3);
    const auto m = layerwise_subspace_angles({dec, dec}, {dense, VectorXd::Zero(10)}, 0.1);
    CHECK(m.present == std::vector<bool>{true, false});
    CHECK(m.ranks[1] == 0);
    CHECK(m.degrees(0, 0) == 0.0);
    CHECK(std::isnan(m.degrees(0, 1)));
    CHECK(std::isnan(m.degrees(1, 1)));
    CHECK(to_json(m)["degrees"][0][1].is_null());
}

namespace {

ActivationShard noise_shard()
{
    SyntheticConfig c;
    c.d_model = 8;
    c.n_contexts = 8;
    c.context_len = 64;
    c.n_sparse_features = 32;
    c.sparse_rate = 0.02;
    c.vocab_size = 64;
    c.n_nullspace_dims = 2;
    c.letter_tokens = 20;
    return generate_synthetic(c, 4).shard;
}

AblationConfig tiny_ablation()
{
    AblationConfig c;
    c.train.d_sae = 32;
    c.train.batch_size = 32;
    c.train.steps = 200;
    c.train.seed = 3;
    c.k = 2;
    return c;
}

}  // namespace

TEST_CASE("ablation study structure and determinism")
{
    const auto data = noise_shard();
    const auto cfg = tiny_ablation();
    const auto r = run_ablation_experiment(cfg, data);
    CHECK(r.baseline.name == "baseline");
    CHECK(r.dense_ablated.name == "dense_ablated");
    CHECK(r.sparse_ablated.name == "sparse_ablated");
    CHECK(r.arm_config == to_json(cfg));
    for (const auto* arm : {&r.baseline, &r.dense_ablated, &r.sparse_ablated}) {
        CHECK(arm->result.loss_history.size() == 200);
        CHECK((arm->density.array() >= 0).all());
        CHECK((arm->density.array() <= 1).all());
        for (std::size_t t = 0; t < kDensityThresholds.size(); ++t) CHECK(arm->above[t] == count_above(arm->density, kDensityThresholds[t]));
    }
    for (auto i : r.dense_latents) CHECK(r.baseline.density(i) > cfg.dense_threshold);
    for (auto i : r.sparse_latents) CHECK(r.baseline.density(i) <= cfg.dense_threshold);
    CHECK(r.dense_count(r.baseline) == r.dense_latents.size());
    if (!r.degenerate) CHECK(r.sparse_rank == r.dense_rank);

    const auto again = run_ablation_experiment(cfg, data);
    CHECK(to_json(again) == to_json(r));
    CHECK(again.baseline.result.model == r.baseline.result.model);
    CHECK(again.dense_ablated.result.model == r.dense_ablated.result.model);
    CHECK(again.sparse_ablated.result.model == r.sparse_ablated.result.model);
}

TEST_CASE("ablation study with no dense latents is degenerate")
{
    std::mt19937_64 rng(84);
    ActivationShard data;
    data.values = RowMatrix<float>::Zero(64, 8);
    auto cfg = tiny_ablation();
    cfg.train.steps = 20;
    const auto r = run_ablation_experiment(cfg, data);
    CHECK(r.degenerate);
    CHECK(r.dense_latents.empty());
    CHECK(r.dense_count(r.baseline) == 0);
    CHECK(r.dense_count(r.dense_ablated) == 0);
    CHECK(r.dense_count(r.sparse_ablated) == 0);
}

TEST_CASE("ablation config JSON round-trip")
{
    auto c = tiny_ablation();
    c.dense_threshold = 0.2;
    CHECK(to_json(ablation_config_from_json(to_json(c))) == to_json(c));
    c.k = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("number formatting")
{
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(std::nan("")) == "nan");
    const double x = 0.123456789012345678;
    CHECK(std::stod(format_number(x)) == x);
}

TEST_CASE("empty report writes header-only CSVs")
{
    const auto dir = scratch_dir("report_empty");
    const auto files = emit_report({}, dir);
    int csvs = 0;
    for (const auto& f : files) {
        CHECK(std::filesystem::exists(dir / f));
        if (f.ends_with(".csv")) {
            ++csvs;
            const auto text = slurp(dir / f);
            CHECK(std::count(text.begin(), text.end(), '\n') == 1);
        }
    }
    CHECK(csvs == 9);
}

TEST_CASE("report with results is byte-deterministic and declares bin edges")
{
    const auto data = noise_shard();
    const auto ab = run_ablation_experiment(tiny_ablation(), data);
    std::vector<LatentProfile> profiles(3);
    for (int i = 0; i < 3; ++i) {
        profiles[static_cast<std::size_t>(i)].latent = i;
        profiles[static_cast<std::size_t>(i)].density = 0.1 * i;
        profiles[static_cast<std::size_t>(i)].rho_bos = 0.5 * i;
    }
    profiles[2].alphabet_letter = ",";
    const auto tax = classify_all(profiles);
    std::mt19937_64 rng(85);
    const auto sc = rotation_scenario(rng);
    const auto angles = layerwise_subspace_angles(sc.decoders, sc.densities, 0.1);
    DensityFractionTable fr{{"0", "1", "2"}, {0.1, 0.2}, layerwise_density_fractions(sc.densities, {0.1, 0.2})};

    ReportInputs in;
    in.ablation = &ab;
    in.profiles = &profiles;
    in.taxonomy = {{"synthetic", tax}};
    in.angles = &angles;
    in.angle_layers = {"L0", "L1", "L2"};
    in.fractions = &fr;

    const auto a = scratch_dir("report_a");
    const auto b = scratch_dir("report_b");
    const auto fa = emit_report(in, a);
    const auto fb = emit_report(in, b);
    REQUIRE(fa == fb);
    for (const auto& f : fa) CHECK(slurp(a / f) == slurp(b / f));

    const auto svg = slurp(a / "density_histogram.svg");
    CHECK(svg.find("data-edges=\"") != std::string::npos);
    for (const char* arm : {"baseline", "dense_ablated", "sparse_ablated"})
        CHECK(svg.find(std::string("id=\"series-") + arm + "\"") != std::string::npos);

    const auto hist = slurp(a / "ablation_histogram.csv");
    CHECK(std::count(hist.begin(), hist.end(), '\n') == 1 + 3 * 62);
    const auto prof = slurp(a / "profiles.csv");
    CHECK(prof.find("\",\"") != std::string::npos);
    const auto ang = slurp(a / "angles.csv");
    CHECK(std::count(ang.begin(), ang.end(), '\n') == 1 + 9);
}
