#include "dlab/dataset/synthetic.hpp"

#include "dlab/dataset/boundaries.hpp"
#include "dlab/geometry/nullspace.hpp"
#include "dlab/geometry/subspace.hpp"
#include "dlab/taxonomy/rank_stats.hpp"

#include <Eigen/QR>

#include <array>
#include <cctype>
#include <cmath>
#include <random>

namespace dlab {

namespace {

constexpr std::array<std::string_view, 6> kKindNames = {"antipodal_line",    "positional_ramp", "nullspace_mass",
                                                        "alphabet_centroid", "pc1_dominant",    "meaningful_indicator"};

double default_scale(PlantedKind k)
{
    switch (k) {
    case PlantedKind::antipodal_line: return 2.0;
    case PlantedKind::positional_ramp: return 3.0;
    case PlantedKind::nullspace_mass: return 2.0;
    case PlantedKind::alphabet_centroid: return 2.0;
    case PlantedKind::pc1_dominant: return 4.0;
    case PlantedKind::meaningful_indicator: return 2.0;
    }
    return 1.0;
}

bool is_meaningful(PosCategory c)
{
    return c == PosCategory::noun || c == PosCategory::propernoun || c == PosCategory::verb || c == PosCategory::adj ||
           c == PosCategory::adv;
}

constexpr std::array<PosCategory, 5> kMeaningful = {PosCategory::noun, PosCategory::propernoun, PosCategory::verb,
                                                    PosCategory::adj, PosCategory::adv};
constexpr std::array<PosCategory, 13> kOther = {PosCategory::article, PosCategory::prepos,  PosCategory::conjunction,
                                                PosCategory::det,     PosCategory::pronoun, PosCategory::be,
                                                PosCategory::modal,   PosCategory::have,    PosCategory::do_,
                                                PosCategory::what,    PosCategory::quantifier, PosCategory::num,
                                                PosCategory::qual};

VectorXd random_unit(Eigen::Index d, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = normal(rng);
    return v.normalized();
}

// Random unit vector orthogonal to the columns of `against` (orthonormal).
VectorXd random_unit_orthogonal(const MatrixXd& against, Eigen::Index d, std::mt19937_64& rng)
{
    for (int attempt = 0; attempt < 16; ++attempt) {
        VectorXd v = random_unit(d, rng);
        for (int pass = 0; pass < 2; ++pass)
            if (against.cols() > 0) v -= against * (against.transpose() * v);
        const double n = v.norm();
        if (n > 1e-6) return v / n;
    }
    throw NumericError("could not draw a direction orthogonal to the planted span");
}

struct Vocabulary {
    std::vector<std::string> tokens;
    std::vector<char> letter;  // lowercase first letter
};

Vocabulary make_vocabulary(const SyntheticConfig& c, std::mt19937_64& rng)
{
    std::vector<char> designated;
    for (const auto& p : c.planted)
        if (p.kind == PlantedKind::alphabet_centroid) {
            const char l = static_cast<char>(std::tolower(static_cast<unsigned char>(p.letter)));
            if (std::find(designated.begin(), designated.end(), l) == designated.end()) designated.push_back(l);
        }
    std::vector<char> others;
    for (char l = 'a'; l <= 'z'; ++l)
        if (std::find(designated.begin(), designated.end(), l) == designated.end()) others.push_back(l);

    std::vector<char> letters;
    for (char l : designated)
        for (int i = 0; i < c.letter_tokens; ++i) letters.push_back(l);
    std::uniform_int_distribution<std::size_t> pick_other(0, others.size() - 1);
    while (static_cast<int>(letters.size()) < c.vocab_size) letters.push_back(others[pick_other(rng)]);
    std::shuffle(letters.begin(), letters.end(), rng);

    std::bernoulli_distribution coin(0.5);
    std::uniform_int_distribution<int> tail_len(1, 4);
    std::uniform_int_distribution<int> tail_char(0, 25);
    Vocabulary v;
    for (char l : letters) {
        std::string s = coin(rng) ? "\xE2\x96\x81" : "";  // U+2581 word-start marker
        s += coin(rng) ? static_cast<char>(std::toupper(static_cast<unsigned char>(l))) : l;
        for (int i = tail_len(rng); i > 0; --i) s += static_cast<char>('a' + tail_char(rng));
        v.tokens.push_back(std::move(s));
        v.letter.push_back(l);
    }
    return v;
}

}  // namespace

std::string_view to_string(PlantedKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

PlantedKind planted_kind_from_string(std::string_view name)
{
    for (std::size_t i = 0; i < kKindNames.size(); ++i)
        if (kKindNames[i] == name) return static_cast<PlantedKind>(i);
    throw ValidationError("unknown planted kind '" + std::string(name) + "'");
}

void SyntheticConfig::validate() const
{
    require(d_model >= 1, "d_model must be positive");
    require(n_contexts >= 1, "n_contexts must be positive");
    require(context_len >= 1, "context_len must be positive");
    require(n_sparse_features >= 0, "n_sparse_features must be >= 0");
    require(sparse_rate >= 0.0 && sparse_rate <= 1.0, "sparse_rate must lie in [0, 1]");
    require(sparse_scale >= 0.0 && noise_std >= 0.0, "scales must be non-negative");
    require(period_rate >= 0.0 && newline_rate >= 0.0 && period_rate + newline_rate < 1.0,
            "period_rate + newline_rate must lie in [0, 1)");
    require(meaningful_fraction >= 0.0 && meaningful_fraction <= 1.0, "meaningful_fraction must lie in [0, 1]");
    require(vocab_size >= 1, "vocab_size must be positive");
    require(n_nullspace_dims >= 0 && n_nullspace_dims < d_model, "n_nullspace_dims must lie in [0, d_model)");
    require(letter_tokens >= 1, "letter_tokens must be positive");

    int free_dirs = 0;
    int designated = 0;
    for (const auto& p : planted) {
        require(p.scale >= 0.0, "planted scale must be non-negative");
        if (p.kind == PlantedKind::nullspace_mass) {
            require(n_nullspace_dims >= 1, "nullspace_mass needs n_nullspace_dims >= 1");
            require(p.subspace_dim >= 1 && p.subspace_dim <= n_nullspace_dims,
                    "nullspace_mass subspace_dim must lie in [1, n_nullspace_dims]");
        } else if (p.kind == PlantedKind::alphabet_centroid) {
            require(std::isalpha(static_cast<unsigned char>(p.letter)) != 0, "alphabet_centroid letter must be A-Z");
            ++designated;
        } else {
            ++free_dirs;
        }
        require(p.sign_block >= 0, "sign_block must be >= 0");
        require(p.active_rate > 0.0 && p.active_rate <= 1.0, "active_rate must lie in (0, 1]");
    }
    require(designated * letter_tokens <= vocab_size, "vocab_size too small for the designated letter tokens");
    require(free_dirs + designated < d_model - n_nullspace_dims, "too many planted directions for d_model");
}

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j)
{
    SyntheticConfig c;
    c.d_model = j.value("d_model", c.d_model);
    c.n_contexts = j.value("n_contexts", c.n_contexts);
    c.context_len = j.value("context_len", c.context_len);
    c.layer = j.value("layer", c.layer);
    c.n_sparse_features = j.value("n_sparse_features", c.n_sparse_features);
    c.sparse_rate = j.value("sparse_rate", c.sparse_rate);
    c.sparse_scale = j.value("sparse_scale", c.sparse_scale);
    c.noise_std = j.value("noise_std", c.noise_std);
    c.period_rate = j.value("period_rate", c.period_rate);
    c.newline_rate = j.value("newline_rate", c.newline_rate);
    c.meaningful_fraction = j.value("meaningful_fraction", c.meaningful_fraction);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.n_nullspace_dims = j.value("n_nullspace_dims", c.n_nullspace_dims);
    c.letter_tokens = j.value("letter_tokens", c.letter_tokens);
    for (const auto& p : j.value("planted", nlohmann::json::array())) {
        PlantedSpec s;
        s.kind = planted_kind_from_string(p.at("kind").get<std::string>());
        s.scale = p.value("scale", 0.0);
        s.sign_block = p.value("sign_block", 0);
        if (p.contains("boundary")) s.boundary = boundary_kind_from_string(p.at("boundary").get<std::string>());
        s.subspace_dim = p.value("subspace_dim", s.subspace_dim);
        s.active_rate = p.value("active_rate", s.active_rate);
        const std::string letter = p.value("letter", std::string("T"));
        require(letter.size() == 1, "alphabet letter must be a single character");
        s.letter = letter[0];
        c.planted.push_back(s);
    }
    c.validate();
    return c;
}

namespace {

nlohmann::json to_json(const PlantedSpec& s)
{
    nlohmann::json j = {{"kind", to_string(s.kind)}, {"scale", s.scale > 0.0 ? s.scale : default_scale(s.kind)}};
    if (s.active_rate < 1.0) j["active_rate"] = s.active_rate;
    switch (s.kind) {
    case PlantedKind::antipodal_line: j["sign_block"] = s.sign_block; break;
    case PlantedKind::positional_ramp: j["boundary"] = to_string(s.boundary); break;
    case PlantedKind::nullspace_mass: j["subspace_dim"] = s.subspace_dim; break;
    case PlantedKind::alphabet_centroid: j["letter"] = std::string(1, s.letter); break;
    default: break;
    }
    return j;
}

}  // namespace

nlohmann::json to_json(const SyntheticConfig& c)
{
    nlohmann::json planted = nlohmann::json::array();
    for (const auto& p : c.planted) planted.push_back(to_json(p));
    return {{"d_model", c.d_model},
            {"n_contexts", c.n_contexts},
            {"context_len", c.context_len},
            {"layer", c.layer},
            {"n_sparse_features", c.n_sparse_features},
            {"sparse_rate", c.sparse_rate},
            {"sparse_scale", c.sparse_scale},
            {"noise_std", c.noise_std},
            {"period_rate", c.period_rate},
            {"newline_rate", c.newline_rate},
            {"meaningful_fraction", c.meaningful_fraction},
            {"vocab_size", c.vocab_size},
            {"n_nullspace_dims", c.n_nullspace_dims},
            {"letter_tokens", c.letter_tokens},
            {"planted", planted}};
}

nlohmann::json to_json(const SyntheticGroundTruth& gt)
{
    nlohmann::json planted = nlohmann::json::array();
    for (const auto& p : gt.planted) {
        auto j = to_json(p.spec);
        j["direction"] = std::vector<double>(p.direction.data(), p.direction.data() + p.direction.size());
        planted.push_back(std::move(j));
    }
    return {{"planted", planted},
            {"n_sparse_features", gt.sparse_directions.cols()},
            {"n_nullspace_dims", gt.nullspace_basis.cols()}};
}

SyntheticDataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed)
{
    config.validate();
    std::mt19937_64 rng(seed);
    const Eigen::Index d = config.d_model;
    const Eigen::Index n_null = config.n_nullspace_dims;

    SyntheticDataset out;

    // Random orthonormal frame: the first n_null columns are the block the
    // unembedding nearly annihilates.
    MatrixXd gauss(d, d);
    {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index i = 0; i < gauss.size(); ++i) gauss.data()[i] = normal(rng);
    }
    const MatrixXd frame = Eigen::HouseholderQR<MatrixXd>(gauss).householderQ();
    const MatrixXd null_block = frame.leftCols(n_null);
    const MatrixXd active_block = frame.rightCols(d - n_null);

    // Vocabulary and unembedding: tokens cluster around a per-letter
    // direction inside the active block, with a tiny null-block component.
    const Vocabulary vocab = make_vocabulary(config, rng);
    std::array<VectorXd, 26> letter_dir;
    for (auto& v : letter_dir) v = active_block * random_unit(active_block.cols(), rng);
    {
        std::normal_distribution<double> normal(0.0, 1.0);
        Matrix<float> w_u(d, config.vocab_size);
        for (int t = 0; t < config.vocab_size; ++t) {
            VectorXd noise_active(active_block.cols());
            for (Eigen::Index i = 0; i < noise_active.size(); ++i) noise_active(i) = 0.3 * normal(rng);
            VectorXd noise_null(n_null);
            for (Eigen::Index i = 0; i < n_null; ++i) noise_null(i) = 0.01 * normal(rng);
            VectorXd col = 3.0 * letter_dir[static_cast<std::size_t>(vocab.letter[static_cast<std::size_t>(t)] - 'a')] +
                           active_block * noise_active;
            if (n_null > 0) col += null_block * noise_null;
            w_u.col(t) = col.cast<float>();
        }
        out.unembedding.w_u = std::move(w_u);
        out.unembedding.vocab = vocab.tokens;
    }
    if (n_null > 0) out.truth.nullspace_basis = left_singular_basis(out.unembedding.w_u).trailing(n_null);
    else out.truth.nullspace_basis = MatrixXd(d, 0);

    // Planted directions: unembedding-derived kinds first, then free
    // directions orthogonal to those and to the null block.
    out.truth.planted.resize(config.planted.size());
    MatrixXd taken(d, 0);
    auto add_taken = [&](const VectorXd& v) {
        MatrixXd cols(d, taken.cols() + 1);
        cols << taken, v;
        taken = orthonormal_basis(cols);
    };
    for (std::size_t p = 0; p < config.planted.size(); ++p) {
        const auto& spec = config.planted[p];
        VectorXd dir;
        if (spec.kind == PlantedKind::nullspace_mass) {
            const MatrixXd sub = out.truth.nullspace_basis.rightCols(spec.subspace_dim);
            dir = (sub * random_unit(spec.subspace_dim, rng)).normalized();
        } else if (spec.kind == PlantedKind::alphabet_centroid) {
            const char l = static_cast<char>(std::tolower(static_cast<unsigned char>(spec.letter)));
            VectorXd sum = VectorXd::Zero(d);
            for (int t = 0; t < config.vocab_size; ++t)
                if (vocab.letter[static_cast<std::size_t>(t)] == l) sum += out.unembedding.w_u.col(t).cast<double>();
            dir = sum.normalized();
        } else {
            continue;
        }
        out.truth.planted[p] = {spec, dir};
        add_taken(dir);
    }
    {
        MatrixXd avoid(d, taken.cols() + n_null);
        avoid << taken, out.truth.nullspace_basis;
        avoid = orthonormal_basis(avoid);
        for (std::size_t p = 0; p < config.planted.size(); ++p) {
            const auto& spec = config.planted[p];
            if (spec.kind == PlantedKind::nullspace_mass || spec.kind == PlantedKind::alphabet_centroid) continue;
            VectorXd dir = random_unit_orthogonal(avoid, d, rng);
            out.truth.planted[p] = {spec, dir};
            add_taken(dir);
            MatrixXd grown(d, avoid.cols() + 1);
            grown << avoid, dir;
            avoid = orthonormal_basis(grown);
        }
    }

    // Sparse features live in the complement of the planted span.
    out.truth.sparse_directions.resize(d, config.n_sparse_features);
    for (int f = 0; f < config.n_sparse_features; ++f)
        out.truth.sparse_directions.col(f) = taken.cols() < d ? random_unit_orthogonal(taken, d, rng) : random_unit(d, rng);

    // Token stream and metadata.
    const std::size_t n_tokens = static_cast<std::size_t>(config.n_contexts) * static_cast<std::size_t>(config.context_len);
    std::vector<std::string> texts(n_tokens);
    std::vector<PosCategory> pos(n_tokens);
    std::vector<std::size_t> starts;
    {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::uniform_int_distribution<int> word(0, config.vocab_size - 1);
        std::uniform_int_distribution<std::size_t> pick_m(0, kMeaningful.size() - 1);
        std::uniform_int_distribution<std::size_t> pick_o(0, kOther.size() - 1);
        for (std::size_t t = 0; t < n_tokens; ++t) {
            if (t % static_cast<std::size_t>(config.context_len) == 0) starts.push_back(t);
            const double u = unif(rng);
            if (u < config.period_rate) {
                texts[t] = ".";
                pos[t] = PosCategory::punc;
            } else if (u < config.period_rate + config.newline_rate) {
                texts[t] = "\n";
                pos[t] = PosCategory::unknown;
            } else {
                texts[t] = vocab.tokens[static_cast<std::size_t>(word(rng))];
                pos[t] = unif(rng) < config.meaningful_fraction ? kMeaningful[pick_m(rng)] : kOther[pick_o(rng)];
            }
        }
    }
    const auto dist = compute_boundary_distances(texts, starts);
    out.metadata.resize(n_tokens);
    for (std::size_t t = 0; t < n_tokens; ++t) {
        auto& m = out.metadata[t];
        m.context_id = dist.context_id[t];
        m.position_in_context = dist.position_in_context[t];
        m.dist_since_period = dist.dist_since_period[t];
        m.dist_since_newline = dist.dist_since_newline[t];
        m.pos_category = pos[t];
        m.token_text = std::move(texts[t]);
    }

    // Activations.
    const auto n = static_cast<Eigen::Index>(n_tokens);
    RowMatrix<double> x = RowMatrix<double>::Zero(n, d);
    if (config.sparse_rate > 0.0 && config.n_sparse_features > 0) {
        std::exponential_distribution<double> magnitude(1.0);
        std::geometric_distribution<std::int64_t> gap(std::min(config.sparse_rate, 1.0));
        for (int f = 0; f < config.n_sparse_features; ++f) {
            const VectorXd dir = out.truth.sparse_directions.col(f) * config.sparse_scale;
            for (std::int64_t t = gap(rng); t < n; t += 1 + gap(rng)) x.row(t) += magnitude(rng) * dir.transpose();
        }
    }
    for (const auto& planted : out.truth.planted) {
        const auto& spec = planted.spec;
        const double scale = spec.scale > 0.0 ? spec.scale : default_scale(spec.kind);
        VectorXd coeff(n);
        switch (spec.kind) {
        case PlantedKind::antipodal_line:
        case PlantedKind::nullspace_mass: {
            if (spec.kind == PlantedKind::antipodal_line && spec.sign_block > 0) {
                std::uniform_real_distribution<double> mag(0.25 * scale, scale);
                std::bernoulli_distribution flip(0.5);
                double context_sign = 1.0;
                for (Eigen::Index t = 0; t < n; ++t) {
                    const auto& m = out.metadata[static_cast<std::size_t>(t)];
                    if (m.position_in_context == 0) context_sign = flip(rng) ? 1.0 : -1.0;
                    const bool odd_block = (m.position_in_context / static_cast<std::uint32_t>(spec.sign_block)) % 2 == 1;
                    coeff(t) = context_sign * (odd_block ? -1.0 : 1.0) * mag(rng);
                }
            } else {
                std::uniform_real_distribution<double> u(-scale, scale);
                std::bernoulli_distribution on(spec.active_rate);
                for (Eigen::Index t = 0; t < n; ++t) {
                    const bool active = spec.active_rate >= 1.0 || on(rng);
                    coeff(t) = active ? u(rng) : 0.0;
                }
            }
            break;
        }
        case PlantedKind::positional_ramp: {
            // Mid-rank CDF of the distance. With active_rate 1 the ramp is
            // centred and spans [-scale, scale]; otherwise it is zero up to
            // the (1 - rate) quantile and rises linearly to scale.
            std::vector<double> dist_values(n_tokens);
            for (std::size_t t = 0; t < n_tokens; ++t) dist_values[t] = boundary_distance(out.metadata[t], spec.boundary);
            const auto ranks = average_ranks(dist_values);
            for (Eigen::Index t = 0; t < n; ++t) {
                const double cdf = (ranks[static_cast<std::size_t>(t)] - 0.5) / static_cast<double>(n);
                if (spec.active_rate >= 1.0) {
                    coeff(t) = scale * (2.0 * cdf - 1.0);
                } else {
                    const double q = 1.0 - spec.active_rate;
                    coeff(t) = scale * std::max(0.0, cdf - q) / spec.active_rate;
                }
            }
            break;
        }
        case PlantedKind::alphabet_centroid: {
            std::uniform_real_distribution<double> u(0.0, scale);
            for (Eigen::Index t = 0; t < n; ++t) coeff(t) = u(rng);
            break;
        }
        case PlantedKind::pc1_dominant: {
            std::normal_distribution<double> g(0.0, scale);
            for (Eigen::Index t = 0; t < n; ++t) coeff(t) = g(rng);
            break;
        }
        case PlantedKind::meaningful_indicator:
            for (Eigen::Index t = 0; t < n; ++t)
                coeff(t) = is_meaningful(out.metadata[static_cast<std::size_t>(t)].pos_category) ? scale : 0.0;
            break;
        }
        x.noalias() += coeff * planted.direction.transpose();
    }
    if (config.noise_std > 0.0) {
        std::normal_distribution<double> noise(0.0, config.noise_std);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] += noise(rng);
    }

    out.shard.layer = config.layer;
    out.shard.hook_point = "synthetic";
    out.shard.values = x.cast<float>();
    return out;
}

}  // namespace dlab
