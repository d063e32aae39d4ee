#include "dlab/taxonomy/alphabet.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>

namespace dlab {

namespace {

constexpr std::string_view kSentencePieceSpace = "\xE2\x96\x81";  // U+2581
constexpr std::string_view kByteLevelSpace = "\xC4\xA0";          // U+0120

std::size_t utf8_length(unsigned char lead)
{
    if (lead < 0x80) return 1;
    if ((lead >> 5) == 0x6) return 2;
    if ((lead >> 4) == 0xE) return 3;
    if ((lead >> 3) == 0x1E) return 4;
    return 1;  // stray continuation byte, treat as its own character
}

std::pair<std::string, double> plurality(const std::vector<Eigen::Index>& tokens, const std::vector<std::string>& keys)
{
    std::map<std::string, int> counts;
    for (auto t : tokens) {
        const auto& k = keys[static_cast<std::size_t>(t)];
        if (!k.empty()) ++counts[k];
    }
    std::string best;
    int best_count = 0;
    for (const auto& [k, c] : counts) {  // ordered map: ties go to the smaller key
        if (c > best_count) {
            best = k;
            best_count = c;
        }
    }
    return {best, tokens.empty() ? 0.0 : static_cast<double>(best_count) / static_cast<double>(tokens.size())};
}

}  // namespace

std::string first_character_key(std::string_view token)
{
    for (;;) {
        if (token.starts_with(' ') || token.starts_with('_')) {
            token.remove_prefix(1);
        } else if (token.starts_with(kSentencePieceSpace)) {
            token.remove_prefix(kSentencePieceSpace.size());
        } else if (token.starts_with(kByteLevelSpace)) {
            token.remove_prefix(kByteLevelSpace.size());
        } else {
            break;
        }
    }
    if (token.empty()) return {};
    const auto lead = static_cast<unsigned char>(token.front());
    if (lead < 0x80) return std::string(1, static_cast<char>(std::tolower(lead)));
    return std::string(token.substr(0, std::min(utf8_length(lead), token.size())));
}

std::string_view to_string(AlphabetSide side) { return side == AlphabetSide::promote ? "promote" : "suppress"; }

std::vector<AlphabetScore> alphabet_scores(const MatrixXd& w_dec, const Unembedding& u, int top_n)
{
    u.validate();
    require(w_dec.rows() == u.d_model(), "alphabet scores: decoder height must equal unembedding d_model");
    require(top_n >= 1 && top_n <= u.vocab_size(), "alphabet scores: vocab must hold at least top_n tokens");

    std::vector<std::string> keys;
    keys.reserve(u.vocab.size());
    for (const auto& t : u.vocab) keys.push_back(first_character_key(t));

    const MatrixXd w_u = u.w_u.cast<double>();
    const Eigen::Index vocab = u.vocab_size();
    const auto n = static_cast<std::size_t>(top_n);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(vocab));
    std::vector<Eigen::Index> top, bottom;

    std::vector<AlphabetScore> out(static_cast<std::size_t>(w_dec.cols()));
    for (Eigen::Index i = 0; i < w_dec.cols(); ++i) {
        auto& score = out[static_cast<std::size_t>(i)];
        if (w_dec.col(i).norm() == 0.0) {
            score.degenerate = true;
            continue;
        }
        const VectorXd logits = w_u.transpose() * w_dec.col(i);

        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                          [&](Eigen::Index a, Eigen::Index b) { return logits(a) > logits(b) || (logits(a) == logits(b) && a < b); });
        top.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));

        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                          [&](Eigen::Index a, Eigen::Index b) { return logits(a) < logits(b) || (logits(a) == logits(b) && a < b); });
        bottom.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));

        auto [top_key, top_frac] = plurality(top, keys);
        auto [bottom_key, bottom_frac] = plurality(bottom, keys);
        if (bottom_frac > top_frac) {
            score.letter = std::move(bottom_key);
            score.metric = bottom_frac;
            score.side = AlphabetSide::suppress;
        } else {
            score.letter = std::move(top_key);
            score.metric = top_frac;
            score.side = AlphabetSide::promote;
        }
        if (score.letter.size() == 1) score.letter[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(score.letter[0])));
    }
    return out;
}

}  // namespace dlab
