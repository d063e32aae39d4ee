#pragma once

#include "dlab/geometry/unembedding.hpp"
#include "dlab/sae/model.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace dlab {

// First character of a token after stripping leading space markers
// (' ', '_', U+2581, U+0120), ASCII letters lower-cased. Returned as the
// UTF-8 bytes of that code point; empty when nothing is left.
std::string first_character_key(std::string_view token);

enum class AlphabetSide { promote, suppress };

std::string_view to_string(AlphabetSide side);

struct AlphabetScore {
    std::string letter;  // plurality first character, upper-cased if ASCII
    double metric = 0.0; // plurality fraction of the better side
    AlphabetSide side = AlphabetSide::promote;
    bool degenerate = false;  // zero decoder column
};

inline constexpr double kAlphabetCutoff = 0.9;

// For each decoder column d, logits W_U^T d; the top_n and bottom_n tokens
// are bucketed by first character and the larger plurality fraction wins.
// Ties between sides favour promote.
std::vector<AlphabetScore> alphabet_scores(const MatrixXd& w_dec, const Unembedding& u, int top_n = 100);

template <typename Scalar>
std::vector<AlphabetScore> alphabet_scores(const SaeModel<Scalar>& model, const Unembedding& u, int top_n = 100)
{
    return alphabet_scores(model.w_dec.template cast<double>(), u, top_n);
}

}  // namespace dlab
