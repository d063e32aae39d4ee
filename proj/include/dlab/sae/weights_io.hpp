#pragma once

#include "dlab/sae/model.hpp"

#include <filesystem>

namespace dlab {

// Tensors "W_enc" [d_sae, d_model], "b_enc" [d_sae], "W_dec" [d_model, d_sae],
// "b_dec" [d_model] and, for JumpReLU, "theta" [d_sae]. The header's meta
// carries {"variant": "topk" | "abs_topk" | "jumprelu", "k": int}.
void write_sae(const SaeModelF& model, const std::filesystem::path& path);
SaeModelF read_sae(const std::filesystem::path& path);

}  // namespace dlab
