#pragma once

#include "dlab/common.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace dlab {

// W_U maps residual states to vocabulary logits; column t is the
// unembedding vector of vocab[t].
struct Unembedding {
    Matrix<float> w_u;  // d_model x vocab
    std::vector<std::string> vocab;

    Eigen::Index d_model() const { return w_u.rows(); }
    Eigen::Index vocab_size() const { return w_u.cols(); }

    void validate() const;
};

void write_unembedding(const Unembedding& u, const std::filesystem::path& path);
Unembedding read_unembedding(const std::filesystem::path& path);

}  // namespace dlab
