#include "dlab/geometry/unembedding.hpp"

#include "dlab/dataset/shard.hpp"
#include "dlab/tensor_file.hpp"

namespace dlab {

void Unembedding::validate() const
{
    require(w_u.rows() >= 1 && w_u.cols() >= 1, "unembedding must be nonempty");
    require(static_cast<Eigen::Index>(vocab.size()) == w_u.cols(), "vocab table length must equal the vocab dimension");
    if (!w_u.allFinite()) throw NumericError("unembedding contains non-finite values");
}

void write_unembedding(const Unembedding& u, const std::filesystem::path& path)
{
    u.validate();
    TensorFile file;
    file.meta = {{"format", "dlab-unembedding"}, {"d_model", u.d_model()}, {"vocab_size", u.vocab_size()}};
    file.tensors.push_back(tensor_from_matrix("W_U", u.w_u));
    file.string_tables["vocab"] = u.vocab;
    write_tensor_file(file, path);
}

Unembedding read_unembedding(const std::filesystem::path& path)
{
    const TensorFile file = read_tensor_file(path);
    const auto* w = file.find("W_U");
    if (!w) throw FormatError("missing tensor W_U");
    Unembedding u;
    u.w_u = matrix_from_tensor(*w);
    const auto it = file.string_tables.find("vocab");
    if (it == file.string_tables.end()) throw FormatError("missing vocab string table");
    u.vocab = it->second;
    if (static_cast<Eigen::Index>(u.vocab.size()) != u.w_u.cols())
        throw FormatError("vocab table length does not match W_U");
    u.validate();
    return u;
}

}  // namespace dlab
