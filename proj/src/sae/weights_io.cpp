#include "dlab/sae/weights_io.hpp"

#include "dlab/dataset/shard.hpp"
#include "dlab/tensor_file.hpp"

namespace dlab {

void write_sae(const SaeModelF& model, const std::filesystem::path& path)
{
    model.validate();
    TensorFile file;
    file.meta = {{"format", "dlab-sae"},
                 {"variant", activation_name(model.activation)},
                 {"d_model", model.d_model()},
                 {"d_sae", model.d_sae()}};
    if (const auto* t = std::get_if<TopK>(&model.activation)) file.meta["k"] = t->k;
    if (const auto* a = std::get_if<AbsoluteTopK>(&model.activation)) file.meta["k"] = a->k;
    file.tensors.push_back(tensor_from_matrix("W_enc", model.w_enc));
    file.tensors.push_back(tensor_from_vector("b_enc", model.b_enc));
    file.tensors.push_back(tensor_from_matrix("W_dec", model.w_dec));
    file.tensors.push_back(tensor_from_vector("b_dec", model.b_dec));
    if (const auto* j = std::get_if<JumpReLU<float>>(&model.activation))
        file.tensors.push_back(tensor_from_vector("theta", j->theta));
    write_tensor_file(file, path);
}

SaeModelF read_sae(const std::filesystem::path& path)
{
    const TensorFile file = read_tensor_file(path);
    const auto* w_dec = file.find("W_dec");
    if (!w_dec) throw FormatError("missing tensor W_dec");
    if (w_dec->shape.size() != 2) throw FormatError("W_dec must be 2-D");
    const std::int64_t d_model = w_dec->shape[0];
    const std::int64_t d_sae = w_dec->shape[1];

    SaeModelF m;
    m.w_enc = matrix_from_tensor(file.require_tensor("W_enc", {d_sae, d_model}));
    m.b_enc = vector_from_tensor(file.require_tensor("b_enc", {d_sae}));
    m.w_dec = matrix_from_tensor(*w_dec);
    m.b_dec = vector_from_tensor(file.require_tensor("b_dec", {d_model}));

    const std::string variant = file.meta.value("variant", "");
    if (variant == "topk") {
        m.activation = TopK{file.meta.at("k").get<int>()};
    } else if (variant == "abs_topk") {
        m.activation = AbsoluteTopK{file.meta.at("k").get<int>()};
    } else if (variant == "jumprelu") {
        m.activation = JumpReLU<float>{vector_from_tensor(file.require_tensor("theta", {d_sae}))};
    } else {
        throw FormatError("unknown SAE variant '" + variant + "'");
    }
    m.validate();
    return m;
}

}  // namespace dlab
