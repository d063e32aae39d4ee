#pragma once

// Named-tensor container shared by SAE weights and unembeddings:
//   "DLNT" | u32 version | u64 header_len | JSON header | payload
// The header lists each tensor's name, shape, dtype ("f32") and byte range
// within the payload; tensors are stored row-major, little-endian. String
// tables are u32-length-prefixed byte strings.

#include "dlab/common.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace dlab {

struct NamedTensor {
    std::string name;
    std::vector<std::int64_t> shape;
    std::vector<float> data;  // row-major
};

struct TensorFile {
    nlohmann::json meta = nlohmann::json::object();
    std::vector<NamedTensor> tensors;
    std::map<std::string, std::vector<std::string>> string_tables;

    const NamedTensor* find(const std::string& name) const;
    const NamedTensor& require_tensor(const std::string& name, std::vector<std::int64_t> shape) const;
};

inline constexpr std::uint32_t kTensorFileVersion = 1;

void write_tensor_file(const TensorFile& file, const std::filesystem::path& path);
TensorFile read_tensor_file(const std::filesystem::path& path);

NamedTensor tensor_from_matrix(std::string name, const Matrix<float>& m);
NamedTensor tensor_from_vector(std::string name, const Vector<float>& v);
Matrix<float> matrix_from_tensor(const NamedTensor& t);
Vector<float> vector_from_tensor(const NamedTensor& t);

}  // namespace dlab
