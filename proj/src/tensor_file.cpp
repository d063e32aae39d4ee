#include "dlab/tensor_file.hpp"

#include "binary_io.hpp"

#include <numeric>

namespace dlab {

namespace {

std::int64_t element_count(const std::vector<std::int64_t>& shape)
{
    std::int64_t n = 1;
    for (auto d : shape) {
        if (d < 0) throw FormatError("negative tensor dimension");
        n *= d;
    }
    return n;
}

std::string shape_string(const std::vector<std::int64_t>& shape)
{
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? ", " : "") + std::to_string(shape[i]);
    return s + "]";
}

}  // namespace

const NamedTensor* TensorFile::find(const std::string& name) const
{
    for (const auto& t : tensors)
        if (t.name == name) return &t;
    return nullptr;
}

const NamedTensor& TensorFile::require_tensor(const std::string& name, std::vector<std::int64_t> shape) const
{
    const auto* t = find(name);
    if (!t) throw FormatError("missing tensor " + name);
    if (t->shape != shape)
        throw FormatError("tensor " + name + " has shape " + shape_string(t->shape) + ", expected " + shape_string(shape));
    return *t;
}

void write_tensor_file(const TensorFile& file, const std::filesystem::path& path)
{
    nlohmann::json header;
    header["meta"] = file.meta;
    header["tensors"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& t : file.tensors) {
        if (static_cast<std::int64_t>(t.data.size()) != element_count(t.shape))
            throw ValidationError("tensor " + t.name + " data does not match its shape");
        const std::uint64_t nbytes = t.data.size() * sizeof(float);
        header["tensors"].push_back({{"name", t.name}, {"shape", t.shape}, {"dtype", "f32"}, {"offset", offset}, {"nbytes", nbytes}});
        offset += nbytes;
    }
    header["string_tables"] = nlohmann::json::array();
    for (const auto& [name, strings] : file.string_tables) {
        std::uint64_t nbytes = 0;
        for (const auto& s : strings) nbytes += 4 + s.size();
        header["string_tables"].push_back({{"name", name}, {"count", strings.size()}, {"offset", offset}, {"nbytes", nbytes}});
        offset += nbytes;
    }
    const std::string text = header.dump();

    detail::BinaryWriter w(path);
    w.bytes("DLNT", 4);
    w.put<std::uint32_t>(kTensorFileVersion);
    w.put<std::uint64_t>(text.size());
    w.bytes(text.data(), text.size());
    for (const auto& t : file.tensors) w.bytes(t.data.data(), t.data.size() * sizeof(float));
    for (const auto& [name, strings] : file.string_tables) {
        for (const auto& s : strings) {
            w.put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
            w.bytes(s.data(), s.size());
        }
    }
    w.close();
}

TensorFile read_tensor_file(const std::filesystem::path& path)
{
    detail::BinaryReader r(path);
    detail::expect_magic(r, "DLNT");
    const auto version = r.get<std::uint32_t>();
    if (version != kTensorFileVersion) throw VersionError("unsupported tensor file version " + std::to_string(version));
    const auto header_len = r.get<std::uint64_t>();
    if (header_len > r.remaining()) throw TruncatedError("truncated tensor file header: " + path.string());
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(r.string(header_len));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad tensor file header: ") + e.what());
    }

    TensorFile file;
    file.meta = header.value("meta", nlohmann::json::object());
    std::uint64_t expected_offset = 0;
    for (const auto& entry : header.at("tensors")) {
        NamedTensor t;
        t.name = entry.at("name").get<std::string>();
        t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
        if (entry.at("dtype") != "f32") throw FormatError("tensor " + t.name + ": only f32 is supported");
        const auto nbytes = entry.at("nbytes").get<std::uint64_t>();
        if (entry.at("offset").get<std::uint64_t>() != expected_offset || nbytes != element_count(t.shape) * sizeof(float))
            throw FormatError("tensor " + t.name + ": inconsistent offset or size");
        t.data.resize(nbytes / sizeof(float));
        r.bytes(t.data.data(), nbytes);
        expected_offset += nbytes;
        file.tensors.push_back(std::move(t));
    }
    for (const auto& entry : header.value("string_tables", nlohmann::json::array())) {
        const auto name = entry.at("name").get<std::string>();
        const auto count = entry.at("count").get<std::uint64_t>();
        if (count > r.remaining() / 4) throw TruncatedError("truncated string table " + name);
        std::vector<std::string> strings;
        strings.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            const auto len = r.get<std::uint32_t>();
            strings.push_back(r.string(len));
        }
        file.string_tables.emplace(name, std::move(strings));
    }
    if (r.remaining() != 0) throw FormatError("trailing bytes in tensor file " + path.string());
    return file;
}

NamedTensor tensor_from_matrix(std::string name, const Matrix<float>& m)
{
    NamedTensor t{std::move(name), {m.rows(), m.cols()}, std::vector<float>(static_cast<std::size_t>(m.size()))};
    Eigen::Map<RowMatrix<float>>(t.data.data(), m.rows(), m.cols()) = m;
    return t;
}

NamedTensor tensor_from_vector(std::string name, const Vector<float>& v)
{
    return {std::move(name), {v.size()}, std::vector<float>(v.data(), v.data() + v.size())};
}

Matrix<float> matrix_from_tensor(const NamedTensor& t)
{
    if (t.shape.size() != 2) throw FormatError("tensor " + t.name + " is not 2-D");
    return Eigen::Map<const RowMatrix<float>>(t.data.data(), t.shape[0], t.shape[1]);
}

Vector<float> vector_from_tensor(const NamedTensor& t)
{
    if (t.shape.size() != 1) throw FormatError("tensor " + t.name + " is not 1-D");
    return Eigen::Map<const Vector<float>>(t.data.data(), t.shape[0]);
}

}  // namespace dlab
