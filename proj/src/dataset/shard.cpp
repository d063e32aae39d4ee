#include "dlab/dataset/shard.hpp"

#include "../binary_io.hpp"
#include "dlab/dataset/boundaries.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>

namespace dlab {

namespace {

constexpr std::array<std::string_view, kPosCategoryCount> kPosNames = {
    "punc", "quantifier", "article", "be",   "conjunction", "num",        "do",
    "det",  "have",       "prepos",  "adj",  "modal",       "noun",       "propernoun",
    "pronoun", "qual",    "adv",     "verb", "what",        "unknown"};

constexpr std::uint32_t kDtypeF32 = 0;
constexpr std::size_t kHookBytes = 32;

struct ColumnDecl {
    const char* name;
    const char* dtype;
};

constexpr std::array<ColumnDecl, 6> kMetadataColumns = {{
    {"context_id", "i64"},
    {"position_in_context", "u32"},
    {"dist_since_period", "u32"},
    {"dist_since_newline", "u32"},
    {"pos_category", "u8"},
    {"token_text", "utf8"},  // u64 offsets (n + 1) followed by the byte blob
}};

nlohmann::json metadata_header(std::size_t n)
{
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : kMetadataColumns) cols.push_back({{"name", c.name}, {"dtype", c.dtype}});
    nlohmann::json cats = nlohmann::json::array();
    for (auto name : kPosNames) cats.push_back(std::string(name));
    return {{"n_records", n},
            {"columns", cols},
            {"pos_categories", cats},
            {"pre_boundary_convention", kPreBoundaryConvention}};
}

}  // namespace

std::string_view to_string(PosCategory c)
{
    const auto i = static_cast<std::size_t>(c);
    return i < kPosNames.size() ? kPosNames[i] : "unknown";
}

PosCategory pos_category_from_string(std::string_view name)
{
    for (std::size_t i = 0; i < kPosNames.size(); ++i)
        if (kPosNames[i] == name) return static_cast<PosCategory>(i);
    return PosCategory::unknown;
}

bool ActivationShard::operator==(const ActivationShard& other) const
{
    if (layer != other.layer || hook_point != other.hook_point) return false;
    if (values.rows() != other.values.rows() || values.cols() != other.values.cols()) return false;
    return std::memcmp(values.data(), other.values.data(), sizeof(float) * values.size()) == 0;
}

std::filesystem::path metadata_path_for(const std::filesystem::path& shard_path)
{
    auto p = shard_path;
    p.replace_extension(".dlmeta");
    return p;
}

void write_activations(const ActivationShard& shard, const std::filesystem::path& path)
{
    require(shard.n_tokens() >= 1, "shard must hold at least one token");
    require(shard.d_model() >= 1, "shard d_model must be positive");
    require(shard.hook_point.size() <= kHookBytes, "hook point name longer than 32 bytes");
    if (!shard.values.allFinite()) throw NumericError("shard contains non-finite values");

    detail::BinaryWriter w(path);
    w.bytes("DLAB", 4);
    w.put<std::uint32_t>(kShardVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(shard.d_model()));
    w.put<std::uint32_t>(kDtypeF32);
    w.put<std::uint64_t>(static_cast<std::uint64_t>(shard.n_tokens()));
    w.put<std::int32_t>(shard.layer);
    w.put<std::uint32_t>(0);  // reserved
    std::array<char, kHookBytes> hook{};
    std::copy(shard.hook_point.begin(), shard.hook_point.end(), hook.begin());
    w.bytes(hook.data(), hook.size());
    w.bytes(shard.values.data(), sizeof(float) * static_cast<std::size_t>(shard.values.size()));
    w.close();
}

ActivationShard read_activations(const std::filesystem::path& path)
{
    detail::BinaryReader r(path);
    detail::expect_magic(r, "DLAB");
    const auto version = r.get<std::uint32_t>();
    if (version != kShardVersion)
        throw VersionError("unsupported shard version " + std::to_string(version));
    const auto d_model = r.get<std::uint32_t>();
    const auto dtype = r.get<std::uint32_t>();
    const auto n_tokens = r.get<std::uint64_t>();
    ActivationShard shard;
    shard.layer = r.get<std::int32_t>();
    r.get<std::uint32_t>();
    std::array<char, kHookBytes> hook{};
    r.bytes(hook.data(), hook.size());
    shard.hook_point.assign(hook.data(), strnlen(hook.data(), hook.size()));

    if (dtype != kDtypeF32) throw FormatError("unsupported dtype code " + std::to_string(dtype));
    if (d_model == 0 || n_tokens == 0) throw FormatError("empty shard header in " + path.string());
    const std::uint64_t payload = n_tokens * d_model * sizeof(float);
    if (r.remaining() < payload) throw TruncatedError("truncated shard payload: " + path.string());
    if (r.remaining() > payload) throw FormatError("trailing bytes after shard payload: " + path.string());

    shard.values.resize(static_cast<Eigen::Index>(n_tokens), d_model);
    r.bytes(shard.values.data(), payload);
    if (!shard.values.allFinite()) throw NumericError("shard contains non-finite values: " + path.string());
    return shard;
}

void write_metadata(const std::vector<TokenMetadata>& metadata, const std::filesystem::path& path)
{
    const std::size_t n = metadata.size();
    const std::string header = metadata_header(n).dump();

    detail::BinaryWriter w(path);
    w.bytes("DLMT", 4);
    w.put<std::uint32_t>(kMetadataVersion);
    w.put<std::uint64_t>(header.size());
    w.bytes(header.data(), header.size());
    for (const auto& m : metadata) w.put<std::int64_t>(m.context_id);
    for (const auto& m : metadata) w.put<std::uint32_t>(m.position_in_context);
    for (const auto& m : metadata) w.put<std::uint32_t>(m.dist_since_period);
    for (const auto& m : metadata) w.put<std::uint32_t>(m.dist_since_newline);
    for (const auto& m : metadata) w.put<std::uint8_t>(static_cast<std::uint8_t>(m.pos_category));
    std::uint64_t offset = 0;
    w.put<std::uint64_t>(offset);
    for (const auto& m : metadata) {
        offset += m.token_text.size();
        w.put<std::uint64_t>(offset);
    }
    for (const auto& m : metadata) w.bytes(m.token_text.data(), m.token_text.size());
    w.close();
}

std::vector<TokenMetadata> read_metadata(const std::filesystem::path& path)
{
    detail::BinaryReader r(path);
    detail::expect_magic(r, "DLMT");
    const auto version = r.get<std::uint32_t>();
    if (version != kMetadataVersion)
        throw VersionError("unsupported metadata version " + std::to_string(version));
    const auto header_len = r.get<std::uint64_t>();
    if (header_len > r.remaining()) throw TruncatedError("truncated metadata header: " + path.string());
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(r.string(header_len));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad metadata header: ") + e.what());
    }
    const auto& cols = header.at("columns");
    if (cols.size() != kMetadataColumns.size()) throw FormatError("unexpected metadata column count");
    for (std::size_t i = 0; i < kMetadataColumns.size(); ++i) {
        if (cols[i].at("name") != kMetadataColumns[i].name || cols[i].at("dtype") != kMetadataColumns[i].dtype)
            throw FormatError("unexpected metadata column layout");
    }
    const auto n = header.at("n_records").get<std::uint64_t>();
    // Fixed-width part: 8 + 4 + 4 + 4 + 1 bytes per record plus n + 1 offsets.
    if (r.remaining() < n * 21 + (n + 1) * 8) throw TruncatedError("truncated metadata payload: " + path.string());

    std::vector<TokenMetadata> out(n);
    for (auto& m : out) m.context_id = r.get<std::int64_t>();
    for (auto& m : out) m.position_in_context = r.get<std::uint32_t>();
    for (auto& m : out) m.dist_since_period = r.get<std::uint32_t>();
    for (auto& m : out) m.dist_since_newline = r.get<std::uint32_t>();
    for (auto& m : out) {
        const auto code = r.get<std::uint8_t>();
        if (code >= kPosCategoryCount) throw FormatError("pos category code out of range");
        m.pos_category = static_cast<PosCategory>(code);
    }
    std::vector<std::uint64_t> offsets(n + 1);
    for (auto& o : offsets) o = r.get<std::uint64_t>();
    for (std::size_t i = 0; i < n; ++i) {
        if (offsets[i + 1] < offsets[i]) throw FormatError("token text offsets not monotone");
        out[i].token_text = r.string(offsets[i + 1] - offsets[i]);
    }
    if (r.remaining() != 0) throw FormatError("trailing bytes after metadata payload: " + path.string());
    return out;
}

void write_shard(const ActivationShard& shard, const std::vector<TokenMetadata>& metadata,
                 const std::filesystem::path& path)
{
    if (static_cast<std::size_t>(shard.n_tokens()) != metadata.size())
        throw ValidationError("shape mismatch: shard has " + std::to_string(shard.n_tokens()) +
                              " tokens but metadata has " + std::to_string(metadata.size()) + " records");
    write_activations(shard, path);
    write_metadata(metadata, metadata_path_for(path));
}

ShardWithMetadata read_shard(const std::filesystem::path& path)
{
    ShardWithMetadata out{read_activations(path), read_metadata(metadata_path_for(path))};
    if (static_cast<std::size_t>(out.shard.n_tokens()) != out.metadata.size())
        throw FormatError("shard and metadata record counts differ for " + path.string());
    return out;
}

}  // namespace dlab
