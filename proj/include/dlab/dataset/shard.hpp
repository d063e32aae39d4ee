#pragma once

#include "dlab/common.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dlab {

// High-level part-of-speech categories. The numeric codes are stored in
// .dlmeta files and must stay stable.
enum class PosCategory : std::uint8_t {
    punc = 0,
    quantifier,
    article,
    be,
    conjunction,
    num,
    do_,
    det,
    have,
    prepos,
    adj,
    modal,
    noun,
    propernoun,
    pronoun,
    qual,
    adv,
    verb,
    what,
    unknown,
};

inline constexpr int kPosCategoryCount = 20;

std::string_view to_string(PosCategory c);
PosCategory pos_category_from_string(std::string_view name);  // unknown names -> unknown

// Residual-stream activations, one row per token.
struct ActivationShard {
    std::int32_t layer = 0;
    std::string hook_point;  // at most 32 bytes on disk
    RowMatrix<float> values;

    Eigen::Index n_tokens() const { return values.rows(); }
    Eigen::Index d_model() const { return values.cols(); }

    bool operator==(const ActivationShard& other) const;
};

struct TokenMetadata {
    std::int64_t context_id = 0;
    std::uint32_t position_in_context = 0;
    std::uint32_t dist_since_period = 0;
    std::uint32_t dist_since_newline = 0;
    PosCategory pos_category = PosCategory::unknown;
    std::string token_text;

    bool operator==(const TokenMetadata&) const = default;
};

struct ShardWithMetadata {
    ActivationShard shard;
    std::vector<TokenMetadata> metadata;
};

class FormatError : public IoError {
public:
    using IoError::IoError;
};
class BadMagicError : public FormatError {
public:
    using FormatError::FormatError;
};
class TruncatedError : public FormatError {
public:
    using FormatError::FormatError;
};
class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

inline constexpr std::uint32_t kShardVersion = 1;
inline constexpr std::uint32_t kMetadataVersion = 1;

// Sibling metadata path: "acts.dlab" -> "acts.dlmeta".
std::filesystem::path metadata_path_for(const std::filesystem::path& shard_path);

// Writes the .dlab shard and its .dlmeta sibling.
void write_shard(const ActivationShard& shard, const std::vector<TokenMetadata>& metadata,
                 const std::filesystem::path& path);
ShardWithMetadata read_shard(const std::filesystem::path& path);

// Single-file variants; write_shard/read_shard are built on these.
void write_activations(const ActivationShard& shard, const std::filesystem::path& path);
ActivationShard read_activations(const std::filesystem::path& path);
void write_metadata(const std::vector<TokenMetadata>& metadata, const std::filesystem::path& path);
std::vector<TokenMetadata> read_metadata(const std::filesystem::path& path);

}  // namespace dlab
