#pragma once

#include "dlab/dataset/shard.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dlab {

// Boundary counters per token. Tokens before the first period/newline of a
// context count from a virtual BOS sitting one slot before position 0, so
// their distance is position_in_context + 1.
struct BoundaryDistances {
    std::vector<std::int64_t> context_id;
    std::vector<std::uint32_t> position_in_context;
    std::vector<std::uint32_t> dist_since_period;
    std::vector<std::uint32_t> dist_since_newline;
};

enum class BoundaryKind { period, newline, bos };

std::string_view to_string(BoundaryKind b);
BoundaryKind boundary_kind_from_string(std::string_view name);

// period -> dist_since_period, newline -> dist_since_newline,
// bos -> position_in_context.
std::uint32_t boundary_distance(const TokenMetadata& m, BoundaryKind boundary);

inline constexpr const char* kPreBoundaryConvention = "bos_at_minus_one";

bool is_period_boundary(const std::string& token_text);
bool is_newline_boundary(const std::string& token_text);

// context_starts: sorted token indices where a new context begins. Index 0
// is always a context start, whether or not it is listed.
BoundaryDistances compute_boundary_distances(const std::vector<std::string>& token_texts,
                                             const std::vector<std::size_t>& context_starts);

}  // namespace dlab
