#include "dlab/dataset/boundaries.hpp"

#include "dlab/common.hpp"

#include <array>

namespace dlab {

namespace {
constexpr std::array<std::string_view, 3> kBoundaryNames = {"period", "newline", "bos"};
}

std::string_view to_string(BoundaryKind b) { return kBoundaryNames[static_cast<std::size_t>(b)]; }

BoundaryKind boundary_kind_from_string(std::string_view name)
{
    for (std::size_t i = 0; i < kBoundaryNames.size(); ++i)
        if (kBoundaryNames[i] == name) return static_cast<BoundaryKind>(i);
    throw ValidationError("unknown boundary '" + std::string(name) + "'");
}

std::uint32_t boundary_distance(const TokenMetadata& m, BoundaryKind boundary)
{
    switch (boundary) {
    case BoundaryKind::period: return m.dist_since_period;
    case BoundaryKind::newline: return m.dist_since_newline;
    case BoundaryKind::bos: return m.position_in_context;
    }
    return 0;
}

bool is_period_boundary(const std::string& token_text)
{
    return token_text.find('.') != std::string::npos;
}

bool is_newline_boundary(const std::string& token_text)
{
    return token_text.find('\n') != std::string::npos;
}

BoundaryDistances compute_boundary_distances(const std::vector<std::string>& token_texts,
                                             const std::vector<std::size_t>& context_starts)
{
    const std::size_t n = token_texts.size();
    for (std::size_t i = 0; i < context_starts.size(); ++i) {
        require(context_starts[i] < n || (n == 0 && context_starts[i] == 0),
                "context boundary out of range");
        require(i == 0 || context_starts[i] > context_starts[i - 1],
                "context boundaries must be strictly increasing");
    }

    BoundaryDistances out;
    out.context_id.resize(n);
    out.position_in_context.resize(n);
    out.dist_since_period.resize(n);
    out.dist_since_newline.resize(n);

    std::size_t next_start = 0;
    std::int64_t context = -1;
    std::uint32_t position = 0;
    std::uint32_t period = 0;
    std::uint32_t newline = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const bool starts = t == 0 || (next_start < context_starts.size() && context_starts[next_start] == t);
        if (starts) {
            if (next_start < context_starts.size() && context_starts[next_start] == t) ++next_start;
            ++context;
            position = 0;
            period = 1;  // virtual BOS one slot back
            newline = 1;
        } else {
            ++position;
            ++period;
            ++newline;
        }
        if (is_period_boundary(token_texts[t])) period = 0;
        if (is_newline_boundary(token_texts[t])) newline = 0;

        out.context_id[t] = context;
        out.position_in_context[t] = position;
        out.dist_since_period[t] = period;
        out.dist_since_newline[t] = newline;
    }
    return out;
}

}  // namespace dlab
