#pragma once

#include "dlab/dataset/shard.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <set>
#include <string>

namespace dlab {

// Corpus POS tag -> high-level category, plus the category groupings used
// for the meaningful-word and function-word predictors.
struct PosCategoryMap {
    std::string version;
    std::map<std::string, PosCategory> tags;
    std::set<PosCategory> meaningful;
    std::set<PosCategory> function_words;

    // Exact tag first, then with a "-XX" suffix or trailing '*' removed
    // (Brown title/headline/negation variants); otherwise unknown.
    PosCategory category_of(const std::string& tag) const;
    bool is_meaningful(PosCategory c) const { return meaningful.count(c) != 0; }
    bool is_function_word(PosCategory c) const { return function_words.count(c) != 0; }
};

// Brown-corpus tag table shipped with the toolkit.
const PosCategoryMap& default_pos_map();

PosCategoryMap pos_map_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PosCategoryMap& m);
PosCategoryMap load_pos_map(const std::filesystem::path& path);

}  // namespace dlab
