#include "dlab/taxonomy/pos_map.hpp"

#include <fstream>

namespace dlab {

namespace {

const char* const kDefaultTable = R"json({
  "version": "brown-1",
  "categories": {
    "punc": [".", "(", ")", "*", "--", ",", ":", "``", "''", "'"],
    "quantifier": ["ABL", "ABN", "ABX", "AP", "AP$"],
    "article": ["AT"],
    "be": ["BE", "BED", "BEDZ", "BEG", "BEM", "BEN", "BER", "BEZ"],
    "conjunction": ["CC", "CS"],
    "num": ["CD", "OD"],
    "do": ["DO", "DOD", "DOZ"],
    "det": ["DT", "DTI", "DTS", "DTX", "DT$"],
    "have": ["HV", "HVD", "HVG", "HVN", "HVZ"],
    "prepos": ["IN", "TO"],
    "adj": ["JJ", "JJR", "JJS", "JJT"],
    "modal": ["MD"],
    "noun": ["NN", "NN$", "NNS", "NNS$", "NR", "NRS", "NR$", "UH"],
    "propernoun": ["NP", "NP$", "NPS", "NPS$"],
    "pronoun": ["PN", "PN$", "PP$", "PP$$", "PPL", "PPLS", "PPO", "PPS", "PPSS"],
    "qual": ["QL", "QLP"],
    "adv": ["RB", "RB$", "RBR", "RBT", "RN", "RP"],
    "verb": ["VB", "VBD", "VBG", "VBN", "VBZ"],
    "what": ["WDT", "WP$", "WPO", "WPS", "WQL", "WRB", "EX"],
    "unknown": ["NIL"]
  },
  "meaningful": ["noun", "propernoun", "verb", "adj", "adv"],
  "function_words": ["article", "prepos", "conjunction", "det", "modal", "be", "do", "have", "what"]
})json";

PosCategory checked_category(const std::string& name)
{
    const auto c = pos_category_from_string(name);
    if (c == PosCategory::unknown && name != "unknown") throw ValidationError("unknown POS category '" + name + "'");
    return c;
}

}  // namespace

PosCategory PosCategoryMap::category_of(const std::string& tag) const
{
    if (auto it = tags.find(tag); it != tags.end()) return it->second;
    if (const auto dash = tag.find('-', 1); dash != std::string::npos) {
        if (auto it = tags.find(tag.substr(0, dash)); it != tags.end()) return it->second;
    }
    if (tag.size() > 1 && tag.back() == '*') {
        if (auto it = tags.find(tag.substr(0, tag.size() - 1)); it != tags.end()) return it->second;
    }
    return PosCategory::unknown;
}

PosCategoryMap pos_map_from_json(const nlohmann::json& j)
{
    PosCategoryMap m;
    m.version = j.value("version", std::string("custom"));
    for (const auto& [name, tags] : j.at("categories").items()) {
        const auto cat = checked_category(name);
        for (const auto& tag : tags) {
            const auto t = tag.get<std::string>();
            if (!m.tags.emplace(t, cat).second) throw ValidationError("POS tag '" + t + "' mapped twice");
        }
    }
    for (const auto& name : j.at("meaningful")) m.meaningful.insert(checked_category(name.get<std::string>()));
    for (const auto& name : j.at("function_words")) m.function_words.insert(checked_category(name.get<std::string>()));
    return m;
}

nlohmann::json to_json(const PosCategoryMap& m)
{
    nlohmann::json cats = nlohmann::json::object();
    for (const auto& [tag, cat] : m.tags) cats[std::string(to_string(cat))].push_back(tag);
    nlohmann::json meaningful = nlohmann::json::array(), function_words = nlohmann::json::array();
    for (auto c : m.meaningful) meaningful.push_back(std::string(to_string(c)));
    for (auto c : m.function_words) function_words.push_back(std::string(to_string(c)));
    return {{"version", m.version}, {"categories", cats}, {"meaningful", meaningful}, {"function_words", function_words}};
}

const PosCategoryMap& default_pos_map()
{
    static const PosCategoryMap map = pos_map_from_json(nlohmann::json::parse(kDefaultTable));
    return map;
}

PosCategoryMap load_pos_map(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open POS map " + path.string());
    try {
        return pos_map_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad POS map: ") + e.what());
    }
}

}  // namespace dlab
