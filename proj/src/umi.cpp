#include "genkube/umi.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace genkube {

using nlohmann::json;

Umi::Umi(std::vector<MisconfigEntry> entries, int sentinel_id)
    : entries_(std::move(entries)), sentinel_id_(sentinel_id) {
    std::sort(entries_.begin(), entries_.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    std::set<std::string> descriptions;
    std::set<std::pair<std::string, std::string>> alias_keys;
    for (size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (!by_id_.emplace(e.id, i).second) throw DuplicateId(e.id);
        if (e.description.empty() || !descriptions.insert(e.description).second)
            throw DuplicateDescription(e.description);
        for (const auto& a : e.aliases)
            if (!alias_keys.insert({a.tool, a.rule_id}).second)
                throw FormatError("alias " + a.tool + ":" + a.rule_id + " maps to multiple entries");
    }
    if (!by_id_.count(sentinel_id_)) throw MissingSentinel{};
}

const MisconfigEntry& Umi::entry(int id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw UnknownId(id);
    return entries_[it->second];
}

std::optional<int> Umi::resolve_alias(const std::string& tool, const std::string& rule_id) const {
    for (const auto& e : entries_)
        for (const auto& a : e.aliases)
            if (a.tool == tool && a.rule_id == rule_id) return e.id;
    return std::nullopt;
}

Umi umi_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("UMI file is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("sentinel_id") || !j.contains("entries"))
        throw FormatError("UMI file must contain 'sentinel_id' and 'entries'");
    std::vector<MisconfigEntry> entries;
    for (const auto& je : j["entries"]) {
        MisconfigEntry e;
        e.id = je.at("id").get<int>();
        e.description = je.at("description").get<std::string>();
        for (const auto& ja : je.value("aliases", json::array()))
            e.aliases.push_back({ja.at("tool").get<std::string>(), ja.at("rule_id").get<std::string>(),
                                 ja.value("text", "")});
        if (je.contains("severity_hint")) e.severity_hint = je["severity_hint"].get<std::string>();
        entries.push_back(std::move(e));
    }
    if (entries.empty()) throw MissingSentinel{};
    return Umi(std::move(entries), j["sentinel_id"].get<int>());
}

std::string umi_to_json_text(const Umi& umi) {
    json j;
    j["sentinel_id"] = umi.sentinel_id();
    j["entries"] = json::array();
    for (const auto& e : umi.entries()) {  // entries() is already sorted by id
        json je{{"id", e.id}, {"description", e.description}, {"aliases", json::array()}};
        for (const auto& a : e.aliases)
            je["aliases"].push_back({{"tool", a.tool}, {"rule_id", a.rule_id}, {"text", a.text}});
        if (e.severity_hint) je["severity_hint"] = *e.severity_hint;
        j["entries"].push_back(std::move(je));
    }
    return j.dump(2) + "\n";
}

Umi load_umi(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return umi_from_json_text(ss.str());
}

void save_umi(const Umi& umi, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError(path);
    out << umi_to_json_text(umi);
}

std::string build_entity_match_prompt(
    const std::vector<std::string>& list_a, const std::vector<std::string>& list_b,
    const std::vector<std::pair<std::string, std::string>>& fewshot) {
    if (list_a.empty()) throw EmptyList("first");
    if (list_b.empty()) throw EmptyList("second");

    static const std::vector<std::pair<std::string, std::string>> kDefaultFewshot = {
        {"CPU limits should be set.", "CPU limits not set in config file."},
        {"Image tag should be fixed - not latest or blank.",
         "Use a container image with a specific tag other than latest."},
    };
    const auto& examples = fewshot.empty() ? kDefaultFewshot : fewshot;

    std::ostringstream p;
    p << "Match each policy description from the first list to the same meaning policy "
         "description in the second list. Exclude unmatched policies.\n\n";
    p << "Criteria for matching: policies must convey the same meaning and be nearly exact "
         "in terms of functional equivalence and key terms.\n\n";
    p << "Return the result as a dictionary of matched policies from both lists.\n\n";
    p << "Example:\n\nList 1:\n";
    for (const auto& [a, b] : examples) p << "- " << a << "\n";
    p << "\nList 2:\n";
    for (const auto& [a, b] : examples) p << "- " << b << "\n";
    p << "\nExample output:\n{\n";
    for (size_t i = 0; i < examples.size(); ++i) {
        p << "  " << json(examples[i].first).dump() << ": " << json(examples[i].second).dump();
        p << (i + 1 < examples.size() ? ",\n" : "\n");
    }
    p << "}\n\nList 1:\n";
    for (const auto& a : list_a) p << "- " << a << "\n";
    p << "\nList 2:\n";
    for (const auto& b : list_b) p << "- " << b << "\n";
    return p.str();
}

EntityMatches parse_entity_matches(const std::string& completion,
                                   const std::vector<std::string>& list_a,
                                   const std::vector<std::string>& list_b) {
    size_t open = completion.find('{');
    if (open == std::string::npos) throw NoDictionaryFound{};
    int depth = 0;
    size_t close = std::string::npos;
    bool in_string = false;
    for (size_t i = open; i < completion.size(); ++i) {
        const char c = completion[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) { close = i; break; }
    }
    if (close == std::string::npos) throw NoDictionaryFound{};

    json dict;
    try {
        dict = json::parse(completion.substr(open, close - open + 1));
    } catch (const json::parse_error&) {
        throw NoDictionaryFound{};
    }
    if (!dict.is_object()) throw NoDictionaryFound{};

    EntityMatches out;
    const std::set<std::string> a_set(list_a.begin(), list_a.end());
    const std::set<std::string> b_set(list_b.begin(), list_b.end());
    for (const auto& [key, value] : dict.items()) {
        if (!value.is_string()) {
            out.diagnostics.push_back("dropped pair with non-string value for key: " + key);
            continue;
        }
        const std::string v = value.get<std::string>();
        if (!a_set.count(key)) {
            out.diagnostics.push_back("dropped pair whose key is not in the first list: " + key);
        } else if (!b_set.count(v)) {
            out.diagnostics.push_back("dropped pair whose value is not in the second list: " + v);
        } else {
            out.pairs[key] = v;
        }
    }
    return out;
}

namespace {

struct UnionFind {
    std::vector<size_t> parent;
    explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    size_t find(size_t x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
    void unite(size_t a, size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

Umi merge_matches(const std::vector<DraftRule>& draft,
                  const std::map<std::string, std::string>& matches,
                  const std::vector<std::pair<std::string, int>>& manual_overrides) {
    // Overrides win: a rule with an override tag is grouped only by that tag.
    std::map<std::string, int> override_tag;
    for (const auto& [rule_id, tag] : manual_overrides) {
        auto it = override_tag.find(rule_id);
        if (it != override_tag.end() && it->second != tag) throw ConflictingOverride(rule_id);
        override_tag[rule_id] = tag;
    }

    UnionFind uf(draft.size());
    auto overridden = [&](size_t i) { return override_tag.count(draft[i].rule_id) != 0; };

    std::map<int, size_t> tag_anchor;
    for (size_t i = 0; i < draft.size(); ++i) {
        if (!overridden(i)) continue;
        const int tag = override_tag[draft[i].rule_id];
        auto [it, fresh] = tag_anchor.emplace(tag, i);
        if (!fresh) uf.unite(i, it->second);
    }

    std::map<std::string, std::vector<size_t>> by_description;
    for (size_t i = 0; i < draft.size(); ++i)
        if (!overridden(i)) by_description[draft[i].description].push_back(i);
    for (const auto& [da, db] : matches) {
        auto ia = by_description.find(da);
        auto ib = by_description.find(db);
        if (ia == by_description.end() || ib == by_description.end()) continue;
        for (size_t a : ia->second)
            for (size_t b : ib->second) uf.unite(a, b);
    }

    std::map<size_t, std::vector<size_t>> groups;
    for (size_t i = 0; i < draft.size(); ++i) groups[uf.find(i)].push_back(i);

    // Deterministic id assignment: lexicographic over the smallest member.
    std::vector<std::vector<size_t>> ordered;
    for (auto& [root, members] : groups) {
        std::sort(members.begin(), members.end(), [&](size_t a, size_t b) {
            return std::tie(draft[a].tool, draft[a].rule_id) < std::tie(draft[b].tool, draft[b].rule_id);
        });
        ordered.push_back(members);
    }
    std::sort(ordered.begin(), ordered.end(), [&](const auto& a, const auto& b) {
        return std::tie(draft[a[0]].tool, draft[a[0]].rule_id) <
               std::tie(draft[b[0]].tool, draft[b[0]].rule_id);
    });

    std::vector<MisconfigEntry> entries;
    std::set<std::string> used_descriptions;
    for (size_t g = 0; g < ordered.size(); ++g) {
        MisconfigEntry e;
        e.id = static_cast<int>(g);
        const auto& lead = draft[ordered[g][0]];
        e.description = lead.description;
        if (!used_descriptions.insert(e.description).second) {
            e.description += " [" + lead.tool + ":" + lead.rule_id + "]";
            used_descriptions.insert(e.description);
        }
        for (size_t i : ordered[g])
            e.aliases.push_back({draft[i].tool, draft[i].rule_id, draft[i].description});
        entries.push_back(std::move(e));
    }

    MisconfigEntry sentinel;
    sentinel.id = static_cast<int>(entries.size());
    sentinel.description = kSentinelDescription;
    entries.push_back(sentinel);
    return Umi(std::move(entries), sentinel.id);
}

}  // namespace genkube
