#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "genkube/errors.hpp"

namespace genkube {

struct SourceAlias {
    std::string tool;
    std::string rule_id;
    std::string text;  // the tool's own description of the rule

    auto operator<=>(const SourceAlias&) const = default;
};

struct MisconfigEntry {
    int id = 0;
    std::string description;
    std::vector<SourceAlias> aliases;
    std::optional<std::string> severity_hint;
};

// Unified Misconfig Index: one entry per standardized misconfig class, plus a
// reserved sentinel entry for files where nothing was detected.
class Umi {
  public:
    Umi(std::vector<MisconfigEntry> entries, int sentinel_id);

    const std::vector<MisconfigEntry>& entries() const { return entries_; }
    int sentinel_id() const { return sentinel_id_; }

    bool contains(int id) const { return by_id_.count(id) != 0; }
    const MisconfigEntry& entry(int id) const;  // throws UnknownId
    const std::string& description(int id) const { return entry(id).description; }

    // Maps a tool finding back to its unified id; nullopt when no alias covers it.
    std::optional<int> resolve_alias(const std::string& tool, const std::string& rule_id) const;

  private:
    std::vector<MisconfigEntry> entries_;  // sorted by id
    int sentinel_id_;
    std::map<int, size_t> by_id_;
};

Umi load_umi(const std::string& path);
void save_umi(const Umi& umi, const std::string& path);
Umi umi_from_json_text(const std::string& text);
std::string umi_to_json_text(const Umi& umi);

// Three-segment entity-matching prompt: task instruction and matching criteria,
// dictionary output format with few-shot examples, then the two new lists.
std::string build_entity_match_prompt(const std::vector<std::string>& list_a,
                                      const std::vector<std::string>& list_b,
                                      const std::vector<std::pair<std::string, std::string>>& fewshot);

struct EntityMatches {
    std::map<std::string, std::string> pairs;  // list-a description -> list-b description
    std::vector<std::string> diagnostics;      // hallucinated pairs dropped, with reasons
};

// Extracts the dictionary block from a completion and keeps only pairs whose
// sides actually occur in the given input lists.
EntityMatches parse_entity_matches(const std::string& completion,
                                   const std::vector<std::string>& list_a,
                                   const std::vector<std::string>& list_b);

// A not-yet-unified source rule, as harvested from one tool's policy index.
struct DraftRule {
    std::string tool;
    std::string rule_id;
    std::string description;
};

// Collapses matched rule groups into single entries with all aliases attached.
// Overrides (source_rule_id -> group tag) win over automatic matches; ids are
// assigned densely from 0 in lexicographic (tool, rule_id) order of each
// group's smallest member, with the sentinel appended last.
Umi merge_matches(const std::vector<DraftRule>& draft,
                  const std::map<std::string, std::string>& matches,
                  const std::vector<std::pair<std::string, int>>& manual_overrides);

inline const char* kSentinelDescription = "No misconfiguration detected in this file";

}  // namespace genkube
