#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "genkube/kcf.hpp"
#include "genkube/label_codec.hpp"
#include "genkube/umi.hpp"

namespace genkube {

enum class PredicateOp { Equals, Exists, Missing, Contains, Compare };

// Declarative check over a ResourceTree. Paths may contain `[*]` segments
// which expand over the indices present in the tree; `missing` fires once per
// expansion whose parent exists but whose leaf does not.
struct Predicate {
    PredicateOp op = PredicateOp::Exists;
    std::string path;
    std::string value;  // comparison operand for equals/contains/compare
    std::string cmp;    // compare only: lt | le | gt | ge | eq | ne
};

struct Rule {
    int umi_id = 0;
    std::set<std::string> applies_to_kinds;  // empty = all kinds
    Predicate predicate;
    std::string rationale;
};

struct Evidence {
    EncodedLabel label;
    std::string key_path;
    std::optional<int> line;  // absent when the predicate fired on a missing path
};

struct DetectionRecord {
    std::string source;  // internal-rules | external:<tool> | ensemble | llm
    std::string kcf;
    LabelSet labels;
    std::vector<Evidence> evidence;
    std::vector<std::string> diagnostics;
};

std::vector<Rule> load_rules(const std::string& path);
std::vector<Rule> rules_from_json_text(const std::string& text);
void validate_rules(const std::vector<Rule>& rules, const Umi& umi);  // throws UnknownId

// Resource token for a tree: sanitized metadata.name, falling back to the
// lowercased kind, then to "file".
std::string resource_token(const ResourceTree& tree);

DetectionRecord evaluate_rules(const KcfDocument& doc, const std::vector<Rule>& rules, const Umi& umi);

DetectionRecord ensemble(const std::vector<DetectionRecord>& records, const Umi& umi);

// Fairness filter: keeps only labels a detector's rule set covers; empty
// results collapse to the sentinel. Idempotent.
DetectionRecord filter_to_scope(const DetectionRecord& record, const std::set<int>& coverage,
                                const Umi& umi);
std::set<int> rule_coverage(const std::vector<Rule>& rules);

// --- external tool adapters ---

struct ToolFinding {
    std::string rule_id;
    std::string resource;  // impacted object name, may be empty
    std::string description;
};

// Parses a tool's machine-readable report into findings; per-tool plugins for
// checkov, kube-linter, and terrascan JSON output.
std::vector<ToolFinding> parse_tool_report(const std::string& tool_name, const std::string& report);

DetectionRecord map_findings(const std::string& tool_name, const std::vector<ToolFinding>& findings,
                             const KcfDocument& doc, const Umi& umi);

// Out-of-process invocation; throws ToolNotFound / ToolCrashed / UnparseableReport.
DetectionRecord run_external_tool(const std::string& tool_name, const std::string& doc_path,
                                  const Umi& umi);

}  // namespace genkube
