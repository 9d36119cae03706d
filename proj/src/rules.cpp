#include "genkube/rules.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace genkube {

using nlohmann::json;

namespace {

PredicateOp op_from_string(const std::string& s) {
    if (s == "equals") return PredicateOp::Equals;
    if (s == "exists") return PredicateOp::Exists;
    if (s == "missing") return PredicateOp::Missing;
    if (s == "contains") return PredicateOp::Contains;
    if (s == "compare") return PredicateOp::Compare;
    throw FormatError("unknown predicate op: " + s);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> segments;
    std::string current;
    for (char c : path) {
        if (c == '/') {
            segments.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    segments.push_back(current);
    return segments;
}

// Expands `[*]` segments over the indices present in the tree. Each returned
// path is grounded at every wildcard; the final leaf may or may not exist.
std::vector<std::string> expand_path(const ResourceTree& tree, const std::string& path) {
    std::vector<std::string> candidates{""};
    for (const auto& segment : split_path(path)) {
        std::vector<std::string> next;
        if (segment == "[*]") {
            for (const auto& c : candidates) {
                for (int i = 0;; ++i) {
                    const std::string item = c + "/[" + std::to_string(i) + "]";
                    if (!tree.nodes.count(item)) break;
                    next.push_back(item);
                }
            }
        } else {
            for (const auto& c : candidates)
                next.push_back(c.empty() ? segment : c + "/" + segment);
        }
        candidates = std::move(next);
    }
    return candidates;
}

bool scalar_matches(const Predicate& p, const NodeInfo& node) {
    switch (p.op) {
        case PredicateOp::Equals: {
            if (node.kind != NodeKind::Scalar) return false;
            if (p.value == "true" || p.value == "false") return lower(node.value) == p.value;
            return node.value == p.value;
        }
        case PredicateOp::Contains:
            return node.kind == NodeKind::Scalar &&
                   lower(node.value).find(lower(p.value)) != std::string::npos;
        case PredicateOp::Compare: {
            if (node.kind != NodeKind::Scalar) return false;
            char* end = nullptr;
            const double lhs = std::strtod(node.value.c_str(), &end);
            if (end == node.value.c_str()) return false;
            const double rhs = std::strtod(p.value.c_str(), nullptr);
            if (p.cmp == "lt") return lhs < rhs;
            if (p.cmp == "le") return lhs <= rhs;
            if (p.cmp == "gt") return lhs > rhs;
            if (p.cmp == "ge") return lhs >= rhs;
            if (p.cmp == "ne") return lhs != rhs;
            return lhs == rhs;  // eq
        }
        default:
            return true;  // Exists
    }
}

}  // namespace

std::vector<Rule> rules_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("rule file is not valid JSON: ") + e.what());
    }
    if (!j.is_array()) throw FormatError("rule file must be a JSON array");
    std::vector<Rule> rules;
    for (const auto& jr : j) {
        Rule r;
        r.umi_id = jr.at("umi_id").get<int>();
        for (const auto& k : jr.value("kinds", json::array())) r.applies_to_kinds.insert(k.get<std::string>());
        const auto& jp = jr.at("predicate");
        r.predicate.op = op_from_string(jp.at("op").get<std::string>());
        r.predicate.path = jp.at("path").get<std::string>();
        if (jp.contains("value")) {
            const auto& v = jp["value"];
            r.predicate.value = v.is_string() ? v.get<std::string>() : v.dump();
        }
        r.predicate.cmp = jp.value("cmp", "eq");
        r.rationale = jr.value("rationale", "");
        rules.push_back(std::move(r));
    }
    return rules;
}

std::vector<Rule> load_rules(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return rules_from_json_text(ss.str());
}

void validate_rules(const std::vector<Rule>& rules, const Umi& umi) {
    for (const auto& r : rules)
        if (!umi.contains(r.umi_id)) throw UnknownId(r.umi_id);
}

std::string resource_token(const ResourceTree& tree) {
    if (tree.name) {
        const std::string token = sanitize_resource_token(*tree.name);
        if (!token.empty()) return token;
    }
    const std::string kind = sanitize_resource_token(tree.kind);
    return kind.empty() ? "file" : kind;
}

DetectionRecord evaluate_rules(const KcfDocument& doc, const std::vector<Rule>& rules,
                               const Umi& umi) {
    DetectionRecord record;
    record.source = "internal-rules";
    record.kcf = doc.source_name;

    for (const auto& tree : doc.documents) {
        const std::string token = resource_token(tree);
        for (const auto& rule : rules) {
            if (!rule.applies_to_kinds.empty() && !rule.applies_to_kinds.count(tree.kind)) continue;
            for (const auto& concrete : expand_path(tree, rule.predicate.path)) {
                const auto node = lookup_node(tree, concrete);
                bool fired = false;
                std::optional<int> line;
                if (rule.predicate.op == PredicateOp::Missing) {
                    fired = !node.has_value();
                } else if (node) {
                    fired = scalar_matches(rule.predicate, *node);
                    if (fired) line = node->line;
                }
                if (!fired) continue;
                const EncodedLabel label{token, rule.umi_id};
                record.labels.insert(label, umi.sentinel_id());
                record.evidence.push_back({label, concrete, line});
            }
        }
    }

    if (record.labels.empty()) {
        const std::string token =
            doc.documents.empty() ? "file" : resource_token(doc.documents.front());
        record.labels.insert({token, umi.sentinel_id()}, umi.sentinel_id());
    }
    return record;
}

DetectionRecord ensemble(const std::vector<DetectionRecord>& records, const Umi& umi) {
    DetectionRecord out;
    out.source = "ensemble";
    for (const auto& r : records) {
        if (out.kcf.empty()) out.kcf = r.kcf;
        else if (out.kcf != r.kcf) throw MixedSources(out.kcf, r.kcf);
        for (const auto& l : r.labels.labels())
            if (l.misconfig_id != umi.sentinel_id()) out.labels.insert(l, umi.sentinel_id());
        for (const auto& e : r.evidence) out.evidence.push_back(e);
        for (const auto& d : r.diagnostics) out.diagnostics.push_back(d);
    }
    if (out.labels.empty()) {
        std::string token = "file";
        if (!records.empty() && !records.front().labels.empty())
            token = records.front().labels.labels().begin()->resource;
        out.labels.insert({token, umi.sentinel_id()}, umi.sentinel_id());
    }
    return out;
}

DetectionRecord filter_to_scope(const DetectionRecord& record, const std::set<int>& coverage,
                                const Umi& umi) {
    DetectionRecord out;
    out.source = record.source;
    out.kcf = record.kcf;
    out.diagnostics = record.diagnostics;
    for (const auto& l : record.labels.labels())
        if (l.misconfig_id != umi.sentinel_id() && coverage.count(l.misconfig_id))
            out.labels.insert(l, umi.sentinel_id());
    for (const auto& e : record.evidence)
        if (coverage.count(e.label.misconfig_id)) out.evidence.push_back(e);
    if (out.labels.empty()) {
        const std::string token =
            record.labels.empty() ? "file" : record.labels.labels().begin()->resource;
        out.labels.insert({token, umi.sentinel_id()}, umi.sentinel_id());
    }
    return out;
}

std::set<int> rule_coverage(const std::vector<Rule>& rules) {
    std::set<int> ids;
    for (const auto& r : rules) ids.insert(r.umi_id);
    return ids;
}

std::vector<ToolFinding> parse_tool_report(const std::string& tool_name, const std::string& report) {
    json j;
    try {
        j = json::parse(report);
    } catch (const json::parse_error&) {
        throw UnparseableReport(tool_name);
    }
    std::vector<ToolFinding> findings;
    try {
        if (tool_name == "checkov") {
            for (const auto& c : j.at("results").value("failed_checks", json::array()))
                findings.push_back({c.at("check_id").get<std::string>(),
                                    c.value("resource", ""), c.value("check_name", "")});
        } else if (tool_name == "kube-linter") {
            for (const auto& r : j.value("Reports", json::array())) {
                std::string name;
                if (r.contains("Object") && r["Object"].contains("K8sObject"))
                    name = r["Object"]["K8sObject"].value("Name", "");
                std::string message;
                if (r.contains("Diagnostic")) message = r["Diagnostic"].value("Message", "");
                findings.push_back({r.at("Check").get<std::string>(), name, message});
            }
        } else if (tool_name == "terrascan") {
            for (const auto& v : j.at("results").value("violations", json::array()))
                findings.push_back({v.at("rule_id").get<std::string>(),
                                    v.value("resource_name", ""), v.value("description", "")});
        } else {
            throw Error("no report parser for tool: " + tool_name);
        }
    } catch (const json::exception&) {
        throw UnparseableReport(tool_name);
    }
    return findings;
}

DetectionRecord map_findings(const std::string& tool_name, const std::vector<ToolFinding>& findings,
                             const KcfDocument& doc, const Umi& umi) {
    DetectionRecord record;
    record.source = "external:" + tool_name;
    record.kcf = doc.source_name;
    const std::string fallback =
        doc.documents.empty() ? "file" : resource_token(doc.documents.front());
    for (const auto& f : findings) {
        const auto id = umi.resolve_alias(tool_name, f.rule_id);
        if (!id) {
            record.diagnostics.push_back("unmapped " + tool_name + " rule: " + f.rule_id);
            continue;
        }
        std::string token = sanitize_resource_token(f.resource);
        if (token.empty()) token = fallback;
        record.labels.insert({token, *id}, umi.sentinel_id());
    }
    if (record.labels.empty())
        record.labels.insert({fallback, umi.sentinel_id()}, umi.sentinel_id());
    return record;
}

namespace {

std::string tool_command(const std::string& tool, const std::string& path) {
    if (tool == "checkov") return "checkov -f '" + path + "' -o json 2>/dev/null";
    if (tool == "kube-linter") return "kube-linter lint --format json '" + path + "' 2>/dev/null";
    if (tool == "terrascan") return "terrascan scan -i k8s -f '" + path + "' -o json 2>/dev/null";
    throw Error("no invocation recipe for tool: " + tool);
}

bool tool_on_path(const std::string& tool) {
    const std::string cmd = "command -v '" + tool + "' >/dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
}

}  // namespace

DetectionRecord run_external_tool(const std::string& tool_name, const std::string& doc_path,
                                  const Umi& umi) {
    if (!tool_on_path(tool_name)) throw ToolNotFound(tool_name);

    std::ifstream in(doc_path);
    if (!in) throw IoError(doc_path);
    std::stringstream content;
    content << in.rdbuf();
    const KcfDocument doc = parse_kcf(content.str(), doc_path);

    FILE* pipe = popen(tool_command(tool_name, doc_path).c_str(), "r");
    if (!pipe) throw ToolCrashed(tool_name, -1);
    std::string report;
    std::array<char, 4096> buf;
    size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) report.append(buf.data(), n);
    const int status = pclose(pipe);

    try {
        return map_findings(tool_name, parse_tool_report(tool_name, report), doc, umi);
    } catch (const UnparseableReport&) {
        // Scanners exit nonzero when findings exist, so only an unparseable
        // report plus a nonzero exit counts as a crash.
        if (status != 0) throw ToolCrashed(tool_name, status);
        throw;
    }
}

}  // namespace genkube
