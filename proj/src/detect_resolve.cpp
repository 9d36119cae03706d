#include "genkube/detect_resolve.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace genkube {

using nlohmann::json;

const char* to_string(Localization v) {
    switch (v) {
        case Localization::Verified: return "verified";
        case Localization::Mismatch: return "mismatch";
        case Localization::NotApplicable: return "not-applicable";
    }
    return "mismatch";
}

namespace {

std::string fence(const std::string& kcf) {
    std::string out = kKcfFenceOpen + kcf;
    if (out.empty() || out.back() != '\n') out += '\n';
    out += kKcfFenceClose;
    return out;
}

// Trim plus collapse of internal whitespace runs; localization comparison is
// indentation-insensitive.
std::string normalize_ws(const std::string& s) {
    std::string out;
    bool pending = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending = !out.empty();
        } else {
            if (pending) out += ' ';
            pending = false;
            out += c;
        }
    }
    return out;
}

std::optional<json> first_balanced_object(const std::string& text) {
    const size_t open = text.find('{');
    if (open == std::string::npos) return std::nullopt;
    int depth = 0;
    bool in_string = false;
    for (size_t i = open; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) {
            try {
                return json::parse(text.substr(open, i - open + 1));
            } catch (const json::parse_error&) {
                return std::nullopt;
            }
        }
    }
    return std::nullopt;
}

const char* kDetectionInstruction =
    "You are a Kubernetes security analyzer. Inspect the manifest file below and list every "
    "misconfiguration you find as encoded labels of the form resource+id, one per finding.\n\n";

const char* kResolveSystemPrompt =
    "You are given a Kubernetes manifest and one misconfiguration detected in it. Identify the "
    "exact line number of the misconfiguration, quote the text of that line, explain the logic "
    "behind the detection, and suggest how to fix it. Respond with a JSON object detailing "
    "line_number, line_text, explanation, fix_suggestion, and error_number. If the necessary "
    "line is missing from the manifest, use -1 as the line number and an empty line text.\n";

}  // namespace

std::string build_detection_prompt(const KcfDocument& doc) {
    return kDetectionInstruction + fence(doc.rejoin()) + "\n";
}

std::string build_fewshot_detection_prompt(const std::vector<FewshotPair>& trainset,
                                           const std::string& test_kcf) {
    if (trainset.empty()) throw EmptyTrainset{};
    std::ostringstream p;
    p << "Each question contains a Kubernetes manifest file; each answer contains the "
         "misconfigurations found in that manifest file, as encoded resource+id labels.\n\n";
    for (const auto& pair : trainset)
        p << "Q:\n" << fence(pair.kcf) << "\nA: " << render_framed(pair.labels) << "\n\n";
    p << "Q:\n" << fence(test_kcf) << "\n";
    return p.str();
}

std::string build_resolve_prompt(const KcfDocument& doc, const DecodedLabel& misconfig,
                                 int error_number, const std::vector<ResolveExample>& fewshot) {
    std::ostringstream p;
    p << kResolveSystemPrompt << "\n";
    for (const auto& ex : fewshot) {
        json answer{{"line_number", ex.line_number}, {"line_text", ex.line_text},
                    {"explanation", ex.explanation}, {"fix_suggestion", ex.fix_suggestion},
                    {"error_number", ex.error_number}};
        p << "Example:\n" << kMisconfigMarker << ex.misconfig << "\n"
          << fence(ex.kcf) << "\nAnswer: " << answer.dump() << "\n\n";
    }
    p << kMisconfigMarker << misconfig.description << "\n"
      << kErrorNumberMarker << error_number << "\n"
      << fence(doc.rejoin()) << "\n";
    return p.str();
}

DetectionRecord detect(const KcfDocument& doc, Backend& backend, const Umi& umi) {
    CompletionRequest request;
    request.prompt = build_detection_prompt(doc);
    const std::string completion = backend.complete(request);
    ParsedLabels parsed = parse_labels(completion, umi);

    DetectionRecord record;
    record.source = "llm";
    record.kcf = doc.source_name;
    record.labels = parsed.labels;
    record.diagnostics = parsed.diagnostics;
    return record;
}

std::vector<ResolutionReport> resolve(const KcfDocument& doc, const DetectionRecord& detection,
                                      const Umi& umi, Backend& backend,
                                      const std::vector<ResolveExample>& fewshot) {
    std::vector<ResolutionReport> reports;
    for (const auto& label : detection.labels.labels()) {  // set order keeps reports sorted
        if (label.misconfig_id == umi.sentinel_id()) continue;
        ResolutionReport report;
        report.kcf = doc.source_name;
        report.misconfig = decode(label, umi);
        report.error_number = label.misconfig_id;

        CompletionRequest request;
        request.system_prompt = kResolveSystemPrompt;
        request.prompt = build_resolve_prompt(doc, report.misconfig, label.misconfig_id, fewshot);

        std::optional<json> answer;
        try {
            answer = first_balanced_object(backend.complete(request));
        } catch (const NoEvidence& e) {
            report.diagnostics.push_back(e.what());
        }
        if (!answer) {
            if (report.diagnostics.empty())
                report.diagnostics.push_back("completion carried no parseable JSON object");
            report.localization_verified = Localization::Mismatch;
            reports.push_back(std::move(report));
            continue;
        }
        try {
            report.line_number = answer->value("line_number", kAbsentLine);
            report.line_text = answer->value("line_text", "");
            report.explanation = answer->value("explanation", "");
            report.fix_suggestion = answer->value("fix_suggestion", "");
            report.error_number = answer->value("error_number", label.misconfig_id);
        } catch (const json::exception& e) {
            report.diagnostics.push_back(std::string("malformed resolution object: ") + e.what());
        }
        report.localization_verified = verify_localization(doc, report);
        reports.push_back(std::move(report));
    }
    return reports;
}

Localization verify_localization(const KcfDocument& doc, const ResolutionReport& report) {
    if (report.line_number == kAbsentLine)
        return report.line_text.empty() ? Localization::NotApplicable : Localization::Mismatch;
    if (report.line_number < 1 || report.line_number > static_cast<int>(doc.raw_lines.size()))
        return Localization::Mismatch;
    const std::string actual = normalize_ws(doc.raw_lines[static_cast<size_t>(report.line_number - 1)]);
    return actual == normalize_ws(report.line_text) ? Localization::Verified
                                                    : Localization::Mismatch;
}

std::vector<ResolveExample> resolve_fewshot_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("few-shot file is not valid JSON: ") + e.what());
    }
    std::vector<ResolveExample> out;
    for (const auto& je : j) {
        ResolveExample ex;
        ex.kcf = je.at("kcf").get<std::string>();
        ex.misconfig = je.at("misconfig").get<std::string>();
        ex.line_number = je.value("line_number", kAbsentLine);
        ex.line_text = je.value("line_text", "");
        ex.explanation = je.value("explanation", "");
        ex.fix_suggestion = je.value("fix_suggestion", "");
        ex.error_number = je.value("error_number", 0);
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<ResolveExample> load_resolve_fewshot(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return resolve_fewshot_from_json_text(ss.str());
}

std::vector<ResolveExample> builtin_resolve_fewshot() {
    // Three worked cases: misconfigured value present, wrong value, line missing.
    std::vector<ResolveExample> out;
    out.push_back({"apiVersion: apps/v1\nkind: Deployment\nmetadata:\n  name: web\nspec:\n  replicas: 1\n",
                   "Deployments should run more than one replica to avoid a single point of failure",
                   6, "replicas: 1",
                   "A single replica makes the workload a single point of failure.",
                   "Increase the number of replicas to at least 2.", 0});
    out.push_back({"apiVersion: v1\nkind: Pod\nmetadata:\n  name: app\nspec:\n  securityContext:\n    privileged: true\n",
                   "Containers should not run with privileged access",
                   7, "privileged: true",
                   "Privileged mode grants the container full access to the host.",
                   "Set privileged to false.", 0});
    out.push_back({"apiVersion: v1\nkind: Pod\nmetadata:\n  name: app\nspec:\n  containers:\n    - name: c\n      image: img:1.0\n",
                   "CPU requests should be set for every container",
                   kAbsentLine, "",
                   "The container declares no CPU request, so the scheduler cannot reserve capacity for it.",
                   "Add resources.requests.cpu to the container specification.", 0});
    return out;
}

std::string reports_to_json_text(const std::vector<ResolutionReport>& reports) {
    json arr = json::array();
    for (const auto& r : reports) {
        json j{{"kcf", r.kcf},
               {"resource", r.misconfig.resource},
               {"misconfig", r.misconfig.description},
               {"line_number", r.line_number},
               {"line_text", r.line_text},
               {"explanation", r.explanation},
               {"fix_suggestion", r.fix_suggestion},
               {"error_number", r.error_number},
               {"localization_verified", to_string(r.localization_verified)}};
        if (!r.diagnostics.empty()) j["diagnostics"] = r.diagnostics;
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

}  // namespace genkube
