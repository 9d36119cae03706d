#pragma once

#include <string>
#include <vector>

#include "genkube/gateway.hpp"
#include "genkube/label_codec.hpp"
#include "genkube/rules.hpp"

namespace genkube {

enum class Localization { Verified, Mismatch, NotApplicable };

const char* to_string(Localization v);

struct ResolutionReport {
    std::string kcf;
    DecodedLabel misconfig;
    int line_number = kAbsentLine;  // kAbsentLine marks a missing-line case
    std::string line_text;
    std::string explanation;
    std::string fix_suggestion;
    int error_number = 0;
    Localization localization_verified = Localization::Mismatch;
    std::vector<std::string> diagnostics;
};

// One labeled (Q, A) pair for in-context detection.
struct FewshotPair {
    std::string kcf;
    LabelSet labels;
};

// A worked resolve example shipped as data: KCF, decoded misconfig, and the
// expected five-field answer.
struct ResolveExample {
    std::string kcf;
    std::string misconfig;
    int line_number = kAbsentLine;
    std::string line_text;
    std::string explanation;
    std::string fix_suggestion;
    int error_number = 0;
};

std::vector<ResolveExample> load_resolve_fewshot(const std::string& path);
std::vector<ResolveExample> resolve_fewshot_from_json_text(const std::string& text);
std::vector<ResolveExample> builtin_resolve_fewshot();

std::string build_detection_prompt(const KcfDocument& doc);
std::string build_fewshot_detection_prompt(const std::vector<FewshotPair>& trainset,
                                           const std::string& test_kcf);
std::string build_resolve_prompt(const KcfDocument& doc, const DecodedLabel& misconfig,
                                 int error_number, const std::vector<ResolveExample>& fewshot);

DetectionRecord detect(const KcfDocument& doc, Backend& backend, const Umi& umi);

// Decodes and splits: one backend call and one report per detected
// non-sentinel label, each verified against the document's raw lines.
std::vector<ResolutionReport> resolve(const KcfDocument& doc, const DetectionRecord& detection,
                                      const Umi& umi, Backend& backend,
                                      const std::vector<ResolveExample>& fewshot);

Localization verify_localization(const KcfDocument& doc, const ResolutionReport& report);

std::string reports_to_json_text(const std::vector<ResolutionReport>& reports);

}  // namespace genkube
