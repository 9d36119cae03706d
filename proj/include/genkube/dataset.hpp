#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "genkube/kcf.hpp"
#include "genkube/label_codec.hpp"
#include "genkube/rules.hpp"

namespace genkube {

inline const char* kMaskToken = "<MASK>";

struct LabeledExample {
    std::string kcf_content;
    std::string source_name;
    LabelSet labels;
    long token_estimate = 0;
};

struct LabeledDataset {
    std::vector<LabeledExample> examples;
    size_t excluded_over_limit = 0;
    std::map<int, size_t> label_frequencies;  // umi_id -> occurrences
    std::vector<std::string> diagnostics;
};

// Labels every parseable file in corpus_dir with the given rules; files whose
// token estimate exceeds token_limit are excluded and counted.
LabeledDataset build_labeled_dataset(const std::string& corpus_dir, const Umi& umi,
                                     const std::vector<Rule>& rules, long token_limit,
                                     TokenEstimator estimator = TokenEstimator::Whitespace);
LabeledDataset label_corpus(const std::vector<std::pair<std::string, std::string>>& files,
                            const Umi& umi, const std::vector<Rule>& rules, long token_limit,
                            TokenEstimator estimator = TokenEstimator::Whitespace);

struct SplitRatios {
    double train = 0.80, val = 0.10, test = 0.10;
};

struct SplitManifest {
    uint64_t seed = 0;
    std::vector<std::string> train, val, test;
};

SplitManifest make_split(const std::vector<LabeledExample>& dataset, uint64_t seed,
                         SplitRatios ratios = {});
std::string split_to_json_text(const SplitManifest& m);
SplitManifest split_from_json_text(const std::string& text);

enum class ContextualVariant { Masked, Nsp };

struct ContextualExample {
    ContextualVariant variant;
    std::string input;
    std::string target;
};

struct ContextualDataset {
    std::vector<ContextualExample> examples;
    std::vector<std::string> diagnostics;
};

// One masked example (mask unit = line, round(fraction * lines) lines chosen
// without replacement, values replaced by kMaskToken) and one NSP example
// (split at the midpoint line) per document.
ContextualDataset build_contextual(const std::vector<std::pair<std::string, std::string>>& files,
                                   uint64_t seed, double mask_fraction = 0.15);

// Per-label quota sampling; an example carrying several labels may satisfy
// several quotas, and exhausted labels contribute everything they have.
std::vector<LabeledExample> stratified_sample(const std::vector<LabeledExample>& dataset,
                                              size_t per_label_count, uint64_t seed,
                                              int sentinel_id);

// Line-delimited {"input": kcf, "output": framed labels} records per partition,
// byte-stable under fixed inputs. Returns the files written.
std::vector<std::string> export_finetune(const std::vector<LabeledExample>& dataset,
                                         const SplitManifest& split, const std::string& out_dir);

std::string dataset_to_jsonl(const std::vector<LabeledExample>& dataset);
std::string stats_to_json_text(const LabeledDataset& ds);

// Optional free-text ingest: reads every regular file in dir as one document.
// Excluded from default pipelines.
std::vector<std::string> load_free_text(const std::string& dir);

}  // namespace genkube
