#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "genkube/dataset.hpp"
#include "genkube/gateway.hpp"
#include "genkube/label_codec.hpp"

namespace genkube {

struct LabelCounts {
    long tp = 0, fp = 0, fn = 0, tn = 0;
};

struct ConfusionTally {
    std::map<int, LabelCounts> per_label;  // umi_id -> counts over (kcf, label) pairs
    std::map<int, long> support;           // umi_id -> occurrences in the ground truth
    long consensus_clean = 0;              // files where both sides are sentinel-only
    long unknown_fp = 0;                   // predicted ids absent from the Umi, surfaced separately
};

using LabelSetsByKcf = std::map<std::string, LabelSet>;

// Per-(kcf, label) confusion counts. TNs cover the scoped label set (the whole
// Umi when no scope is given); sentinel labels stay out of per-label counts.
ConfusionTally tally(const LabelSetsByKcf& predictions, const LabelSetsByKcf& ground_truth,
                     const Umi& umi, const std::optional<std::set<int>>& label_scope = std::nullopt);

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

// Plain mean and population standard deviation.
MeanStd mean_std(const std::vector<double>& values);

struct PerLabelMetrics {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    long support = 0;
};

struct EvalReport {
    MeanStd weighted_precision, weighted_recall, weighted_f1;  // stddev is support-weighted
    std::map<int, PerLabelMetrics> per_label_metrics;
    size_t n_labels_covered = 0;
};

EvalReport weighted_metrics(const ConfusionTally& tally);

std::string report_to_json_text(const EvalReport& report);
std::string report_to_table_text(const EvalReport& report);

// --- FP audit flow ---

struct AuditCard {
    std::string kcf;
    std::vector<EncodedLabel> fp_labels;
    std::vector<std::string> descriptions;  // aligned with fp_labels
    std::string markdown() const;
};

struct AuditBundle {
    std::vector<AuditCard> cards;
    long sample_fp_count = 0;
    long sample_tp_count = 0;
};

AuditBundle audit_fps(const LabelSetsByKcf& predictions, const LabelSetsByKcf& ground_truth,
                      const Umi& umi, size_t sample_size, uint64_t seed);

struct AdjustedPrecision {
    long flipped = 0;            // sampled FPs the expert confirmed as real misconfigs
    long remaining_fp = 0;
    double flip_rate = 0.0;
    double adjusted_precision = 0.0;  // over the sampled files, with flips counted as TPs
};

// Verdicts: (kcf, rendered label) pairs confirmed as true misconfigs.
AdjustedPrecision apply_audit(const AuditBundle& bundle,
                              const std::set<std::pair<std::string, std::string>>& verdicts);

// --- noise-fidelity harness ---

// Deletes each ground-truth label from the returned predictions with
// probability q; files emptied this way collapse to the sentinel.
LabelSetsByKcf perturb_predictions(const LabelSetsByKcf& ground_truth, double q, uint64_t seed,
                                   const Umi& umi);

// --- adaptation protocol ---

struct AdaptationConfig {
    std::vector<int> new_misconfigs{51, 97, 103, 139, 140};
    std::vector<int> sample_sizes{1, 2, 5};
    int iterations = 10;
    size_t fixed_old_count = 50;
    uint64_t seed = 0;
    std::string export_dir;  // when set, each iteration's adaptation set is written as JSONL
};

using BackendFactory =
    std::function<std::unique_ptr<Backend>(const std::vector<LabeledExample>& adaptation_set)>;

struct AdaptationResult {
    int m = 0;
    int s = 0;
    std::vector<std::pair<double, double>> per_iteration;  // (precision, recall) for m
    MeanStd precision, recall;
};

std::vector<AdaptationResult> run_adaptation(const AdaptationConfig& config,
                                             const BackendFactory& factory,
                                             const std::vector<LabeledExample>& dataset,
                                             const std::vector<LabeledExample>& test_set,
                                             const Umi& umi);

// The conditioned mock used by the adaptation harness: suppresses each
// configured new misconfig unless it appears in the adaptation sample.
BackendFactory conditioned_mock_factory(const std::vector<Rule>& rules, const Umi& umi,
                                        const std::vector<int>& new_misconfigs);

}  // namespace genkube
