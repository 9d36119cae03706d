#include "genkube/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include <json.hpp>

#include "genkube/detect_resolve.hpp"

namespace genkube {

namespace fs = std::filesystem;
using nlohmann::json;

ConfusionTally tally(const LabelSetsByKcf& predictions, const LabelSetsByKcf& ground_truth,
                     const Umi& umi, const std::optional<std::set<int>>& label_scope) {
    for (const auto& [k, v] : predictions)
        if (!ground_truth.count(k)) throw KeyMismatch(k);
    for (const auto& [k, v] : ground_truth)
        if (!predictions.count(k)) throw KeyMismatch(k);

    std::set<int> universe;
    if (label_scope) {
        universe = *label_scope;
        universe.erase(umi.sentinel_id());
    } else {
        for (const auto& e : umi.entries())
            if (e.id != umi.sentinel_id()) universe.insert(e.id);
    }

    auto in_scope = [&](int id) { return universe.count(id) != 0; };

    ConfusionTally t;
    for (int id : universe) {
        t.per_label[id];
        t.support[id] = 0;
    }

    for (const auto& [kcf, gt_set] : ground_truth) {
        const LabelSet& pred_set = predictions.at(kcf);

        std::set<EncodedLabel> pred, gt;
        for (const auto& l : pred_set.labels()) {
            if (l.misconfig_id == umi.sentinel_id()) continue;
            if (!umi.contains(l.misconfig_id)) { ++t.unknown_fp; continue; }
            if (in_scope(l.misconfig_id)) pred.insert(l);
        }
        for (const auto& l : gt_set.labels())
            if (l.misconfig_id != umi.sentinel_id() && in_scope(l.misconfig_id)) gt.insert(l);

        if (pred_set.is_clean(umi.sentinel_id()) && gt_set.is_clean(umi.sentinel_id()))
            ++t.consensus_clean;

        std::set<int> touched;
        for (const auto& l : gt) {
            ++t.support[l.misconfig_id];
            touched.insert(l.misconfig_id);
            if (pred.count(l)) ++t.per_label[l.misconfig_id].tp;
            else ++t.per_label[l.misconfig_id].fn;
        }
        for (const auto& l : pred) {
            touched.insert(l.misconfig_id);
            if (!gt.count(l)) ++t.per_label[l.misconfig_id].fp;
        }
        for (int id : universe)
            if (!touched.count(id)) ++t.per_label[id].tn;
    }
    return t;
}

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd out;
    if (values.empty()) return out;
    double sum = 0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    double sq = 0;
    for (double v : values) sq += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(sq / static_cast<double>(values.size()));
    return out;
}

EvalReport weighted_metrics(const ConfusionTally& t) {
    long total_support = 0;
    for (const auto& [id, s] : t.support) total_support += s;
    if (total_support == 0) throw ZeroSupport{};

    EvalReport report;
    double wp = 0, wr = 0, wf = 0;
    for (const auto& [id, c] : t.per_label) {
        const long support = t.support.count(id) ? t.support.at(id) : 0;
        if (support == 0) continue;  // support-0 labels carry no weight
        PerLabelMetrics m;
        m.support = support;
        m.precision = (c.tp + c.fp) == 0 ? 1.0
                                         : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
        m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
        m.f1 = (m.precision + m.recall) == 0.0 ? 0.0
                                               : 2.0 * m.precision * m.recall / (m.precision + m.recall);
        report.per_label_metrics[id] = m;
        const double w = static_cast<double>(support);
        wp += w * m.precision;
        wr += w * m.recall;
        wf += w * m.f1;
    }
    report.n_labels_covered = report.per_label_metrics.size();
    const double w_total = static_cast<double>(total_support);
    report.weighted_precision.mean = wp / w_total;
    report.weighted_recall.mean = wr / w_total;
    report.weighted_f1.mean = wf / w_total;

    // The +/- figure is the support-weighted standard deviation of the
    // per-label scores around the weighted mean.
    auto weighted_std = [&](auto pick, double mu) {
        double acc = 0;
        for (const auto& [id, m] : report.per_label_metrics) {
            const double d = pick(m) - mu;
            acc += static_cast<double>(m.support) * d * d;
        }
        return std::sqrt(acc / w_total);
    };
    report.weighted_precision.stddev =
        weighted_std([](const PerLabelMetrics& m) { return m.precision; }, report.weighted_precision.mean);
    report.weighted_recall.stddev =
        weighted_std([](const PerLabelMetrics& m) { return m.recall; }, report.weighted_recall.mean);
    report.weighted_f1.stddev =
        weighted_std([](const PerLabelMetrics& m) { return m.f1; }, report.weighted_f1.mean);
    return report;
}

std::string report_to_json_text(const EvalReport& report) {
    json per_label = json::object();
    for (const auto& [id, m] : report.per_label_metrics)
        per_label[std::to_string(id)] = {{"precision", m.precision},
                                         {"recall", m.recall},
                                         {"f1", m.f1},
                                         {"support", m.support}};
    json j{{"weighted_precision", {{"mean", report.weighted_precision.mean},
                                   {"stddev", report.weighted_precision.stddev}}},
           {"weighted_recall", {{"mean", report.weighted_recall.mean},
                                {"stddev", report.weighted_recall.stddev}}},
           {"weighted_f1", {{"mean", report.weighted_f1.mean},
                            {"stddev", report.weighted_f1.stddev}}},
           {"stddev_semantics", "support-weighted standard deviation of per-label scores"},
           {"n_labels_covered", report.n_labels_covered},
           {"per_label", per_label}};
    return j.dump(2) + "\n";
}

std::string report_to_table_text(const EvalReport& report) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << "metric              mean     +/-\n";
    out << "weighted precision  " << report.weighted_precision.mean << "   " << report.weighted_precision.stddev << "\n";
    out << "weighted recall     " << report.weighted_recall.mean << "   " << report.weighted_recall.stddev << "\n";
    out << "weighted F1         " << report.weighted_f1.mean << "   " << report.weighted_f1.stddev << "\n";
    out << "labels covered      " << report.n_labels_covered << "\n";
    out << "(+/- is the support-weighted standard deviation of per-label scores)\n";
    return out.str();
}

std::string AuditCard::markdown() const {
    std::ostringstream out;
    out << "# FP review: " << kcf << "\n\n";
    out << "Labels flagged by the detector but not by the ground truth:\n\n";
    for (size_t i = 0; i < fp_labels.size(); ++i) {
        out << "- `" << fp_labels[i].render() << "` " << descriptions[i] << "\n";
        out << "  - verdict: \n";
    }
    return out.str();
}

AuditBundle audit_fps(const LabelSetsByKcf& predictions, const LabelSetsByKcf& ground_truth,
                      const Umi& umi, size_t sample_size, uint64_t seed) {
    std::vector<std::string> fp_kcfs;
    for (const auto& [kcf, pred] : predictions) {
        auto it = ground_truth.find(kcf);
        if (it == ground_truth.end()) throw KeyMismatch(kcf);
        for (const auto& l : pred.labels()) {
            if (l.misconfig_id == umi.sentinel_id()) continue;
            if (!it->second.contains(l)) { fp_kcfs.push_back(kcf); break; }
        }
    }
    if (fp_kcfs.empty()) throw NoFps{};

    std::sort(fp_kcfs.begin(), fp_kcfs.end());
    std::mt19937_64 rng(seed);
    std::shuffle(fp_kcfs.begin(), fp_kcfs.end(), rng);
    fp_kcfs.resize(std::min(sample_size, fp_kcfs.size()));
    std::sort(fp_kcfs.begin(), fp_kcfs.end());

    AuditBundle bundle;
    for (const auto& kcf : fp_kcfs) {
        AuditCard card;
        card.kcf = kcf;
        const LabelSet& gt = ground_truth.at(kcf);
        for (const auto& l : predictions.at(kcf).labels()) {
            if (l.misconfig_id == umi.sentinel_id()) continue;
            if (gt.contains(l)) {
                ++bundle.sample_tp_count;
            } else {
                card.fp_labels.push_back(l);
                card.descriptions.push_back(umi.contains(l.misconfig_id)
                                                ? umi.description(l.misconfig_id)
                                                : "(id not in the index)");
                ++bundle.sample_fp_count;
            }
        }
        bundle.cards.push_back(std::move(card));
    }
    return bundle;
}

AdjustedPrecision apply_audit(const AuditBundle& bundle,
                              const std::set<std::pair<std::string, std::string>>& verdicts) {
    AdjustedPrecision out;
    for (const auto& card : bundle.cards)
        for (const auto& l : card.fp_labels) {
            if (verdicts.count({card.kcf, l.render()})) ++out.flipped;
            else ++out.remaining_fp;
        }
    const long total_fp = out.flipped + out.remaining_fp;
    out.flip_rate = total_fp == 0 ? 0.0 : static_cast<double>(out.flipped) / static_cast<double>(total_fp);
    const long tp = bundle.sample_tp_count + out.flipped;
    out.adjusted_precision =
        (tp + out.remaining_fp) == 0 ? 1.0
                                     : static_cast<double>(tp) / static_cast<double>(tp + out.remaining_fp);
    return out;
}

LabelSetsByKcf perturb_predictions(const LabelSetsByKcf& ground_truth, double q, uint64_t seed,
                                   const Umi& umi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    LabelSetsByKcf out;
    for (const auto& [kcf, gt] : ground_truth) {
        LabelSet kept;
        std::string token = "file";
        for (const auto& l : gt.labels()) {
            token = l.resource;
            if (l.misconfig_id == umi.sentinel_id()) continue;
            if (coin(rng) >= q) kept.insert(l, umi.sentinel_id());
        }
        if (kept.empty()) kept.insert({token, umi.sentinel_id()}, umi.sentinel_id());
        out[kcf] = kept;
    }
    return out;
}

namespace {

std::vector<size_t> seeded_sample(std::vector<size_t> pool, size_t count, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(std::min(count, pool.size()));
    return pool;
}

}  // namespace

std::vector<AdaptationResult> run_adaptation(const AdaptationConfig& config,
                                             const BackendFactory& factory,
                                             const std::vector<LabeledExample>& dataset,
                                             const std::vector<LabeledExample>& test_set,
                                             const Umi& umi) {
    auto has_label = [&](const LabeledExample& ex, int id) {
        for (const auto& l : ex.labels.labels())
            if (l.misconfig_id == id) return true;
        return false;
    };
    auto has_any_new = [&](const LabeledExample& ex) {
        for (int m : config.new_misconfigs)
            if (has_label(ex, m)) return true;
        return false;
    };

    // The fixed `old' set is drawn once and reused by every iteration.
    std::vector<size_t> old_pool;
    for (size_t i = 0; i < dataset.size(); ++i)
        if (!has_any_new(dataset[i])) old_pool.push_back(i);
    const std::vector<size_t> fixed_old =
        seeded_sample(old_pool, config.fixed_old_count, config.seed);

    std::vector<AdaptationResult> results;
    for (int m : config.new_misconfigs) {
        std::vector<size_t> m_pool;
        for (size_t i = 0; i < dataset.size(); ++i)
            if (has_label(dataset[i], m)) m_pool.push_back(i);

        for (int s : config.sample_sizes) {
            if (m_pool.size() < static_cast<size_t>(s)) throw InsufficientExamples(m, s);
            AdaptationResult result;
            result.m = m;
            result.s = s;
            for (int i = 1; i <= config.iterations; ++i) {
                const uint64_t sub_seed = config.seed ^ (static_cast<uint64_t>(m) << 32) ^
                                          (static_cast<uint64_t>(s) << 16) ^ static_cast<uint64_t>(i);
                std::vector<LabeledExample> adaptation;
                for (size_t idx : fixed_old) adaptation.push_back(dataset[idx]);
                for (size_t idx : seeded_sample(m_pool, static_cast<size_t>(s), sub_seed))
                    adaptation.push_back(dataset[idx]);

                if (!config.export_dir.empty()) {
                    fs::create_directories(config.export_dir);
                    const std::string path =
                        (fs::path(config.export_dir) /
                         ("adaptation_m" + std::to_string(m) + "_s" + std::to_string(s) + "_i" +
                          std::to_string(i) + ".jsonl"))
                            .string();
                    std::ofstream out(path, std::ios::binary);
                    if (!out) throw IoError(path);
                    out << dataset_to_jsonl(adaptation);
                }

                auto backend = factory(adaptation);
                LabelSetsByKcf predictions, ground_truth;
                for (const auto& ex : test_set) {
                    const KcfDocument doc = parse_kcf(ex.kcf_content, ex.source_name);
                    predictions[ex.source_name] = detect(doc, *backend, umi).labels;
                    ground_truth[ex.source_name] = ex.labels;
                }
                const ConfusionTally t =
                    tally(predictions, ground_truth, umi, std::set<int>{m});
                const LabelCounts& c = t.per_label.at(m);
                const double precision =
                    (c.tp + c.fp) == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
                const double recall =
                    (c.tp + c.fn) == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
                result.per_iteration.emplace_back(precision, recall);
            }

            std::vector<double> ps, rs;
            for (const auto& [p, r] : result.per_iteration) { ps.push_back(p); rs.push_back(r); }
            result.precision = mean_std(ps);
            result.recall = mean_std(rs);
            results.push_back(std::move(result));
        }
    }
    return results;
}

BackendFactory conditioned_mock_factory(const std::vector<Rule>& rules, const Umi& umi,
                                        const std::vector<int>& new_misconfigs) {
    return [rules, &umi, new_misconfigs](const std::vector<LabeledExample>& adaptation_set)
               -> std::unique_ptr<Backend> {
        std::set<int> suppressed(new_misconfigs.begin(), new_misconfigs.end());
        for (const auto& ex : adaptation_set)
            for (const auto& l : ex.labels.labels()) suppressed.erase(l.misconfig_id);
        return std::make_unique<MockRulesBackend>(rules, umi, suppressed);
    };
}

}  // namespace genkube
