#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "genkube/detect_resolve.hpp"
#include "genkube/eval.hpp"
#include "test_support.hpp"

using namespace genkube;
using testsupport::default_rules;
using testsupport::reference_umi;

namespace {

LabelSet make_set(const std::vector<std::pair<std::string, int>>& labels) {
    const Umi& umi = reference_umi();
    LabelSet set;
    if (labels.empty()) {
        set.insert({"file", umi.sentinel_id()}, umi.sentinel_id());
        return set;
    }
    for (const auto& [r, id] : labels) set.insert({r, id}, umi.sentinel_id());
    return set;
}

// Brute-force reference: enumerate every (kcf, label) pair over the scoped
// universe and classify it directly.
ConfusionTally brute_force(const LabelSetsByKcf& predictions, const LabelSetsByKcf& ground_truth,
                           const Umi& umi, const std::set<int>& scope) {
    ConfusionTally t;
    for (int id : scope) {
        t.per_label[id];
        t.support[id] = 0;
    }
    for (const auto& [kcf, truth] : ground_truth) {
        const LabelSet& pred = predictions.at(kcf);
        std::set<std::pair<std::string, int>> truth_pairs, pred_pairs;
        for (const auto& l : truth.labels())
            if (l.misconfig_id != umi.sentinel_id() && scope.count(l.misconfig_id))
                truth_pairs.insert({l.resource, l.misconfig_id});
        for (const auto& l : pred.labels())
            if (l.misconfig_id != umi.sentinel_id() && scope.count(l.misconfig_id))
                pred_pairs.insert({l.resource, l.misconfig_id});

        for (const auto& p : truth_pairs) {
            t.support[p.second]++;
            if (pred_pairs.count(p)) t.per_label[p.second].tp++;
            else t.per_label[p.second].fn++;
        }
        for (const auto& p : pred_pairs)
            if (!truth_pairs.count(p)) t.per_label[p.second].fp++;
        std::set<int> touched;
        for (const auto& p : truth_pairs) touched.insert(p.second);
        for (const auto& p : pred_pairs) touched.insert(p.second);
        for (int id : scope)
            if (!touched.count(id)) t.per_label[id].tn++;
        if (truth.is_clean(umi.sentinel_id()) && pred.is_clean(umi.sentinel_id()))
            t.consensus_clean++;
    }
    return t;
}

bool same_counts(const ConfusionTally& a, const ConfusionTally& b) {
    for (const auto& [id, c] : b.per_label) {
        auto it = a.per_label.find(id);
        const LabelCounts got = it == a.per_label.end() ? LabelCounts{} : it->second;
        if (got.tp != c.tp || got.fp != c.fp || got.fn != c.fn || got.tn != c.tn) return false;
    }
    for (const auto& [id, s] : b.support) {
        auto it = a.support.find(id);
        if ((it == a.support.end() ? 0 : it->second) != s) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("identical predictions produce no errors anywhere") {
    LabelSetsByKcf truth;
    for (int i = 0; i < 5; ++i)
        truth["f" + std::to_string(i)] = make_set({{"app", 52}, {"app", 9}});
    ConfusionTally t = tally(truth, truth, reference_umi());
    for (const auto& [id, c] : t.per_label) {
        CHECK(c.fp == 0);
        CHECK(c.fn == 0);
    }
    CHECK(t.per_label.at(52).tp == 5);
    for (const auto& [id, s] : t.support)
        CHECK(t.per_label.at(id).tp + t.per_label.at(id).fn == s);
}

TEST_CASE("an overlooked label is a false negative") {
    LabelSetsByKcf truth{{"f", make_set({{"a", 1}})}};
    LabelSetsByKcf pred{{"f", make_set({})}};
    ConfusionTally t = tally(pred, truth, reference_umi());
    CHECK(t.per_label.at(1).fn == 1);
    CHECK(t.per_label.at(1).tp == 0);
}

TEST_CASE("mismatched file sets are rejected") {
    LabelSetsByKcf truth{{"f", make_set({})}};
    LabelSetsByKcf pred{{"g", make_set({})}};
    CHECK_THROWS_AS(tally(pred, truth, reference_umi()), KeyMismatch);
    LabelSetsByKcf extra{{"f", make_set({})}, {"h", make_set({})}};
    CHECK_THROWS_AS(tally(extra, truth, reference_umi()), KeyMismatch);
}

TEST_CASE("a hand-built four-file case matches exhaustive enumeration") {
    LabelSetsByKcf truth{
        {"a", make_set({{"x", 1}, {"x", 2}})},
        {"b", make_set({{"y", 2}})},
        {"c", make_set({})},
        {"d", make_set({{"z", 3}, {"w", 1}})},
    };
    LabelSetsByKcf pred{
        {"a", make_set({{"x", 1}})},            // one fn
        {"b", make_set({{"y", 2}, {"y", 3}})},  // one fp
        {"c", make_set({})},                    // consensus clean
        {"d", make_set({{"z", 3}, {"w", 2}})},  // fn on (w,1), fp on (w,2)
    };
    const std::set<int> scope{1, 2, 3};
    ConfusionTally t = tally(pred, truth, reference_umi(), scope);
    CHECK(same_counts(t, brute_force(pred, truth, reference_umi(), scope)));
    CHECK(t.per_label.at(1).tp == 1);
    CHECK(t.per_label.at(1).fn == 1);
    CHECK(t.per_label.at(2).fp == 1);
    CHECK(t.per_label.at(3).fp == 1);
    CHECK(t.consensus_clean == 1);
}

TEST_CASE("randomized corpora agree with the brute-force oracle") {
    const Umi& umi = reference_umi();
    std::mt19937_64 rng(2024);
    const std::vector<int> ids{1, 2, 3, 5, 8, 13, 21, 34, 55, 89};
    for (int trial = 0; trial < 50; ++trial) {
        LabelSetsByKcf truth, pred;
        const size_t files = 1 + rng() % 20;
        for (size_t f = 0; f < files; ++f) {
            const std::string name = "f" + std::to_string(f);
            std::vector<std::pair<std::string, int>> t_labels, p_labels;
            for (int id : ids) {
                if (rng() % 3 == 0) t_labels.push_back({"r" + std::to_string(rng() % 3), id});
                if (rng() % 3 == 0) p_labels.push_back({"r" + std::to_string(rng() % 3), id});
            }
            truth[name] = make_set(t_labels);
            pred[name] = make_set(p_labels);
        }
        const std::set<int> scope(ids.begin(), ids.end());
        CHECK(same_counts(tally(pred, truth, umi, scope), brute_force(pred, truth, umi, scope)));
    }
}

TEST_CASE("predicted ids outside the index are surfaced separately") {
    LabelSetsByKcf truth{{"f", make_set({{"a", 1}})}};
    LabelSetsByKcf pred{{"f", make_set({{"a", 1}, {"a", 9999}})}};
    ConfusionTally t = tally(pred, truth, reference_umi());
    CHECK(t.unknown_fp == 1);
    CHECK(t.per_label.count(9999) == 0);
}

TEST_CASE("narrowing the scope never increases errors inside it") {
    LabelSetsByKcf truth{{"f", make_set({{"a", 1}, {"a", 2}})}, {"g", make_set({{"b", 3}})}};
    LabelSetsByKcf pred{{"f", make_set({{"a", 2}, {"a", 3}})}, {"g", make_set({})}};
    ConfusionTally wide = tally(pred, truth, reference_umi());
    ConfusionTally narrow = tally(pred, truth, reference_umi(), std::set<int>{1, 3});
    for (int id : {1, 3}) {
        CHECK(narrow.per_label.at(id).fp <= wide.per_label.at(id).fp);
        CHECK(narrow.per_label.at(id).fn <= wide.per_label.at(id).fn);
    }
}

TEST_CASE("perfect predictions score one with zero spread") {
    LabelSetsByKcf truth;
    for (int i = 0; i < 6; ++i)
        truth["f" + std::to_string(i)] = make_set({{"app", 52}, {"app", 9 + i}});
    EvalReport report = weighted_metrics(tally(truth, truth, reference_umi()));
    CHECK(report.weighted_precision.mean == 1.0);
    CHECK(report.weighted_recall.mean == 1.0);
    CHECK(report.weighted_f1.mean == 1.0);
    CHECK(report.weighted_precision.stddev == 0.0);
    CHECK(report.weighted_f1.stddev == 0.0);
}

TEST_CASE("support weighting follows direct arithmetic") {
    // label 1: support 3, all recalled; label 2: support 1, missed.
    LabelSetsByKcf truth{{"a", make_set({{"x", 1}})},
                         {"b", make_set({{"x", 1}})},
                         {"c", make_set({{"x", 1}})},
                         {"d", make_set({{"x", 2}})}};
    LabelSetsByKcf pred{{"a", make_set({{"x", 1}})},
                        {"b", make_set({{"x", 1}})},
                        {"c", make_set({{"x", 1}})},
                        {"d", make_set({})}};
    EvalReport report = weighted_metrics(tally(pred, truth, reference_umi()));
    CHECK(report.weighted_recall.mean == doctest::Approx(0.75).epsilon(1e-12));
    // weighted std of per-label recalls (1.0, 0.0) with weights (3, 1)
    const double mean = 0.75;
    const double var = (3 * (1.0 - mean) * (1.0 - mean) + 1 * (0.0 - mean) * (0.0 - mean)) / 4.0;
    CHECK(report.weighted_recall.stddev == doctest::Approx(std::sqrt(var)).epsilon(1e-12));

    ConfusionTally empty;
    CHECK_THROWS_AS(weighted_metrics(empty), ZeroSupport);
}

TEST_CASE("labels never predicted and never present do not dilute the scores") {
    LabelSetsByKcf truth{{"a", make_set({{"x", 1}})}};
    LabelSetsByKcf pred{{"a", make_set({{"x", 1}})}};
    EvalReport report = weighted_metrics(tally(pred, truth, reference_umi()));
    CHECK(report.n_labels_covered == 1);
    CHECK(report.weighted_precision.mean == 1.0);
}

TEST_CASE("reports serialize with labeled spread semantics") {
    LabelSetsByKcf truth{{"a", make_set({{"x", 1}})}};
    EvalReport report = weighted_metrics(tally(truth, truth, reference_umi()));
    auto j = nlohmann::json::parse(report_to_json_text(report));
    CHECK(j.contains("weighted_precision"));
    CHECK(j.dump().find("support-weighted") != std::string::npos);
    const std::string table = report_to_table_text(report);
    CHECK(table.find("support-weighted") != std::string::npos);
}

TEST_CASE("mean and population standard deviation") {
    MeanStd ms = mean_std({0.2, 0.4, 0.6});
    CHECK(ms.mean == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(ms.stddev == doctest::Approx(std::sqrt(0.08 / 3.0)).epsilon(1e-12));
}

TEST_CASE("auditing requires false positives") {
    LabelSetsByKcf truth{{"a", make_set({{"x", 1}})}};
    CHECK_THROWS_AS(audit_fps(truth, truth, reference_umi(), 10, 1), NoFps);
}

TEST_CASE("audit flow reproduces a flip-rate recomputation") {
    // 100 files with sentinel ground truth and 489 predicted labels: 89 files
    // carry 5 wrong labels, 11 carry 4.
    LabelSetsByKcf truth, pred;
    for (int f = 0; f < 100; ++f) {
        const std::string name = "f" + std::to_string(f);
        truth[name] = make_set({});
        std::vector<std::pair<std::string, int>> labels;
        const int n = f < 89 ? 5 : 4;
        for (int k = 0; k < n; ++k) labels.push_back({"app", 10 + k});
        pred[name] = make_set(labels);
    }
    AuditBundle bundle = audit_fps(pred, truth, reference_umi(), 100, 7);
    CHECK(bundle.cards.size() == 100);
    CHECK(bundle.sample_fp_count == 489);
    CHECK(bundle.sample_tp_count == 0);
    CHECK(bundle.cards[0].markdown().find("+10") != std::string::npos);

    std::set<std::pair<std::string, std::string>> verdicts;
    for (const auto& card : bundle.cards) {
        for (const auto& l : card.fp_labels) {
            if (verdicts.size() == 408) break;
            verdicts.insert({card.kcf, l.render()});
        }
    }
    AdjustedPrecision adjusted = apply_audit(bundle, verdicts);
    CHECK(adjusted.flipped == 408);
    CHECK(adjusted.remaining_fp == 81);
    CHECK(adjusted.flip_rate == doctest::Approx(408.0 / 489.0).epsilon(1e-12));
    CHECK(adjusted.flip_rate == doctest::Approx(0.8344).epsilon(1e-3));
    CHECK(adjusted.adjusted_precision == doctest::Approx(408.0 / 489.0).epsilon(1e-12));

    std::set<std::pair<std::string, std::string>> all;
    for (const auto& card : bundle.cards)
        for (const auto& l : card.fp_labels) all.insert({card.kcf, l.render()});
    AdjustedPrecision perfect = apply_audit(bundle, all);
    CHECK(perfect.remaining_fp == 0);
    CHECK(perfect.adjusted_precision == 1.0);
}

TEST_CASE("perturbation deletes labels at the requested rate") {
    const Umi& umi = reference_umi();
    LabelSetsByKcf truth;
    for (int f = 0; f < 300; ++f)
        truth["f" + std::to_string(f)] = make_set({{"a", 1}, {"a", 2}, {"a", 3}, {"a", 5}});

    LabelSetsByKcf untouched = perturb_predictions(truth, 0.0, 9, umi);
    for (const auto& [k, v] : untouched) CHECK(v == truth.at(k));

    LabelSetsByKcf erased = perturb_predictions(truth, 1.0, 9, umi);
    for (const auto& [k, v] : erased) CHECK(v.is_clean(umi.sentinel_id()));

    LabelSetsByKcf half = perturb_predictions(truth, 0.5, 9, umi);
    size_t kept = 0;
    for (const auto& [k, v] : half)
        for (const auto& l : v.labels())
            if (l.misconfig_id != umi.sentinel_id()) ++kept;
    CHECK(kept > 450);
    CHECK(kept < 750);
}

namespace {

LabeledExample rule_labeled(const std::string& name, const std::string& content) {
    KcfDocument doc = parse_kcf(content, name);
    DetectionRecord record = evaluate_rules(doc, default_rules(), reference_umi());
    LabeledExample e;
    e.source_name = name;
    e.kcf_content = content;
    e.labels = record.labels;
    e.token_estimate = doc.token_estimate;
    return e;
}

std::string old_pod(int i) {
    return "apiVersion: v1\nkind: Pod\nmetadata:\n  name: old-" + std::to_string(i) +
           "\n  namespace: prod\nspec:\n  containers:\n    - name: c\n      image: img:1." +
           std::to_string(i) + "\n";
}

std::string pod_with(const std::string& name, int m, int variant) {
    std::string head = "apiVersion: v1\nkind: Pod\nmetadata:\n  name: " + name +
                       "\n  namespace: prod\nspec:\n";
    std::string containers = "  containers:\n    - name: c\n      image: img:1." +
                             std::to_string(variant) + "\n";
    switch (m) {
        case 51:
            return "apiVersion: rbac.authorization.k8s.io/v1\nkind: Role\nmetadata:\n  name: " +
                   name + "\n  namespace: prod\nrules:\n  - apiGroups:\n      - \"v" +
                   std::to_string(variant) + "\"\n    resources:\n      - pods\n    verbs:\n"
                   "      - \"*\"\n";
        case 97:
            return head + "  containers:\n    - name: c\n      image: img:1." +
                   std::to_string(variant) +
                   "\n      securityContext:\n        capabilities:\n          add:\n"
                   "            - SYS_ADMIN\n";
        case 103:
            return head + containers +
                   "  volumes:\n    - name: v\n      hostPath:\n        path: /data/" +
                   std::to_string(variant) + "\n";
        case 139:
            return head + "  hostNetwork: true\n" + containers;
        case 140:
            return head + "  containers:\n    - name: c\n      image: img" +
                   std::to_string(variant) + ":latest\n";
    }
    return head + containers;
}

}  // namespace

TEST_CASE("the adaptation runner walks the full protocol grid") {
    std::vector<LabeledExample> dataset;
    for (int i = 0; i < 60; ++i) dataset.push_back(rule_labeled("old" + std::to_string(i), old_pod(i)));
    const std::vector<int> new_ids{51, 97, 103, 139, 140};
    for (int m : new_ids)
        for (int v = 0; v < 6; ++v) {
            const std::string name = "new" + std::to_string(m) + "-" + std::to_string(v);
            dataset.push_back(rule_labeled(name, pod_with(name, m, v)));
        }
    std::vector<LabeledExample> test_set;
    for (int m : new_ids)
        for (int v = 10; v < 12; ++v) {
            const std::string name = "test" + std::to_string(m) + "-" + std::to_string(v);
            test_set.push_back(rule_labeled(name, pod_with(name, m, v)));
        }

    AdaptationConfig config;
    config.seed = 17;
    config.export_dir = "/tmp/genkube_adaptation";
    std::filesystem::remove_all(config.export_dir);

    auto factory = conditioned_mock_factory(default_rules(), reference_umi(), config.new_misconfigs);
    auto results = run_adaptation(config, factory, dataset, test_set, reference_umi());

    REQUIRE(results.size() == 15);  // 5 misconfigs x 3 sample sizes
    for (const auto& r : results) {
        CHECK(r.per_iteration.size() == 10);
        CHECK(r.recall.mean == 1.0);  // the conditioned mock learns from one example
        CHECK(r.precision.mean == 1.0);
        CHECK(r.recall.stddev == 0.0);
    }

    // each exported adaptation set holds the fixed 50 plus the s sampled files
    for (const auto& r : results) {
        const std::string path = config.export_dir + "/adaptation_m" + std::to_string(r.m) +
                                 "_s" + std::to_string(r.s) + "_i1.jsonl";
        std::ifstream in(path);
        REQUIRE_MESSAGE(in.good(), path);
        size_t lines = 0;
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) ++lines;
        CHECK(lines == 50 + static_cast<size_t>(r.s));
    }
}

TEST_CASE("asking for more fresh examples than exist is an error") {
    std::vector<LabeledExample> dataset;
    for (int i = 0; i < 55; ++i) dataset.push_back(rule_labeled("old" + std::to_string(i), old_pod(i)));
    dataset.push_back(rule_labeled("lone140", pod_with("lone140", 140, 1)));
    std::vector<LabeledExample> test_set{rule_labeled("t", pod_with("t", 140, 2))};

    AdaptationConfig config;
    config.new_misconfigs = {140};
    config.sample_sizes = {5};
    CHECK_THROWS_AS(
        run_adaptation(config, conditioned_mock_factory(default_rules(), reference_umi(), {140}),
                       dataset, test_set, reference_umi()),
        InsufficientExamples);
}

TEST_CASE("adaptation aggregation matches hand arithmetic") {
    // (0.1, 0.2, ..., 1.0) -> mean 0.55, population std sqrt(0.0825)
    std::vector<double> scores;
    for (int i = 1; i <= 10; ++i) scores.push_back(i / 10.0);
    MeanStd ms = mean_std(scores);
    CHECK(ms.mean == doctest::Approx(0.55).epsilon(1e-12));
    CHECK(ms.stddev == doctest::Approx(std::sqrt(0.0825)).epsilon(1e-12));
}
