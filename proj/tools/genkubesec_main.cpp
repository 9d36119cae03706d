// genkubesec: scan Kubernetes config files for misconfigurations, build the
// unified index and training corpora, and evaluate detectors.
//
// Exit codes: 0 clean, 1 findings, 2 usage error, 3 internal error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "genkube/dataset.hpp"
#include "genkube/detect_resolve.hpp"
#include "genkube/eval.hpp"
#include "genkube/gateway.hpp"
#include "genkube/kcf.hpp"
#include "genkube/label_codec.hpp"
#include "genkube/rules.hpp"
#include "genkube/umi.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitClean = 0;
constexpr int kExitFindings = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInternal = 3;

struct Options {
    std::string umi_path = "data/umi_reference.json";
    std::string rules_path = "data/rules_default.json";
    std::string backend = "mock-rules";
    std::string endpoint;
    std::string replay_dir;
    std::string output_dir = "out";
    uint64_t seed = 20240101;
    long token_limit = 512;
    int timeout_ms = 30000;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw genkube::IoError(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    fs::create_directories(fs::path(path).parent_path().empty()
                               ? fs::path(".")
                               : fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw genkube::IoError(path);
    out << content;
}

std::unique_ptr<genkube::Backend> make_backend(const Options& opts, const genkube::Umi& umi,
                                               const std::vector<genkube::Rule>& rules) {
    if (opts.backend == "mock-rules")
        return std::make_unique<genkube::MockRulesBackend>(rules, umi);
    if (opts.backend == "mock-replay")
        return std::make_unique<genkube::MockReplayBackend>(opts.replay_dir);
    if (opts.backend == "remote") {
        std::string endpoint = opts.endpoint;
        if (const char* env = std::getenv("GENKUBE_ENDPOINT")) endpoint = env;
        int timeout = opts.timeout_ms;
        if (const char* env = std::getenv("GENKUBE_TIMEOUT_MS")) timeout = std::atoi(env);
        std::string token;
        if (const char* env = std::getenv("GENKUBE_BEARER_TOKEN")) token = env;
        return std::make_unique<genkube::RemoteBackend>(endpoint, timeout, token);
    }
    throw CLI::ValidationError("--backend", "unknown backend: " + opts.backend);
}

std::vector<std::string> collect_files(const std::vector<std::string>& paths) {
    std::vector<std::string> files;
    for (const auto& p : paths) {
        if (fs::is_directory(p)) {
            for (const auto& entry : fs::directory_iterator(p))
                if (entry.is_regular_file()) files.push_back(entry.path().string());
        } else {
            files.push_back(p);
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

// label-set files: { "<kcf name>": ["app+52", ...], ... }
genkube::LabelSetsByKcf load_label_sets(const std::string& path, const genkube::Umi& umi) {
    auto j = json::parse(read_file(path));
    genkube::LabelSetsByKcf out;
    for (const auto& [name, labels] : j.items()) {
        genkube::LabelSet set;
        for (const auto& l : labels) {
            auto parsed = genkube::parse_labels(l.get<std::string>(), umi);
            for (const auto& label : parsed.labels.labels()) set.insert(label, umi.sentinel_id());
        }
        out[name] = std::move(set);
    }
    return out;
}

int cmd_scan(const Options& opts, const std::vector<std::string>& paths, bool use_backend,
             bool do_resolve) {
    genkube::Umi umi = genkube::load_umi(opts.umi_path);
    auto rules = genkube::load_rules(opts.rules_path);
    genkube::validate_rules(rules, umi);
    auto backend = (use_backend || do_resolve) ? make_backend(opts, umi, rules) : nullptr;

    json report = json::array();
    bool findings = false;
    for (const auto& file : collect_files(paths)) {
        json entry{{"file", file}};
        try {
            genkube::KcfDocument doc = genkube::parse_kcf(read_file(file), file);
            genkube::DetectionRecord record =
                use_backend ? genkube::detect(doc, *backend, umi)
                            : genkube::evaluate_rules(doc, rules, umi);
            json labels = json::array();
            for (const auto& l : record.labels.labels()) {
                labels.push_back({{"label", l.render()},
                                  {"description", umi.description(l.misconfig_id)}});
                if (l.misconfig_id != umi.sentinel_id()) findings = true;
            }
            entry["labels"] = labels;
            if (!record.diagnostics.empty()) entry["diagnostics"] = record.diagnostics;
            if (do_resolve && !record.labels.is_clean(umi.sentinel_id())) {
                auto reports = genkube::resolve(doc, record, umi, *backend,
                                                genkube::builtin_resolve_fewshot());
                entry["resolutions"] = json::parse(genkube::reports_to_json_text(reports));
            }
        } catch (const genkube::Error& e) {
            entry["error"] = e.what();
        }
        report.push_back(std::move(entry));
    }
    const std::string text = report.dump(2) + "\n";
    std::cout << text;
    write_file(opts.output_dir + "/scan.json", text);
    return findings ? kExitFindings : kExitClean;
}

int cmd_build_umi(const Options& opts, const std::string& draft_path,
                  const std::string& matches_path,
                  const std::vector<std::string>& override_specs) {
    auto draft_json = json::parse(read_file(draft_path));
    std::vector<genkube::DraftRule> draft;
    for (const auto& d : draft_json)
        draft.push_back({d.at("tool"), d.at("rule_id"), d.at("description")});

    std::map<std::string, std::string> matches;
    if (!matches_path.empty())
        for (const auto& [k, v] : json::parse(read_file(matches_path)).items())
            matches[k] = v.get<std::string>();

    std::vector<std::pair<std::string, int>> overrides;
    for (const auto& spec : override_specs) {
        const auto eq = spec.rfind('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--override", "expected rule_id=group, got " + spec);
        overrides.push_back({spec.substr(0, eq), std::atoi(spec.c_str() + eq + 1)});
    }

    genkube::Umi umi = genkube::merge_matches(draft, matches, overrides);
    const std::string out = opts.output_dir + "/umi.json";
    genkube::save_umi(umi, out);
    std::cout << "wrote " << out << " (" << umi.entries().size() << " entries)\n";
    return kExitClean;
}

int cmd_label(const Options& opts, const std::string& corpus_dir) {
    genkube::Umi umi = genkube::load_umi(opts.umi_path);
    auto rules = genkube::load_rules(opts.rules_path);
    genkube::validate_rules(rules, umi);
    genkube::LabeledDataset ds =
        genkube::build_labeled_dataset(corpus_dir, umi, rules, opts.token_limit);
    write_file(opts.output_dir + "/dataset.jsonl", genkube::dataset_to_jsonl(ds.examples));
    write_file(opts.output_dir + "/stats.json", genkube::stats_to_json_text(ds));
    std::cout << "labeled " << ds.examples.size() << " files ("
              << ds.excluded_over_limit << " over the token limit)\n";
    return kExitClean;
}

int cmd_build_dataset(const Options& opts, const std::string& corpus_dir, double mask_fraction) {
    genkube::Umi umi = genkube::load_umi(opts.umi_path);
    auto rules = genkube::load_rules(opts.rules_path);
    genkube::validate_rules(rules, umi);
    genkube::LabeledDataset ds =
        genkube::build_labeled_dataset(corpus_dir, umi, rules, opts.token_limit);
    genkube::SplitManifest split = genkube::make_split(ds.examples, opts.seed);
    write_file(opts.output_dir + "/split.json", genkube::split_to_json_text(split));
    genkube::export_finetune(ds.examples, split, opts.output_dir);

    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& e : ds.examples) files.push_back({e.source_name, e.kcf_content});
    genkube::ContextualDataset ctx = genkube::build_contextual(files, opts.seed, mask_fraction);
    json ctx_out = json::array();
    for (const auto& e : ctx.examples)
        ctx_out.push_back({{"variant", e.variant == genkube::ContextualVariant::Masked ? "masked" : "nsp"},
                           {"input", e.input},
                           {"target", e.target}});
    write_file(opts.output_dir + "/contextual.jsonl", [&] {
        std::string lines;
        for (const auto& e : ctx_out) lines += e.dump() + "\n";
        return lines;
    }());
    write_file(opts.output_dir + "/stats.json", genkube::stats_to_json_text(ds));
    std::cout << "dataset: " << ds.examples.size() << " examples, split "
              << split.train.size() << "/" << split.val.size() << "/" << split.test.size() << "\n";
    return kExitClean;
}

int cmd_evaluate(const Options& opts, const std::string& predictions_path,
                 const std::string& ground_truth_path, const std::vector<int>& scope,
                 double f1_floor) {
    genkube::Umi umi = genkube::load_umi(opts.umi_path);
    genkube::LabelSetsByKcf predictions = load_label_sets(predictions_path, umi);
    genkube::LabelSetsByKcf ground_truth = load_label_sets(ground_truth_path, umi);
    std::optional<std::set<int>> label_scope;
    if (!scope.empty()) label_scope = std::set<int>(scope.begin(), scope.end());
    genkube::ConfusionTally tally = genkube::tally(predictions, ground_truth, umi, label_scope);
    genkube::EvalReport report = genkube::weighted_metrics(tally);
    std::cout << genkube::report_to_table_text(report);
    write_file(opts.output_dir + "/eval.json", genkube::report_to_json_text(report));
    return report.weighted_f1.mean < f1_floor ? kExitFindings : kExitClean;
}

int cmd_resolve(const Options& opts, const std::string& file, const std::string& fewshot_path) {
    genkube::Umi umi = genkube::load_umi(opts.umi_path);
    auto rules = genkube::load_rules(opts.rules_path);
    genkube::validate_rules(rules, umi);
    auto backend = make_backend(opts, umi, rules);
    auto fewshot = fewshot_path.empty() ? genkube::builtin_resolve_fewshot()
                                        : genkube::load_resolve_fewshot(fewshot_path);

    genkube::KcfDocument doc = genkube::parse_kcf(read_file(file), file);
    genkube::DetectionRecord detection = genkube::detect(doc, *backend, umi);
    auto reports = genkube::resolve(doc, detection, umi, *backend, fewshot);
    const std::string text = genkube::reports_to_json_text(reports);
    std::cout << text;
    write_file(opts.output_dir + "/resolutions.json", text);
    return reports.empty() ? kExitClean : kExitFindings;
}

int cmd_adapt(const Options& opts, const std::string& corpus_dir,
              const std::string& test_corpus_dir, std::vector<int> new_misconfigs,
              std::vector<int> sample_sizes, int iterations) {
    genkube::Umi umi = genkube::load_umi(opts.umi_path);
    auto rules = genkube::load_rules(opts.rules_path);
    genkube::validate_rules(rules, umi);

    genkube::LabeledDataset ds =
        genkube::build_labeled_dataset(corpus_dir, umi, rules, opts.token_limit);
    genkube::LabeledDataset test =
        genkube::build_labeled_dataset(test_corpus_dir, umi, rules, opts.token_limit);

    genkube::AdaptationConfig config;
    if (!new_misconfigs.empty()) config.new_misconfigs = std::move(new_misconfigs);
    if (!sample_sizes.empty()) config.sample_sizes = std::move(sample_sizes);
    if (iterations > 0) config.iterations = iterations;
    config.seed = opts.seed;
    config.export_dir = opts.output_dir + "/adaptation";

    auto factory = genkube::conditioned_mock_factory(rules, umi, config.new_misconfigs);
    auto results = genkube::run_adaptation(config, factory, ds.examples, test.examples, umi);

    json out = json::array();
    for (const auto& r : results)
        out.push_back({{"misconfig", r.m},
                       {"sample_size", r.s},
                       {"precision_mean", r.precision.mean},
                       {"precision_std", r.precision.stddev},
                       {"recall_mean", r.recall.mean},
                       {"recall_std", r.recall.stddev}});
    const std::string text = out.dump(2) + "\n";
    std::cout << text;
    write_file(opts.output_dir + "/adaptation.json", text);
    return kExitClean;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kubernetes config misconfiguration pipeline"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may appear after the subcommand
    app.set_config("--config");

    Options opts;
    app.add_option("--umi", opts.umi_path, "unified misconfig index file");
    app.add_option("--rules", opts.rules_path, "declarative rule pack");
    app.add_option("--backend", opts.backend, "mock-rules | mock-replay | remote");
    app.add_option("--endpoint", opts.endpoint, "remote backend endpoint");
    app.add_option("--replay-dir", opts.replay_dir, "replay store directory");
    app.add_option("--seed", opts.seed, "root seed for all sampling");
    app.add_option("--token-limit", opts.token_limit, "corpus token cutoff");
    app.add_option("--out", opts.output_dir, "output directory");

    auto* scan = app.add_subcommand("scan", "detect misconfigurations in files");
    std::vector<std::string> scan_paths;
    bool scan_use_backend = false, scan_resolve = false;
    scan->add_option("paths", scan_paths, "files or directories")->required();
    scan->add_flag("--use-backend", scan_use_backend, "detect via the completion backend");
    scan->add_flag("--resolve", scan_resolve, "also produce resolution reports");

    auto* build_umi = app.add_subcommand("build-umi", "merge draft rules into a unified index");
    std::string draft_path, matches_path;
    std::vector<std::string> override_specs;
    build_umi->add_option("--draft", draft_path, "draft rule list JSON")->required();
    build_umi->add_option("--matches", matches_path, "entity match pairs JSON");
    build_umi->add_option("--override", override_specs, "manual override rule_id=group");

    auto* label = app.add_subcommand("label", "label a corpus with the rule engine");
    std::string label_corpus;
    label->add_option("--corpus", label_corpus, "corpus directory")->required();

    auto* build_dataset = app.add_subcommand("build-dataset", "build split, fine-tune and contextual sets");
    std::string dataset_corpus;
    double mask_fraction = 0.15;
    build_dataset->add_option("--corpus", dataset_corpus, "corpus directory")->required();
    build_dataset->add_option("--mask-fraction", mask_fraction, "masked-line fraction");

    auto* evaluate = app.add_subcommand("evaluate", "score predictions against ground truth");
    std::string predictions_path, ground_truth_path;
    std::vector<int> scope;
    double f1_floor = 0.0;
    evaluate->add_option("--predictions", predictions_path)->required();
    evaluate->add_option("--ground-truth", ground_truth_path)->required();
    evaluate->add_option("--scope", scope, "restrict scoring to these misconfig ids");
    evaluate->add_option("--f1-floor", f1_floor, "exit nonzero below this weighted F1");

    auto* resolve = app.add_subcommand("resolve", "localize and explain detected misconfigs");
    std::string resolve_file, fewshot_path;
    resolve->add_option("--file", resolve_file)->required();
    resolve->add_option("--fewshot", fewshot_path, "resolve few-shot examples JSON");

    auto* adapt = app.add_subcommand("adapt", "run the new-misconfig adaptation protocol");
    std::string adapt_corpus, adapt_test_corpus;
    std::vector<int> adapt_new, adapt_sizes;
    int adapt_iterations = 0;
    adapt->add_option("--corpus", adapt_corpus)->required();
    adapt->add_option("--test-corpus", adapt_test_corpus)->required();
    adapt->add_option("--new-misconfig", adapt_new, "misconfig ids treated as new");
    adapt->add_option("--sample-size", adapt_sizes, "adaptation sample sizes");
    adapt->add_option("--iterations", adapt_iterations);

    auto* encode_cmd = app.add_subcommand("encode", "encode a resource and misconfig id");
    std::string encode_resource;
    int encode_id = 0;
    encode_cmd->add_option("resource", encode_resource)->required();
    encode_cmd->add_option("id", encode_id)->required();

    auto* decode_cmd = app.add_subcommand("decode", "expand an encoded label");
    std::string decode_label;
    decode_cmd->add_option("label", decode_label)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*scan) return cmd_scan(opts, scan_paths, scan_use_backend, scan_resolve);
        if (*build_umi) return cmd_build_umi(opts, draft_path, matches_path, override_specs);
        if (*label) return cmd_label(opts, label_corpus);
        if (*build_dataset) return cmd_build_dataset(opts, dataset_corpus, mask_fraction);
        if (*evaluate)
            return cmd_evaluate(opts, predictions_path, ground_truth_path, scope, f1_floor);
        if (*resolve) return cmd_resolve(opts, resolve_file, fewshot_path);
        if (*adapt)
            return cmd_adapt(opts, adapt_corpus, adapt_test_corpus, adapt_new, adapt_sizes,
                             adapt_iterations);
        if (*encode_cmd) {
            genkube::Umi umi = genkube::load_umi(opts.umi_path);
            std::cout << genkube::encode(encode_resource, encode_id, umi).render() << "\n";
            return kExitClean;
        }
        if (*decode_cmd) {
            genkube::Umi umi = genkube::load_umi(opts.umi_path);
            auto parsed = genkube::parse_labels(decode_label, umi);
            if (parsed.labels.size() != 1) {
                std::cerr << "not a single valid label: " << decode_label << "\n";
                return kExitUsage;
            }
            genkube::DecodedLabel d = genkube::decode(*parsed.labels.labels().begin(), umi);
            std::cout << d.resource << ": " << d.description << "\n";
            return kExitClean;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const genkube::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}
