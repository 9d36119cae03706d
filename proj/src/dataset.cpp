#include "genkube/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace genkube {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError(p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<fs::path> sorted_files(const std::string& dir) {
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file()) paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());
    return paths;
}

}  // namespace

LabeledDataset label_corpus(const std::vector<std::pair<std::string, std::string>>& files,
                            const Umi& umi, const std::vector<Rule>& rules, long token_limit,
                            TokenEstimator estimator) {
    validate_rules(rules, umi);
    LabeledDataset ds;
    size_t parsed = 0;
    for (const auto& [name, content] : files) {
        KcfDocument doc;
        try {
            doc = parse_kcf(content, name, estimator);
        } catch (const Error& e) {
            ds.diagnostics.push_back(name + ": " + e.what());
            continue;
        }
        ++parsed;
        if (token_limit > 0 && doc.token_estimate > token_limit) {
            ++ds.excluded_over_limit;
            continue;
        }
        const DetectionRecord record = evaluate_rules(doc, rules, umi);
        LabeledExample ex{content, name, record.labels, doc.token_estimate};
        for (const auto& l : ex.labels.labels()) ++ds.label_frequencies[l.misconfig_id];
        ds.examples.push_back(std::move(ex));
    }
    if (parsed == 0) throw EmptyCorpus{};
    return ds;
}

LabeledDataset build_labeled_dataset(const std::string& corpus_dir, const Umi& umi,
                                     const std::vector<Rule>& rules, long token_limit,
                                     TokenEstimator estimator) {
    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& p : sorted_files(corpus_dir)) files.emplace_back(p.string(), read_file(p));
    if (files.empty()) throw EmptyCorpus{};
    return label_corpus(files, umi, rules, token_limit, estimator);
}

SplitManifest make_split(const std::vector<LabeledExample>& dataset, uint64_t seed,
                         SplitRatios ratios) {
    const size_t n = dataset.size();
    if (n < 10) throw TooSmall(n);

    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const size_t n_val = static_cast<size_t>(std::lround(static_cast<double>(n) * ratios.val));
    const size_t n_test = static_cast<size_t>(std::lround(static_cast<double>(n) * ratios.test));
    const size_t n_train = n - n_val - n_test;

    SplitManifest m;
    m.seed = seed;
    for (size_t i = 0; i < n; ++i) {
        const std::string& name = dataset[order[i]].source_name;
        if (i < n_train) m.train.push_back(name);
        else if (i < n_train + n_val) m.val.push_back(name);
        else m.test.push_back(name);
    }
    return m;
}

std::string split_to_json_text(const SplitManifest& m) {
    json j{{"seed", m.seed}, {"train", m.train}, {"val", m.val}, {"test", m.test}};
    return j.dump(2) + "\n";
}

SplitManifest split_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("split manifest is not valid JSON: ") + e.what());
    }
    SplitManifest m;
    m.seed = j.at("seed").get<uint64_t>();
    m.train = j.at("train").get<std::vector<std::string>>();
    m.val = j.at("val").get<std::vector<std::string>>();
    m.test = j.at("test").get<std::vector<std::string>>();
    return m;
}

namespace {

// Real content lines: a trailing empty element from a final newline is not a
// maskable unit.
size_t unit_count(const std::vector<std::string>& lines) {
    size_t n = lines.size();
    if (n > 0 && lines.back().empty()) --n;
    return n;
}

std::string mask_line(const std::string& line) {
    const size_t colon = line.find(':');
    if (colon != std::string::npos) {
        const std::string suffix = line.substr(colon + 1);
        if (suffix.find_first_not_of(" \t") != std::string::npos)
            return line.substr(0, colon + 1) + " " + kMaskToken;
    }
    size_t content = line.find_first_not_of(" \t");
    if (content == std::string::npos) return line;
    if (line.compare(content, 2, "- ") == 0) content += 2;
    return line.substr(0, content) + kMaskToken;
}

}  // namespace

ContextualDataset build_contextual(const std::vector<std::pair<std::string, std::string>>& files,
                                   uint64_t seed, double mask_fraction) {
    ContextualDataset out;
    uint64_t file_index = 0;
    for (const auto& [name, content] : files) {
        ++file_index;
        if (content.find_first_not_of(" \t\r\n") == std::string::npos) {
            out.diagnostics.push_back(name + ": empty document, skipped");
            continue;
        }
        if (content.find(kMaskToken) != std::string::npos) {
            out.diagnostics.push_back(name + ": contains the mask token literal, skipped");
            continue;
        }

        std::vector<std::string> lines;
        size_t start = 0;
        while (true) {
            const size_t nl = content.find('\n', start);
            if (nl == std::string::npos) { lines.push_back(content.substr(start)); break; }
            lines.push_back(content.substr(start, nl - start));
            start = nl + 1;
        }
        const size_t units = unit_count(lines);

        // Masked variant: a fixed round(fraction * units) lines, sampled
        // without replacement, keeps the realized rate at the target.
        const size_t n_masked = static_cast<size_t>(
            std::lround(mask_fraction * static_cast<double>(units)));
        std::vector<size_t> idx(units);
        for (size_t i = 0; i < units; ++i) idx[i] = i;
        std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + file_index);
        std::shuffle(idx.begin(), idx.end(), rng);
        std::set<size_t> chosen(idx.begin(), idx.begin() + std::min(n_masked, units));

        std::string masked;
        for (size_t i = 0; i < lines.size(); ++i) {
            if (i) masked += '\n';
            masked += chosen.count(i) ? mask_line(lines[i]) : lines[i];
        }
        out.examples.push_back({ContextualVariant::Masked, masked, content});

        // NSP variant: byte-exact split at the start of the midpoint line.
        if (units >= 2) {
            const size_t mid = units / 2;
            size_t pos = 0;
            for (size_t i = 0; i < mid; ++i) pos = content.find('\n', pos) + 1;
            out.examples.push_back(
                {ContextualVariant::Nsp, content.substr(0, pos), content.substr(pos)});
        } else {
            out.diagnostics.push_back(name + ": too short for an NSP pair");
        }
    }
    return out;
}

std::vector<LabeledExample> stratified_sample(const std::vector<LabeledExample>& dataset,
                                              size_t per_label_count, uint64_t seed,
                                              int sentinel_id) {
    std::map<int, std::vector<size_t>> by_label;
    for (size_t i = 0; i < dataset.size(); ++i)
        for (const auto& l : dataset[i].labels.labels())
            if (l.misconfig_id != sentinel_id) by_label[l.misconfig_id].push_back(i);

    std::set<size_t> selected;
    for (const auto& [id, candidates] : by_label) {
        size_t have = 0;
        for (size_t i : candidates)
            if (selected.count(i)) ++have;
        if (have >= per_label_count) continue;

        std::vector<size_t> remaining;
        for (size_t i : candidates)
            if (!selected.count(i)) remaining.push_back(i);
        std::mt19937_64 rng(seed * 1000003ULL + static_cast<uint64_t>(id));
        std::shuffle(remaining.begin(), remaining.end(), rng);
        for (size_t k = 0; k < remaining.size() && have < per_label_count; ++k, ++have)
            selected.insert(remaining[k]);
    }

    std::vector<LabeledExample> out;
    for (size_t i : selected) out.push_back(dataset[i]);
    return out;
}

std::string dataset_to_jsonl(const std::vector<LabeledExample>& dataset) {
    std::string out;
    for (const auto& ex : dataset) {
        json j{{"source_name", ex.source_name},
               {"input", ex.kcf_content},
               {"output", render_framed(ex.labels)},
               {"token_estimate", ex.token_estimate}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<std::string> export_finetune(const std::vector<LabeledExample>& dataset,
                                         const SplitManifest& split, const std::string& out_dir) {
    std::map<std::string, const LabeledExample*> by_name;
    for (const auto& ex : dataset) by_name[ex.source_name] = &ex;

    fs::create_directories(out_dir);
    std::vector<std::string> written;
    const std::pair<const char*, const std::vector<std::string>*> partitions[] = {
        {"train", &split.train}, {"val", &split.val}, {"test", &split.test}};
    for (const auto& [part, names] : partitions) {
        const std::string path = (fs::path(out_dir) / (std::string(part) + ".jsonl")).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError(path);
        for (const auto& name : *names) {
            auto it = by_name.find(name);
            if (it == by_name.end()) continue;
            json j{{"input", it->second->kcf_content}, {"output", render_framed(it->second->labels)}};
            out << j.dump() << '\n';
        }
        written.push_back(path);
    }
    return written;
}

std::string stats_to_json_text(const LabeledDataset& ds) {
    json freq = json::object();
    for (const auto& [id, count] : ds.label_frequencies) freq[std::to_string(id)] = count;
    json j{{"examples", ds.examples.size()},
           {"excluded_over_limit", ds.excluded_over_limit},
           {"label_frequencies", freq},
           {"diagnostics", ds.diagnostics}};
    return j.dump(2) + "\n";
}

std::vector<std::string> load_free_text(const std::string& dir) {
    std::vector<std::string> docs;
    for (const auto& p : sorted_files(dir)) docs.push_back(read_file(p));
    return docs;
}

}  // namespace genkube
