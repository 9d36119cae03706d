#include "genkube/gateway.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "genkube/label_codec.hpp"

namespace genkube {

namespace fs = std::filesystem;
using nlohmann::json;

std::atomic<uint64_t>& network_call_count() {
    static std::atomic<uint64_t> count{0};
    return count;
}

std::optional<std::string> extract_fenced_kcf(const std::string& prompt) {
    const size_t open = prompt.rfind(kKcfFenceOpen);
    if (open == std::string::npos) return std::nullopt;
    const size_t body = open + std::string(kKcfFenceOpen).size();
    const size_t close = prompt.find(kKcfFenceClose, body);
    if (close == std::string::npos) return std::nullopt;
    return prompt.substr(body, close - body);
}

namespace {

std::optional<std::string> marker_line(const std::string& text, const char* marker) {
    const size_t at = text.find(marker);
    if (at == std::string::npos) return std::nullopt;
    const size_t start = at + std::string(marker).size();
    const size_t end = text.find('\n', start);
    return text.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

std::string trim(const std::string& s) {
    const size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

MockRulesBackend::MockRulesBackend(std::vector<Rule> rules, const Umi& umi,
                                   std::set<int> suppressed_ids)
    : rules_(std::move(rules)), umi_(umi), suppressed_(std::move(suppressed_ids)) {
    validate_rules(rules_, umi_);
}

std::string MockRulesBackend::complete(const CompletionRequest& request) {
    const std::string& haystack = request.system_prompt + "\n" + request.prompt;
    if (haystack.find(kErrorNumberMarker) != std::string::npos) return complete_resolution(request);
    return complete_detection(request);
}

std::string MockRulesBackend::complete_detection(const CompletionRequest& request) {
    const auto kcf = extract_fenced_kcf(request.prompt);
    if (!kcf) return "";
    KcfDocument doc;
    try {
        doc = parse_kcf(*kcf, "prompt-embedded");
    } catch (const Error&) {
        return "";
    }
    DetectionRecord record = evaluate_rules(doc, rules_, umi_);
    if (!suppressed_.empty()) {
        std::set<int> visible;
        for (const auto& r : rules_)
            if (!suppressed_.count(r.umi_id)) visible.insert(r.umi_id);
        record = filter_to_scope(record, visible, umi_);
    }
    return render_framed(record.labels);
}

std::string MockRulesBackend::complete_resolution(const CompletionRequest& request) {
    const std::string haystack = request.system_prompt + "\n" + request.prompt;
    const auto id_text = marker_line(haystack, kErrorNumberMarker);
    if (!id_text) throw FormatError("resolve prompt lacks an error number");
    const int id = std::stoi(trim(*id_text));

    const auto kcf = extract_fenced_kcf(request.prompt);
    if (!kcf) throw FormatError("resolve prompt carries no KCF");
    const KcfDocument doc = parse_kcf(*kcf, "prompt-embedded");

    std::vector<Rule> scoped;
    for (const auto& r : rules_)
        if (r.umi_id == id) scoped.push_back(r);
    if (scoped.empty()) throw NoEvidence(id);

    const DetectionRecord record = evaluate_rules(doc, scoped, umi_);
    const Evidence* hit = nullptr;
    for (const auto& e : record.evidence)
        if (e.label.misconfig_id == id) { hit = &e; break; }
    if (!hit) throw NoEvidence(id);

    std::string rationale;
    for (const auto& r : scoped)
        if (!r.rationale.empty()) { rationale = r.rationale; break; }
    if (rationale.empty()) rationale = umi_.description(id);

    json out;
    if (hit->line) {
        out["line_number"] = *hit->line;
        out["line_text"] = trim(doc.raw_lines.at(static_cast<size_t>(*hit->line - 1)));
        out["explanation"] = umi_.description(id);
        out["fix_suggestion"] = rationale;
    } else {
        out["line_number"] = kAbsentLine;
        out["line_text"] = "";
        out["explanation"] = umi_.description(id) + " (required setting is absent at " +
                             hit->key_path + ")";
        out["fix_suggestion"] = "Add the missing setting at " + hit->key_path + ". " + rationale;
    }
    out["error_number"] = id;
    return out.dump();
}

MockReplayBackend::MockReplayBackend(std::string store_dir) : store_dir_(std::move(store_dir)) {}

std::string MockReplayBackend::request_hash(const CompletionRequest& request) {
    // FNV-1a 64, stable across runs and platforms.
    std::string material = request.system_prompt + "\x1f" + request.prompt + "\x1f" +
                           std::to_string(request.max_output_units) + "\x1f" +
                           std::to_string(request.temperature) + "\x1f" +
                           (request.seed ? std::to_string(*request.seed) : "-");
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : material) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream hex;
    hex << std::hex << h;
    return hex.str();
}

std::string MockReplayBackend::complete(const CompletionRequest& request) {
    const std::string hash = request_hash(request);
    std::ifstream in(fs::path(store_dir_) / (hash + ".txt"), std::ios::binary);
    if (!in) throw ReplayMiss(hash);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void MockReplayBackend::store(const CompletionRequest& request, const std::string& completion) {
    fs::create_directories(store_dir_);
    const std::string path = (fs::path(store_dir_) / (request_hash(request) + ".txt")).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path);
    out << completion;
}

RemoteBackend::RemoteBackend(std::string endpoint, int timeout_ms, std::string bearer_token)
    : endpoint_(std::move(endpoint)), timeout_ms_(timeout_ms), bearer_token_(std::move(bearer_token)) {}

std::string RemoteBackend::complete(const CompletionRequest& request) {
    json body{{"system", request.system_prompt},
              {"prompt", request.prompt},
              {"max_tokens", request.max_output_units},
              {"temperature", request.temperature}};
    if (request.seed) body["seed"] = *request.seed;

    // Split "<scheme://host:port><base>" into client target and path.
    std::string base = endpoint_;
    std::string path = "/complete";
    const size_t scheme = base.find("://");
    if (scheme != std::string::npos) {
        const size_t slash = base.find('/', scheme + 3);
        if (slash != std::string::npos) {
            path = base.substr(slash) + "/complete";
            base = base.substr(0, slash);
        }
    }

    httplib::Client client(base);
    client.set_connection_timeout(0, timeout_ms_ * 1000);
    client.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
    httplib::Headers headers;
    if (!bearer_token_.empty()) headers.emplace("Authorization", "Bearer " + bearer_token_);

    // One retry on timeout, none on HTTP errors.
    for (int attempt = 0; attempt < 2; ++attempt) {
        network_call_count()++;
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            if (attempt == 0) continue;
            throw Timeout(timeout_ms_);
        }
        if (res->status < 200 || res->status >= 300) throw HttpError(res->status);
        try {
            return json::parse(res->body).at("text").get<std::string>();
        } catch (const json::exception&) {
            throw HttpError(res->status);
        }
    }
    throw Timeout(timeout_ms_);
}

}  // namespace genkube
