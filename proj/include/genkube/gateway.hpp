#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <set>
#include <string>

#include "genkube/rules.hpp"
#include "genkube/umi.hpp"

namespace genkube {

struct CompletionRequest {
    std::string system_prompt;
    std::string prompt;
    int max_output_units = 512;
    double temperature = 0.0;
    std::optional<uint64_t> seed;
};

// Prompt framing shared between the orchestrator and the mock backends: the
// KCF under inspection is the last fenced block, and resolve prompts name the
// queried misconfig with these markers.
inline const char* kKcfFenceOpen = "```yaml\n";
inline const char* kKcfFenceClose = "```";
inline const char* kMisconfigMarker = "Misconfiguration: ";
inline const char* kErrorNumberMarker = "Error number: ";

// The absent-line marker used when a misconfig has no line to point at.
inline constexpr int kAbsentLine = -1;

// Counts real network operations; mock backends never touch it.
std::atomic<uint64_t>& network_call_count();

class Backend {
  public:
    virtual ~Backend() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
    virtual std::string kind() const = 0;
};

// Deterministic oracle: answers detection prompts from the internal rule
// engine and resolve prompts from rule evidence. Conditioning via
// suppressed_ids makes it behave like a model that has not seen those labels.
class MockRulesBackend : public Backend {
  public:
    MockRulesBackend(std::vector<Rule> rules, const Umi& umi, std::set<int> suppressed_ids = {});

    std::string complete(const CompletionRequest& request) override;
    std::string kind() const override { return "mock-rules"; }

    // Five-field resolution object for a resolve prompt; throws NoEvidence
    // when no internal rule backs the queried misconfig on this KCF.
    std::string complete_resolution(const CompletionRequest& request);

  private:
    std::string complete_detection(const CompletionRequest& request);

    std::vector<Rule> rules_;
    const Umi& umi_;
    std::set<int> suppressed_;
};

// Returns canned completions keyed by a stable hash of the request.
class MockReplayBackend : public Backend {
  public:
    explicit MockReplayBackend(std::string store_dir);

    std::string complete(const CompletionRequest& request) override;
    std::string kind() const override { return "mock-replay"; }

    void store(const CompletionRequest& request, const std::string& completion);
    static std::string request_hash(const CompletionRequest& request);

  private:
    std::string store_dir_;
};

class RemoteBackend : public Backend {
  public:
    RemoteBackend(std::string endpoint, int timeout_ms = 30000, std::string bearer_token = "");

    std::string complete(const CompletionRequest& request) override;
    std::string kind() const override { return "remote"; }

  private:
    std::string endpoint_;
    int timeout_ms_;
    std::string bearer_token_;
};

// Last fenced KCF block in a prompt; nullopt when the prompt carries none.
std::optional<std::string> extract_fenced_kcf(const std::string& prompt);

}  // namespace genkube
