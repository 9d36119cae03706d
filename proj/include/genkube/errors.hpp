#pragma once

#include <stdexcept>
#include <string>

namespace genkube {

// Base class for all typed failures raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyInput : Error {
    EmptyInput() : Error("input text is empty") {}
};

struct MalformedYaml : Error {
    int line;  // 1-based line of the first parse failure
    explicit MalformedYaml(int line_, const std::string& what_)
        : Error("malformed YAML at line " + std::to_string(line_) + ": " + what_), line(line_) {}
};

struct FormatError : Error {
    int line;
    explicit FormatError(const std::string& msg, int line_ = 0) : Error(msg), line(line_) {}
};

struct DuplicateId : Error {
    int id;
    explicit DuplicateId(int id_) : Error("duplicate UMI id " + std::to_string(id_)), id(id_) {}
};

struct DuplicateDescription : Error {
    explicit DuplicateDescription(const std::string& d) : Error("duplicate UMI description: " + d) {}
};

struct MissingSentinel : Error {
    MissingSentinel() : Error("UMI has no clean-file sentinel entry") {}
};

struct UnknownId : Error {
    int id;
    explicit UnknownId(int id_) : Error("unknown UMI id " + std::to_string(id_)), id(id_) {}
};

struct IllegalResourceToken : Error {
    explicit IllegalResourceToken(const std::string& t) : Error("illegal resource token: '" + t + "'") {}
};

struct EmptyList : Error {
    explicit EmptyList(const std::string& which) : Error(which + " list is empty") {}
};

struct NoDictionaryFound : Error {
    NoDictionaryFound() : Error("completion contains no dictionary block") {}
};

struct ConflictingOverride : Error {
    explicit ConflictingOverride(const std::string& rule)
        : Error("conflicting manual overrides for source rule '" + rule + "'") {}
};

struct ToolNotFound : Error {
    explicit ToolNotFound(const std::string& tool) : Error("external tool not found: " + tool) {}
};

struct ToolCrashed : Error {
    int exit_status;
    ToolCrashed(const std::string& tool, int status)
        : Error("external tool " + tool + " exited with status " + std::to_string(status)),
          exit_status(status) {}
};

struct UnparseableReport : Error {
    explicit UnparseableReport(const std::string& tool) : Error("unparseable report from " + tool) {}
};

struct MixedSources : Error {
    MixedSources(const std::string& a, const std::string& b)
        : Error("cannot ensemble records for different KCFs: '" + a + "' vs '" + b + "'") {}
};

struct EmptyCorpus : Error {
    EmptyCorpus() : Error("no parseable files in corpus") {}
};

struct TooSmall : Error {
    explicit TooSmall(size_t n) : Error("dataset too small to split: " + std::to_string(n)) {}
};

struct Timeout : Error {
    explicit Timeout(int ms) : Error("backend timed out after " + std::to_string(ms) + " ms") {}
};

struct HttpError : Error {
    int status;
    explicit HttpError(int status_) : Error("backend returned HTTP " + std::to_string(status_)), status(status_) {}
};

struct ReplayMiss : Error {
    std::string hash;
    explicit ReplayMiss(const std::string& h) : Error("no replay entry for request hash " + h), hash(h) {}
};

struct NoEvidence : Error {
    explicit NoEvidence(int id) : Error("no rule evidence for UMI id " + std::to_string(id)) {}
};

struct EmptyTrainset : Error {
    EmptyTrainset() : Error("few-shot training set is empty") {}
};

struct KeyMismatch : Error {
    explicit KeyMismatch(const std::string& k) : Error("prediction/ground-truth key mismatch: " + k) {}
};

struct ZeroSupport : Error {
    ZeroSupport() : Error("ground truth has zero total support") {}
};

struct NoFps : Error {
    NoFps() : Error("no false positives to audit") {}
};

struct InsufficientExamples : Error {
    InsufficientExamples(int m, int s)
        : Error("dataset has fewer than " + std::to_string(s) + " examples of misconfig " + std::to_string(m)) {}
};

struct IoError : Error {
    explicit IoError(const std::string& path) : Error("I/O failure on " + path) {}
};

}  // namespace genkube
