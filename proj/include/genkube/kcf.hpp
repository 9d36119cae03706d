#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "genkube/errors.hpp"

namespace genkube {

enum class NodeKind { Scalar, Mapping, Sequence };

struct NodeInfo {
    NodeKind kind = NodeKind::Scalar;
    std::string value;  // scalar rendering; empty for mapping/sequence markers
    int line = 0;       // 1-based line of the node's key (or item start)
};

// One `---`-separated manifest inside a KCF. Key-paths are slash-separated,
// list indices rendered as bracketed integers, e.g. spec/containers/[0]/image.
struct ResourceTree {
    std::string kind;                       // empty when the document lacks `kind`
    std::optional<std::string> name;        // metadata.name
    std::map<std::string, NodeInfo> nodes;  // key-path -> node
};

enum class TokenEstimator { Whitespace, BytesOver4 };

struct KcfDocument {
    std::string source_name;
    std::vector<std::string> raw_lines;  // 1-based addressing via raw_lines[i-1]
    std::vector<ResourceTree> documents;
    long token_estimate = 0;
    std::vector<std::string> diagnostics;  // malformed sub-documents, duplicate keys, missing kinds

    // Joining raw_lines reproduces the parser input byte-for-byte.
    std::string rejoin() const;
};

KcfDocument parse_kcf(const std::string& text, const std::string& source_name,
                      TokenEstimator estimator = TokenEstimator::Whitespace);

// Exact-path lookup across all sub-documents; absence is a value, not an error.
std::optional<std::pair<std::string, int>> lookup(const KcfDocument& doc, const std::string& path);
std::optional<NodeInfo> lookup_node(const ResourceTree& tree, const std::string& path);

long estimate_tokens(const std::string& text, TokenEstimator estimator = TokenEstimator::Whitespace);

}  // namespace genkube
