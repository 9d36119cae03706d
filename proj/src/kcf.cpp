#include "genkube/kcf.hpp"

#include <yaml-cpp/yaml.h>

#include <cctype>
#include <sstream>

namespace genkube {

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    size_t start = 0;
    while (true) {
        size_t nl = text.find('\n', start);
        if (nl == std::string::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

bool is_doc_separator(const std::string& line) {
    return line == "---" || line.rfind("--- ", 0) == 0 || line == "---\r";
}

bool is_blank_or_comment(const std::string& line) {
    for (char c : line) {
        if (c == '#') return true;
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

void erase_subtree(ResourceTree& tree, const std::string& path) {
    tree.nodes.erase(path);
    const std::string prefix = path + "/";
    auto it = tree.nodes.lower_bound(prefix);
    while (it != tree.nodes.end() && it->first.rfind(prefix, 0) == 0) it = tree.nodes.erase(it);
}

// Records every node of `node` under `path`, with lines shifted by line_offset
// (the chunk's 1-based position in the whole file).
void walk(const YAML::Node& node, const std::string& path, int line_offset, ResourceTree& tree,
          std::vector<std::string>& diagnostics, const std::string& source_name) {
    if (node.IsMap()) {
        if (!path.empty())
            tree.nodes[path] = NodeInfo{NodeKind::Mapping, "", line_offset + node.Mark().line};
        for (auto it : node) {
            const std::string key = it.first.Scalar();
            const std::string child_path = path.empty() ? key : path + "/" + key;
            const int key_line = line_offset + it.first.Mark().line;
            if (tree.nodes.count(child_path)) {
                diagnostics.push_back(source_name + ": duplicate key '" + child_path + "' at line " +
                                      std::to_string(key_line) + ", keeping last occurrence");
                erase_subtree(tree, child_path);
            }
            if (it.second.IsScalar() || it.second.IsNull()) {
                tree.nodes[child_path] =
                    NodeInfo{NodeKind::Scalar, it.second.IsNull() ? "" : it.second.Scalar(), key_line};
            } else {
                walk(it.second, child_path, line_offset, tree, diagnostics, source_name);
                // The collection marker keeps the key's own line, not the value's.
                auto found = tree.nodes.find(child_path);
                if (found != tree.nodes.end()) found->second.line = key_line;
            }
        }
    } else if (node.IsSequence()) {
        if (!path.empty())
            tree.nodes[path] = NodeInfo{NodeKind::Sequence, "", line_offset + node.Mark().line};
        int i = 0;
        for (auto item : node) {
            const std::string child_path = path + "/[" + std::to_string(i) + "]";
            if (item.IsScalar() || item.IsNull()) {
                tree.nodes[child_path] = NodeInfo{NodeKind::Scalar, item.IsNull() ? "" : item.Scalar(),
                                                  line_offset + item.Mark().line};
            } else {
                walk(item, child_path, line_offset, tree, diagnostics, source_name);
            }
            ++i;
        }
    } else if (node.IsScalar() && !path.empty()) {
        tree.nodes[path] = NodeInfo{NodeKind::Scalar, node.Scalar(), line_offset + node.Mark().line};
    }
}

struct Chunk {
    std::string text;
    int start_line;  // 1-based line of the chunk's first line
};

std::vector<Chunk> split_documents(const std::vector<std::string>& lines) {
    std::vector<Chunk> chunks;
    std::string current;
    int start = 1;
    int lineno = 0;
    for (const auto& line : lines) {
        ++lineno;
        if (is_doc_separator(line)) {
            chunks.push_back({current, start});
            current.clear();
            start = lineno + 1;
            continue;
        }
        current += line;
        current += '\n';
    }
    chunks.push_back({current, start});
    return chunks;
}

}  // namespace

std::string KcfDocument::rejoin() const {
    std::string out;
    for (size_t i = 0; i < raw_lines.size(); ++i) {
        if (i) out += '\n';
        out += raw_lines[i];
    }
    return out;
}

long estimate_tokens(const std::string& text, TokenEstimator estimator) {
    switch (estimator) {
        case TokenEstimator::Whitespace: {
            long count = 0;
            bool in_token = false;
            for (char c : text) {
                const bool ws = std::isspace(static_cast<unsigned char>(c));
                if (!ws && !in_token) ++count;
                in_token = !ws;
            }
            return count;
        }
        case TokenEstimator::BytesOver4:
            return static_cast<long>((text.size() + 3) / 4);
    }
    return 0;
}

KcfDocument parse_kcf(const std::string& text, const std::string& source_name,
                      TokenEstimator estimator) {
    bool all_blank = true;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) { all_blank = false; break; }
    if (all_blank) throw EmptyInput{};

    KcfDocument doc;
    doc.source_name = source_name;
    doc.raw_lines = split_lines(text);
    doc.token_estimate = estimate_tokens(text, estimator);

    std::optional<MalformedYaml> first_error;
    for (const auto& chunk : split_documents(doc.raw_lines)) {
        bool has_content = false;
        for (const auto& line : split_lines(chunk.text))
            if (!is_blank_or_comment(line)) { has_content = true; break; }
        if (!has_content) continue;

        try {
            YAML::Node root = YAML::Load(chunk.text);
            if (!root.IsMap()) {
                doc.diagnostics.push_back(source_name + ": document at line " +
                                          std::to_string(chunk.start_line) +
                                          " is not a mapping, skipped");
                continue;
            }
            ResourceTree tree;
            walk(root, "", chunk.start_line, tree, doc.diagnostics, source_name);
            if (auto kind = lookup_node(tree, "kind"); kind && kind->kind == NodeKind::Scalar) {
                tree.kind = kind->value;
            } else {
                doc.diagnostics.push_back(source_name + ": document at line " +
                                          std::to_string(chunk.start_line) + " lacks 'kind'");
            }
            if (auto name = lookup_node(tree, "metadata/name"); name && !name->value.empty())
                tree.name = name->value;
            doc.documents.push_back(std::move(tree));
        } catch (const YAML::Exception& e) {
            const int line = chunk.start_line + e.mark.line;
            doc.diagnostics.push_back(source_name + ": parse failure at line " +
                                      std::to_string(line) + ": " + e.msg);
            if (!first_error) first_error = MalformedYaml(line, e.msg);
        }
    }

    if (doc.documents.empty() && first_error) throw *first_error;
    return doc;
}

std::optional<NodeInfo> lookup_node(const ResourceTree& tree, const std::string& path) {
    auto it = tree.nodes.find(path);
    if (it == tree.nodes.end()) return std::nullopt;
    return it->second;
}

std::optional<std::pair<std::string, int>> lookup(const KcfDocument& doc, const std::string& path) {
    for (const auto& tree : doc.documents)
        if (auto node = lookup_node(tree, path)) return std::make_pair(node->value, node->line);
    return std::nullopt;
}

}  // namespace genkube
