#include "genkube/label_codec.hpp"

#include <cctype>
#include <sstream>

namespace genkube {

void LabelSet::insert(const EncodedLabel& label, int sentinel_id) {
    if (label.misconfig_id == sentinel_id) {
        if (!labels_.empty() && !is_clean(sentinel_id)) return;  // real labels win
        labels_.clear();
        labels_.insert(label);
        return;
    }
    // A real label evicts any sentinel placeholder.
    if (is_clean(sentinel_id)) labels_.clear();
    labels_.insert(label);
}

bool LabelSet::is_clean(int sentinel_id) const {
    return labels_.size() == 1 && labels_.begin()->misconfig_id == sentinel_id;
}

std::string sanitize_resource_token(const std::string& raw) {
    std::string out;
    bool pending_dash = false;
    for (char c : raw) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            if (pending_dash && !out.empty()) out += '-';
            pending_dash = false;
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else {
            pending_dash = true;
        }
    }
    return out;
}

EncodedLabel encode(const std::string& resource, int misconfig_id, const Umi& umi) {
    if (!umi.contains(misconfig_id)) throw UnknownId(misconfig_id);
    const std::string token = sanitize_resource_token(resource);
    if (token.empty()) throw IllegalResourceToken(resource);
    return EncodedLabel{token, misconfig_id};
}

DecodedLabel decode(const EncodedLabel& label, const Umi& umi) {
    return DecodedLabel{label.resource, umi.description(label.misconfig_id)};
}

namespace {

bool is_token_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
}

}  // namespace

ParsedLabels parse_labels(const std::string& generated, const Umi& umi) {
    ParsedLabels out;
    size_t i = 0;
    const size_t n = generated.size();
    size_t found = 0;
    while (i < n) {
        const size_t plus = generated.find('+', i);
        if (plus == std::string::npos || plus == 0) break;
        // Resource token runs backwards from the '+'.
        size_t start = plus;
        while (start > 0 && is_token_char(generated[start - 1])) --start;
        // Id runs forward from the '+'.
        size_t end = plus + 1;
        while (end < n && std::isdigit(static_cast<unsigned char>(generated[end]))) ++end;
        i = plus + 1;
        if (start == plus || end == plus + 1) {
            out.diagnostics.push_back("malformed token around offset " + std::to_string(plus));
            continue;
        }
        const std::string resource = generated.substr(start, plus - start);
        const int id = std::stoi(generated.substr(plus + 1, end - plus - 1));
        ++found;
        if (!umi.contains(id)) {
            out.diagnostics.push_back("unknown misconfig id " + std::to_string(id));
            continue;
        }
        const EncodedLabel label{sanitize_resource_token(resource), id};
        if (out.labels.contains(label)) {
            out.diagnostics.push_back("duplicate label collapsed: " + label.render());
            continue;
        }
        out.labels.insert(label, umi.sentinel_id());
        i = end;
    }
    if (found == 0) out.diagnostics.push_back("no labels found");
    return out;
}

std::string render_framed(const LabelSet& set) {
    std::ostringstream out;
    bool first = true;
    for (const auto& l : set.labels()) {  // std::set orders by (resource, id)
        if (!first) out << ' ';
        out << '*' << l.render() << '$';
        first = false;
    }
    return out.str();
}

}  // namespace genkube
