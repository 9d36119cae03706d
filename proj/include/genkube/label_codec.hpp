#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "genkube/umi.hpp"

namespace genkube {

// Compressed class label, rendered as `<resource>+<id>`, e.g. "app+52".
struct EncodedLabel {
    std::string resource;
    int misconfig_id = 0;

    std::string render() const { return resource + "+" + std::to_string(misconfig_id); }
    auto operator<=>(const EncodedLabel&) const = default;
};

struct DecodedLabel {
    std::string resource;
    std::string description;
};

// Deduplicated label set for one KCF. The sentinel never co-occurs with a real
// label; inserting a real label evicts the sentinel and vice versa is rejected.
class LabelSet {
  public:
    LabelSet() = default;

    void insert(const EncodedLabel& label, int sentinel_id);
    bool is_clean(int sentinel_id) const;
    bool empty() const { return labels_.empty(); }
    size_t size() const { return labels_.size(); }
    bool contains(const EncodedLabel& l) const { return labels_.count(l) != 0; }
    const std::set<EncodedLabel>& labels() const { return labels_; }

    bool operator==(const LabelSet&) const = default;

  private:
    std::set<EncodedLabel> labels_;
};

// metadata.name lowercased with non-alphanumerics collapsed to '-'; empty
// result is rejected upstream (callers fall back to the resource kind).
std::string sanitize_resource_token(const std::string& raw);

EncodedLabel encode(const std::string& resource, int misconfig_id, const Umi& umi);
DecodedLabel decode(const EncodedLabel& label, const Umi& umi);

struct ParsedLabels {
    LabelSet labels;
    std::vector<std::string> diagnostics;
};

// Extracts every well-formed `resource+id` token from arbitrary generated
// text; `*`-`$` record framing is accepted and stripped. Unknown ids and
// malformed tokens become diagnostics, never failures.
ParsedLabels parse_labels(const std::string& generated, const Umi& umi);

// Training-export rendering: labels sorted by (resource, id), each framed as
// `*resource+id$`, joined with single spaces.
std::string render_framed(const LabelSet& set);

}  // namespace genkube
