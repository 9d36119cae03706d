#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "genkube/kcf.hpp"
#include "test_support.hpp"

using namespace genkube;
using testsupport::fixture_path;
using testsupport::read_file;

static const std::string kSparsePod = read_file(fixture_path("kcfs/privileged_sparse_pod.yaml"));

TEST_CASE("privileged pod parses into one tree with line-accurate paths") {
    KcfDocument doc = parse_kcf(kSparsePod, "pod.yaml");
    REQUIRE(doc.documents.size() == 1);
    CHECK(doc.documents[0].kind == "Pod");
    CHECK(doc.documents[0].name == "pod-name");

    auto hit = lookup(doc, "spec/securityContext/privileged");
    REQUIRE(hit.has_value());
    CHECK(hit->first == "true");
    CHECK(hit->second == 11);
}

TEST_CASE("lookup of absent paths returns nothing") {
    KcfDocument doc = parse_kcf(kSparsePod, "pod.yaml");
    CHECK_FALSE(lookup(doc, "spec/replicas").has_value());
    CHECK_FALSE(lookup(doc, "metadata/namespace").has_value());
}

TEST_CASE("sequence indices address container fields") {
    KcfDocument doc = parse_kcf(kSparsePod, "pod.yaml");
    auto hit = lookup(doc, "spec/containers/[0]/image");
    REQUIRE(hit.has_value());
    CHECK(hit->first == "some-image");
    CHECK(hit->second == 8);
}

TEST_CASE("empty and blank inputs are rejected") {
    CHECK_THROWS_AS(parse_kcf("", "x"), EmptyInput);
    CHECK_THROWS_AS(parse_kcf("   \n\n  \n", "x"), EmptyInput);
    CHECK_THROWS_AS(parse_kcf(read_file(fixture_path("kcfs/empty.yaml")), "x"), EmptyInput);
}

TEST_CASE("a file where no document parses reports the malformed position") {
    const std::string text = read_file(fixture_path("kcfs/malformed.yaml"));
    CHECK_THROWS_AS(parse_kcf(text, "broken.yaml"), MalformedYaml);
}

TEST_CASE("a malformed sub-document becomes a diagnostic, not a silent drop") {
    const std::string good = "apiVersion: v1\nkind: Pod\nmetadata:\n  name: ok\n";
    const std::string bad = "metadata:\n  [unclosed\n";
    KcfDocument doc = parse_kcf(good + "---\n" + bad, "mix.yaml");
    CHECK(doc.documents.size() == 1);
    REQUIRE_FALSE(doc.diagnostics.empty());
}

TEST_CASE("two-document files keep both trees with strictly increasing lines") {
    KcfDocument doc = parse_kcf(read_file(fixture_path("kcfs/multi_document.yaml")), "multi.yaml");
    REQUIRE(doc.documents.size() == 2);
    int max_first = 0, min_second = 1 << 30;
    for (const auto& [path, node] : doc.documents[0].nodes) max_first = std::max(max_first, node.line);
    for (const auto& [path, node] : doc.documents[1].nodes) min_second = std::min(min_second, node.line);
    CHECK(min_second > max_first);
}

TEST_CASE("rejoin reproduces every fixture byte-for-byte") {
    for (const auto& name : testsupport::labeled_fixture_names()) {
        const std::string text = read_file(fixture_path("kcfs/" + name));
        KcfDocument doc = parse_kcf(text, name);
        CHECK_MESSAGE(doc.rejoin() == text, name);
    }
}

TEST_CASE("recorded line numbers point at lines containing their key") {
    for (const auto& name : testsupport::labeled_fixture_names()) {
        const std::string text = read_file(fixture_path("kcfs/" + name));
        KcfDocument doc = parse_kcf(text, name);
        for (const auto& tree : doc.documents) {
            for (const auto& [path, node] : tree.nodes) {
                REQUIRE(node.line >= 1);
                REQUIRE(node.line <= static_cast<int>(doc.raw_lines.size()));
                const auto slash = path.rfind('/');
                const std::string leaf = slash == std::string::npos ? path : path.substr(slash + 1);
                if (leaf.front() == '[') continue;  // list items carry no key text
                CHECK_MESSAGE(doc.raw_lines[node.line - 1].find(leaf) != std::string::npos,
                              name, " ", path, " line ", node.line);
            }
        }
    }
}

TEST_CASE("lookup is pure") {
    KcfDocument doc = parse_kcf(kSparsePod, "pod.yaml");
    auto a = lookup(doc, "spec/securityContext/privileged");
    auto b = lookup(doc, "spec/securityContext/privileged");
    CHECK(a == b);
}

TEST_CASE("duplicate keys keep the last occurrence and emit a diagnostic") {
    const std::string text =
        "apiVersion: v1\nkind: Pod\nmetadata:\n  name: one\n  name: two\nspec: {}\n";
    KcfDocument doc = parse_kcf(text, "dup.yaml");
    REQUIRE(doc.documents.size() == 1);
    auto hit = lookup(doc, "metadata/name");
    REQUIRE(hit.has_value());
    CHECK(hit->first == "two");
    bool noted = std::any_of(doc.diagnostics.begin(), doc.diagnostics.end(), [](const std::string& d) {
        return d.find("duplicate") != std::string::npos;
    });
    CHECK(noted);
}

TEST_CASE("JSON manifests parse like YAML") {
    KcfDocument doc =
        parse_kcf(read_file(fixture_path("kcfs/json_format_pod.json")), "pod.json");
    REQUIRE(doc.documents.size() == 1);
    CHECK(doc.documents[0].kind == "Pod");
    auto hit = lookup(doc, "spec/securityContext/privileged");
    REQUIRE(hit.has_value());
    CHECK(hit->first == "true");
}

TEST_CASE("documents without kind are flagged but kept") {
    KcfDocument doc = parse_kcf("metadata:\n  name: odd\n", "nokind.yaml");
    REQUIRE(doc.documents.size() == 1);
    CHECK(doc.documents[0].kind.empty());
    CHECK_FALSE(doc.diagnostics.empty());
}

TEST_CASE("token estimation") {
    CHECK(estimate_tokens("") == 0);
    CHECK(estimate_tokens("a b c") == 3);
    CHECK(estimate_tokens("abcdefgh", TokenEstimator::BytesOver4) == 2);
    // frozen golden values for the sparse pod fixture
    CHECK(estimate_tokens(kSparsePod) == 21);
    CHECK(estimate_tokens(kSparsePod, TokenEstimator::BytesOver4) == 49);
    KcfDocument doc = parse_kcf(kSparsePod, "pod.yaml");
    CHECK(doc.token_estimate == 21);
}
