#include <random>

#include <gtest/gtest.h>

#include "ailp/linkext.hpp"
#include "support/random_text.hpp"

using namespace ailp;

namespace {

struct Planted {
  std::string label;
  std::string url;
  Span span;
};

struct Generated {
  std::string doc;
  std::vector<Planted> links;
};

/// Builds a Markdown document from random segments. Only inline links
/// outside code are recorded in the plant list; code spans, fences, images,
/// reference links, autolinks and relative links act as decoys.
Generated generate_doc(std::mt19937_64& rng) {
  Generated g;
  std::uniform_int_distribution<int> kind(0, 11);
  std::uniform_int_distribution<int> segments(0, 14);
  const int n = segments(rng);
  auto words = [&](std::size_t max) { return ailp_test::random_words(rng, 1 + rng() % max, "abcdefghij"); };
  auto url = [&] {
    static const char* forms[] = {"https://example.com/p/", "http://docs.example.org/a_(b)/",
                                  "https://github.com/owner/repo/issues/"};
    return std::string(forms[rng() % 3]) + std::to_string(rng() % 1000);
  };
  for (int s = 0; s < n; ++s) {
    const int k = kind(rng);
    g.doc += s == 0 ? "" : (rng() % 4 == 0 ? "\n\n" : " ");
    switch (k) {
      case 0:
      case 1:
      case 2: {  // plain inline link, optionally with a nested bracket label or a title
        std::string label = words(10);
        if (rng() % 4 == 0) label = "[" + words(2) + "] " + label;
        const std::string u = url();
        std::string md = "[" + label + "](" + u;
        if (rng() % 4 == 0) md += " \"a title\"";
        md += ")";
        g.links.push_back({label, u, {g.doc.size(), g.doc.size() + md.size()}});
        g.doc += md;
        break;
      }
      case 3: {  // angle-bracket destination
        const std::string label = words(6);
        const std::string u = url();
        const std::string md = "[" + label + "](<" + u + ">)";
        g.links.push_back({label, u, {g.doc.size(), g.doc.size() + md.size()}});
        g.doc += md;
        break;
      }
      case 4:
        g.doc += "`[" + words(3) + "](" + url() + ")`";
        break;
      case 5:
        g.doc += "\n```\n[" + words(3) + "](" + url() + ")\n```\n";
        break;
      case 6:
        g.doc += "![" + words(3) + "](" + url() + ")";
        break;
      case 7:
        g.doc += "[" + words(3) + "][ref]";
        break;
      case 8:
        g.doc += "<" + url() + ">";
        break;
      case 9:
        g.doc += "[" + words(3) + "](/relative/path)";
        break;
      default:
        g.doc += words(8);
        break;
    }
  }
  return g;
}

}  // namespace

TEST(ExtractLinks, DocumentedExamples) {
  const auto one = extract_links("see [the new color mode migration guide for v5 users](https://x.example/guide)",
                                 Location::Description, "");
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].label_word_count, 9u);
  EXPECT_EQ(one[0].url, "https://x.example/guide");
  EXPECT_TRUE(extract_links("", Location::Description, "").empty());
  const auto code = extract_links("`[a](b)` and [real link label here with many words](https://e.x/p)",
                                  Location::Comment, "issuecomment-1");
  ASSERT_EQ(code.size(), 1u);
  EXPECT_EQ(code[0].url, "https://e.x/p");
  EXPECT_EQ(code[0].location, Location::Comment);
  EXPECT_EQ(code[0].container_id, "issuecomment-1");
}

TEST(ExtractLinks, SkipsNonInlineForms) {
  const std::string doc =
      "![image alt](https://img.example/a.png) [ref label][r] <https://auto.example/> "
      "[relative](docs/x.md) [empty]() https://bare.example/ [kept](https://ok.example/)\n"
      "[r]: https://ref.example/";
  const auto links = extract_links(doc, Location::Description, "");
  ASSERT_EQ(links.size(), 1u);
  EXPECT_EQ(links[0].url, "https://ok.example/");
}

TEST(ExtractLinks, NestedBracketsAndParentheses) {
  const std::string doc = "[see [RFC 9110] section](https://en.wikipedia.org/wiki/HTTP_(protocol)) tail";
  const auto links = extract_links(doc, Location::Description, "");
  ASSERT_EQ(links.size(), 1u);
  EXPECT_EQ(links[0].label, "see [RFC 9110] section");
  EXPECT_EQ(links[0].url, "https://en.wikipedia.org/wiki/HTTP_(protocol)");
  EXPECT_EQ(doc.substr(links[0].char_span.start, links[0].char_span.end - links[0].char_span.start),
            "[see [RFC 9110] section](https://en.wikipedia.org/wiki/HTTP_(protocol))");
}

TEST(ExtractLinks, FencedBlocksAndEscapes) {
  const std::string doc =
      "~~~md\n[fenced](https://a.example/)\n~~~\n"
      "````\n```\n[still fenced](https://b.example/)\n````\n"
      "\\[escaped](https://c.example/) "
      "``code with ` inside [x](https://d.example/)`` "
      "[after](https://e.example/ 'single quoted title')";
  const auto links = extract_links(doc, Location::Description, "");
  ASSERT_EQ(links.size(), 1u);
  EXPECT_EQ(links[0].url, "https://e.example/");
}

TEST(ExtractLinks, UnclosedFenceRunsToEnd) {
  const auto links = extract_links("```\n[x y](https://a.example/)\n", Location::Description, "");
  EXPECT_TRUE(links.empty());
}

TEST(ExtractLinks, MalformedCandidatesAreSkipped) {
  for (const std::string doc : {"[unclosed label(https://a.example/)", "[label](https://a.example/ no close",
                                "[label] (https://a.example/)", "[[[[", "](", "[a](<https://x.example/)"}) {
    EXPECT_NO_THROW(extract_links(doc, Location::Description, "")) << doc;
    EXPECT_TRUE(extract_links(doc, Location::Description, "").empty()) << doc;
  }
}

TEST(ExtractLinks, PlantedLinksAreRecoveredExactly) {
  std::mt19937_64 rng(1234);
  for (int iter = 0; iter < 500; ++iter) {
    const auto g = generate_doc(rng);
    const auto found = extract_links(g.doc, Location::Comment, "c");
    ASSERT_EQ(found.size(), g.links.size()) << g.doc;
    for (std::size_t i = 0; i < found.size(); ++i) {
      EXPECT_EQ(found[i].label, g.links[i].label) << g.doc;
      EXPECT_EQ(found[i].url, g.links[i].url) << g.doc;
      EXPECT_EQ(found[i].char_span, g.links[i].span) << g.doc;
      EXPECT_EQ(found[i].label_word_count, text::word_count(found[i].label));
    }
  }
}

TEST(ExtractLinks, RoundTripAndNonOverlap) {
  std::mt19937_64 rng(99);
  for (int iter = 0; iter < 500; ++iter) {
    const auto g = generate_doc(rng);
    const auto found = extract_links(g.doc, Location::Description, "");
    for (std::size_t i = 0; i < found.size(); ++i) {
      const auto& o = found[i];
      ASSERT_LE(o.char_span.end, g.doc.size());
      const auto sub = std::string_view(g.doc).substr(o.char_span.start, o.char_span.end - o.char_span.start);
      const auto again = extract_links(sub, Location::Description, "");
      ASSERT_EQ(again.size(), 1u) << sub;
      EXPECT_EQ(again[0].label, o.label);
      EXPECT_EQ(again[0].url, o.url);
      EXPECT_TRUE(is_absolute_url(o.url));
      if (i > 0) {
        EXPECT_LE(found[i - 1].char_span.end, o.char_span.start);
      }
    }
  }
}

TEST(FilterByLabelLength, BoundaryAndOrder) {
  auto make = [](std::size_t words) {
    LinkOccurrence o;
    o.url = "https://e.example/" + std::to_string(words);
    for (std::size_t i = 0; i < words; ++i) o.label += (i ? " w" : "w");
    o.label_word_count = words;
    return o;
  };
  const std::vector<LinkOccurrence> mixed{make(3), make(8), make(12)};
  const auto kept = filter_by_label_length(mixed, 8);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].label_word_count, 8u);
  EXPECT_EQ(kept[1].label_word_count, 12u);
  EXPECT_EQ(filter_by_label_length(kept, 8), kept);

  auto click = extract_links("[click here](https://e.example/)", Location::Description, "");
  EXPECT_TRUE(filter_by_label_length(click, 8).empty());
  EXPECT_THROW(filter_by_label_length(mixed, 0), Error);
}

TEST(FilterByLabelLength, MinOneKeepsNonEmptyLabels) {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 100; ++iter) {
    const auto found = extract_links(generate_doc(rng).doc, Location::Description, "");
    const auto kept = filter_by_label_length(found, 1);
    std::vector<LinkOccurrence> expected;
    for (const auto& o : found) {
      if (!text::trim(o.label).empty()) expected.push_back(o);
    }
    EXPECT_EQ(kept, expected);
  }
  EXPECT_TRUE(filter_by_label_length(extract_links("[](https://e.example/)", Location::Description, ""), 1).empty());
}

TEST(ClassifyLink, SameRepositoryIsInternal) {
  EXPECT_EQ(classify_link("https://github.com/twbs/bootstrap/issues/1", "twbs/bootstrap"), LinkKind::Internal);
  EXPECT_EQ(classify_link("https://GitHub.com/TWBS/Bootstrap/pull/2", "twbs/bootstrap"), LinkKind::Internal);
  EXPECT_EQ(classify_link("https://github.com/twbs/bootstrap", "twbs/bootstrap"), LinkKind::Internal);
  EXPECT_EQ(classify_link("https://developer.mozilla.org/x", "twbs/bootstrap"), LinkKind::External);
  EXPECT_EQ(classify_link("https://github.com/twbs/bootstrap-icons/issues/1", "twbs/bootstrap"),
            LinkKind::External);
  EXPECT_EQ(classify_link("https://github.com/other/repo", "twbs/bootstrap"), LinkKind::External);
  EXPECT_EQ(classify_link("https://gist.github.com/twbs/bootstrap/1", "twbs/bootstrap"), LinkKind::External);
  EXPECT_THROW(classify_link("::not a url::", "twbs/bootstrap"), Error);
}

TEST(LinkOccurrence, JsonRoundTrip) {
  auto links = extract_links("x [label words](https://e.example/a) y", Location::ReviewComment, "discussion_r5");
  ASSERT_EQ(links.size(), 1u);
  links[0].link_kind = LinkKind::Internal;
  const nlohmann::json j = links[0];
  EXPECT_EQ(j.at("location"), "review_comment");
  EXPECT_EQ(j.at("kind"), "internal");
  EXPECT_EQ(j.get<LinkOccurrence>(), links[0]);
}
