// Reads Markdown on stdin, keeps links whose label has at least eight words,
// and scores the label against itself and against a one-line summary given
// as the first argument. Shows the library used directly, without the CLI.
//
//   echo '[the MDN guide on grid template areas and named lines](https://developer.mozilla.org/)' |
//     ailp_score_markdown "Grid template areas name regions of a grid."

#include <iostream>
#include <iterator>
#include <string>

#include <ailp/ailp.hpp>

int main(int argc, char** argv) {
  const std::string summary = argc > 1 ? argv[1] : "";
  const std::string markdown{std::istreambuf_iterator<char>(std::cin), {}};
  const ailp::metrics::HashEmbeddingProvider embedder;

  auto links = ailp::filter_by_label_length(ailp::extract_links(markdown, ailp::Location::Description, ""));
  for (const auto& link : links) {
    std::cout << link.url << "\n  label (" << link.label_word_count << " words): " << link.label << "\n";
    if (summary.empty()) continue;
    try {
      // The label doubles as the body here; in the pipeline it is the page text.
      const auto row = ailp::metrics::compute_metric_row(summary, link.label, link.label, embedder);
      std::cout << "  " << nlohmann::json(row).dump() << "\n";
    } catch (const ailp::Error& e) {
      std::cout << "  metrics undefined: " << e.what() << "\n";
    }
  }
  return 0;
}
