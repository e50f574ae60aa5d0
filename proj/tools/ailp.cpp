// ailp: batch pipeline stages and the local preview service.
#include <csignal>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ailp/ailp.hpp"

namespace {

using namespace ailp;
namespace fs = std::filesystem;

struct GlobalFlags {
  std::string config;
  std::string fixture_dir;
  std::string cache_dir;
  std::string output_dir;
  bool mock_llm = false;
  bool verbose = false;
  bool quiet = false;
};

RunConfig build_config(const GlobalFlags& g) {
  RunConfig c;
  if (!g.config.empty()) load_config_file(c, g.config);
  apply_env(c);
  if (!g.fixture_dir.empty()) c.fixture_dir = g.fixture_dir;
  if (!g.cache_dir.empty()) c.cache_dir = g.cache_dir;
  if (!g.output_dir.empty()) c.output_dir = g.output_dir;
  if (g.mock_llm) c.mock_llm = true;
  return c;
}

fs::path output_path(const RunConfig& c, const std::string& explicit_path, const char* default_name) {
  return explicit_path.empty() ? c.output_dir / default_name : fs::path(explicit_path);
}

std::vector<std::string> repos_from_curated(const fs::path& file) {
  std::vector<std::string> out;
  for (const auto& j : read_jsonl(file)) out.push_back(j.get<RepoCandidate>().full_name);
  return out;
}

int fail(const std::string& message) {
  spdlog::error("{}", message);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Link preview pipeline: curate, harvest, summarize, evaluate, report, serve"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--fixture-dir", g.fixture_dir, "Read PRs and pages from stored fixtures")->check(CLI::ExistingDirectory);
  app.add_option("--cache-dir", g.cache_dir, "Persistent page and summary cache");
  app.add_option("--output-dir", g.output_dir, "Directory for default output files");
  app.add_flag("--mock-llm", g.mock_llm, "Use the deterministic mock LLM client");
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");
  app.add_flag("-q,--quiet", g.quiet, "Only log errors");

  // curate
  auto* curate = app.add_subcommand("curate", "Filter candidate repositories");
  std::string candidates_file, curate_out, cutoff;
  curate->add_option("candidates", candidates_file, "JSON lines of repository candidates")->required();
  curate->add_option("--cutoff", cutoff, "Last-commit cutoff date (YYYY-MM-DD)");
  std::size_t curate_top = 0;
  curate->add_option("--top", curate_top, "Keep only the N most-starred survivors (0 keeps all)");
  curate->add_option("-o,--output", curate_out, "Output file (default: <output-dir>/curated.jsonl)");

  // harvest
  auto* harvest_cmd = app.add_subcommand("harvest", "Extract qualifying links from pull requests");
  std::vector<std::string> repos;
  std::vector<int> pr_numbers;
  std::string curated_file, harvest_out;
  bool all_prs = false;
  std::size_t harvest_min_words = 0;
  harvest_cmd->add_option("--repo", repos, "Repository owner/name (repeatable)");
  harvest_cmd->add_option("--curated", curated_file, "Take repositories from a curate output file")
      ->check(CLI::ExistingFile);
  auto* pr_opt = harvest_cmd->add_option("--pr", pr_numbers, "PR number (repeatable)")->check(CLI::PositiveNumber);
  auto* all_opt = harvest_cmd->add_flag("--all", all_prs, "Every PR of each repository");
  pr_opt->excludes(all_opt);
  harvest_cmd->add_option("--min-words", harvest_min_words, "Minimum label length in words")
      ->check(CLI::PositiveNumber);
  harvest_cmd->add_option("-o,--output", harvest_out, "Output file (default: <output-dir>/links.jsonl)");

  // summarize
  auto* summarize_cmd = app.add_subcommand("summarize", "Fetch pages and run summary strategies");
  std::string links_file, summarize_out;
  std::vector<std::string> strategy_names;
  std::size_t budget = 0;
  summarize_cmd->add_option("links", links_file, "Output of harvest")->required()->check(CLI::ExistingFile);
  summarize_cmd->add_option("--strategies", strategy_names, "contextual, noncontextual, metadata")->delimiter(',');
  summarize_cmd->add_option("--budget-words", budget, "Page body word budget")->check(CLI::PositiveNumber);
  summarize_cmd->add_option("-o,--output", summarize_out, "Output file (default: <output-dir>/summaries.jsonl)");

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score summaries against link labels");
  std::string summaries_file, evaluate_out;
  evaluate_cmd->add_option("summaries", summaries_file, "Output of summarize")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("-o,--output", evaluate_out, "Output file (default: <output-dir>/evaluations.jsonl)");

  // report
  auto* report_cmd = app.add_subcommand("report", "Aggregate evaluations into the metric table");
  std::string evaluations_file, format_name = "markdown";
  report_cmd->add_option("evaluations", evaluations_file, "Output of evaluate")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--format", format_name, "markdown, csv, json or all")
      ->check(CLI::IsMember({"markdown", "csv", "json", "all"}));

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the local preview service");
  int port = -1;
  std::string bind;
  serve_cmd->add_option("--port", port, "Listen port")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--bind", bind, "Listen address");

  CLI11_PARSE(app, argc, argv);

  auto logger = spdlog::stderr_color_mt("ailp");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("%^%l%$: %v");
  spdlog::set_level(g.verbose ? spdlog::level::debug : g.quiet ? spdlog::level::err : spdlog::level::info);

  try {
    RunConfig config = build_config(g);
    config.validate();

    if (curate->parsed()) {
      const Timestamp cut = cutoff.empty() ? config.cutoff_date : parse_timestamp(cutoff);
      auto result = curate_file(candidates_file, cut);
      const std::size_t passed = result.retained.size();
      if (curate_top && result.retained.size() > curate_top) result.retained.resize(curate_top);
      const auto out = output_path(config, curate_out, "curated.jsonl");
      write_text_file(out, to_jsonl(result.retained));
      std::cout << "retained " << passed << "/" << result.total;
      if (result.retained.size() != passed) std::cout << ", kept top " << result.retained.size();
      std::cout << "\n";
      return 0;
    }

    if (harvest_cmd->parsed()) {
      if (!curated_file.empty()) {
        for (auto& r : repos_from_curated(curated_file)) repos.push_back(std::move(r));
      }
      if (repos.empty()) return fail("harvest needs --repo or --curated");
      if (pr_numbers.empty() && !all_prs) return fail("harvest needs --pr N or --all");
      if (harvest_min_words) config.min_label_words = harvest_min_words;
      Runtime rt = make_runtime(config);
      const auto links = harvest(rt, repos, pr_numbers, config.min_label_words);
      const auto out = output_path(config, harvest_out, "links.jsonl");
      write_text_file(out, to_jsonl(links));
      std::cout << "harvested " << links.size() << " links\n";
      return 0;
    }

    if (summarize_cmd->parsed()) {
      if (!strategy_names.empty()) config.strategies = parse_strategies(strategy_names);
      if (budget) config.page_budget_words = budget;
      const bool wants_llm = std::any_of(config.strategies.begin(), config.strategies.end(), uses_llm);
      if (wants_llm && !config.mock_llm && config.llm.api_key.empty()) {
        return fail(
            "the contextual and noncontextual strategies need an LLM: set AILP_LLM_API_KEY, pass --mock-llm, "
            "or run with --strategies metadata");
      }
      std::vector<HarvestedLink> links;
      for (const auto& j : read_jsonl(links_file)) links.push_back(j.get<HarvestedLink>());
      Runtime rt = make_runtime(config);
      const auto records =
          summarize_links(rt, links, config.strategies, config.page_budget_words, config.link_concurrency);
      std::size_t failures = 0;
      for (const auto& r : records) failures += r.errors.size();
      const auto out = output_path(config, summarize_out, "summaries.jsonl");
      write_text_file(out, to_jsonl(records));
      std::cout << "summarized " << records.size() << " links (" << failures << " strategy failures)\n";
      return 0;
    }

    if (evaluate_cmd->parsed()) {
      std::vector<SummaryRecord> records;
      for (const auto& j : read_jsonl(summaries_file)) records.push_back(j.get<SummaryRecord>());
      Runtime rt = make_runtime(config);
      const auto evals = evaluate_records(records, *rt.embedder, config.min_label_words, config.link_concurrency);
      const auto out = output_path(config, evaluate_out, "evaluations.jsonl");
      write_text_file(out, to_jsonl(evals));
      std::cout << "evaluated " << evals.size() << " links\n";
      return 0;
    }

    if (report_cmd->parsed()) {
      std::vector<LinkEvaluation> evals;
      for (const auto& j : read_jsonl(evaluations_file)) evals.push_back(j.get<LinkEvaluation>());
      const auto report = aggregate(std::move(evals));
      std::vector<ReportFormat> formats;
      if (format_name == "all") {
        formats = {ReportFormat::Markdown, ReportFormat::Csv, ReportFormat::Json};
      } else {
        formats = {*report_format_from_string(format_name)};
      }
      for (auto f : formats) {
        write_text_file(config.output_dir / ("report." + std::string(file_extension(f))), render_report(report, f));
      }
      write_text_file(config.output_dir / "projects.jsonl", render_project_lines(report));
      std::cout << "report over " << report.projects.size() << " projects written to " << config.output_dir.string()
                << "\n";
      return 0;
    }

    if (serve_cmd->parsed()) {
      if (port >= 0) config.port = port;
      if (!bind.empty()) config.bind_host = bind;
      PreviewService service(make_runtime(config), config.page_budget_words);
      httplib::Server server;
      mount_service(server, service);
      spdlog::info("listening on http://{}:{} (llm configured: {})", config.bind_host, config.port,
                   service.handle_health().body.at("llm_configured").get<bool>());
      if (!server.listen(config.bind_host, config.port)) return fail("cannot listen on " + config.bind_host);
      return 0;
    }
  } catch (const Error& e) {
    return fail(std::string(to_string(e.kind())) + ": " + e.what());
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  return 0;
}
