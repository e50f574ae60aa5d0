#include <atomic>
#include <fstream>

#include <gtest/gtest.h>

#include "ailp/ghclient.hpp"
#include "ailp/pipeline.hpp"
#include "support/fake_http.hpp"

using namespace ailp;

namespace {

const Timestamp kCutoff = parse_timestamp("2024-05-27");
const Timestamp kNow = parse_timestamp("2025-01-01T00:00:00Z");

RepoCandidate passing(std::string name, long long stars) {
  RepoCandidate c;
  c.full_name = std::move(name);
  c.stars = stars;
  c.commit_count = 100;
  c.issue_count = 1;
  c.contributor_count = 3;
  c.pr_count = 100;
  c.release_count = 1;
  c.last_commit_at = kCutoff;
  return c;
}

std::vector<RepoCandidate> load_candidates(const std::string& file) {
  std::vector<RepoCandidate> out;
  for (const auto& j : read_jsonl(file)) out.push_back(j.get<RepoCandidate>());
  return out;
}

}  // namespace

TEST(Curation, EachPredicateAtItsBoundary) {
  const auto all = load_candidates(AILP_TEST_FIXTURES "/curation/ten.jsonl");
  ASSERT_EQ(all.size(), 10u);
  const auto kept = curate_repositories(all, kCutoff);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].full_name, "boundary/all-minimums");
}

TEST(Curation, SortedByStarsThenName) {
  const auto kept = curate_repositories(load_candidates(AILP_TEST_FIXTURES "/curation/three.jsonl"), kCutoff);
  ASSERT_EQ(kept.size(), 3u);
  EXPECT_EQ(kept[0].full_name, "alpha/mid");
  EXPECT_EQ(kept[1].full_name, "zeta/mid");
  EXPECT_EQ(kept[2].full_name, "alpha/small");
}

TEST(Curation, SingleFailures) {
  auto c = passing("a/b", 1);
  EXPECT_TRUE(passes_curation(c, kCutoff));
  c.commit_count = 99;
  EXPECT_FALSE(passes_curation(c, kCutoff));
  c = passing("a/b", 1);
  c.is_fork = true;
  EXPECT_FALSE(passes_curation(c, kCutoff));
  c = passing("a/b", 1);
  c.last_commit_at = kCutoff - std::chrono::seconds(1);
  EXPECT_FALSE(passes_curation(c, kCutoff));
}

TEST(Curation, SubsetAndIdempotent) {
  std::vector<RepoCandidate> in;
  for (int i = 0; i < 40; ++i) {
    auto c = passing("o/r" + std::to_string(i), (i * 37) % 11);
    if (i % 3 == 0) c.pr_count = 50;
    if (i % 5 == 0) c.is_fork = true;
    in.push_back(c);
  }
  const auto once = curate_repositories(in, kCutoff);
  EXPECT_EQ(curate_repositories(once, kCutoff), once);
  for (const auto& c : once) {
    EXPECT_TRUE(passes_curation(c, kCutoff));
    EXPECT_NE(std::find(in.begin(), in.end(), c), in.end());
  }
  EXPECT_TRUE(curate_repositories({}, kCutoff).empty());
}

TEST(RepoCandidate, RejectsNegativeCounts) {
  auto j = nlohmann::json(passing("a/b", 5));
  EXPECT_EQ(j.get<RepoCandidate>(), passing("a/b", 5));
  j["issue_count"] = -1;
  EXPECT_THROW(j.get<RepoCandidate>(), Error);
}

TEST(PrPayload, ContainerIdsAndValidation) {
  const nlohmann::json payload = {
      {"number", 3},
      {"title", "T"},
      {"body", nullptr},
      {"repo", {{"full_name", "o/r"}, {"description", nullptr}}},
      {"comments", {{{"id", 11}, {"user", {{"login", "u"}}}, {"body", "c"}}}},
      {"review_comments", {{{"id", 12}, {"body", "r"}, {"path", "src/a.cc"}}}}};
  const auto pr = pr_from_payload(payload, kNow);
  EXPECT_EQ(pr.description_body, "");
  EXPECT_EQ(pr.comments.at(0).container_id, "issuecomment-11");
  EXPECT_EQ(pr.review_comments.at(0).container_id, "discussion_r12");
  EXPECT_EQ(pr.review_comments.at(0).file_path, "src/a.cc");
  EXPECT_EQ(pr.fetched_at, kNow);

  auto dup = payload;
  dup["comments"].push_back({{"id", 11}, {"body", "again"}});
  EXPECT_THROW(pr_from_payload(dup, kNow), Error);
  auto zero = payload;
  zero["number"] = 0;
  EXPECT_THROW(pr_from_payload(zero, kNow), Error);
  EXPECT_THROW(pr_from_payload(nlohmann::json::object(), kNow), Error);
}

TEST(FixturePrSource, BootstrapSnapshotHas59Links) {
  FixturePrSource src(AILP_TEST_FIXTURES "/bootstrap", fixed_clock(kNow));
  const auto pr = src.fetch_pr("twbs/bootstrap", 39291);
  const auto links = harvest_links(pr, 8);
  EXPECT_EQ(links.size(), 59u);
  const auto internal = std::count_if(links.begin(), links.end(),
                                      [](const LinkOccurrence& o) { return o.link_kind == LinkKind::Internal; });
  EXPECT_EQ(internal, 4);
  EXPECT_EQ(links.size() - static_cast<std::size_t>(internal), 55u);
  EXPECT_EQ(src.list_prs("twbs/bootstrap"), std::vector<int>{39291});
}

TEST(FixturePrSource, DeterministicAndNotFound) {
  FixturePrSource src(AILP_TEST_FIXTURES "/e2e", fixed_clock(kNow));
  EXPECT_EQ(src.fetch_pr("acme/widgets", 12), src.fetch_pr("acme/widgets", 12));
  const auto empty = src.fetch_pr("acme/widgets", 15);
  EXPECT_TRUE(empty.comments.empty());
  try {
    src.fetch_pr("acme/widgets", 404);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotFound);
  }
  EXPECT_EQ(src.list_prs("acme/widgets"), (std::vector<int>{12, 15}));
  EXPECT_TRUE(src.list_prs("nobody/here").empty());
}

TEST(HarvestLinks, OrderLocationsAndContainers) {
  PrRecord pr;
  pr.repo_full_name = "o/r";
  pr.pr_number = 1;
  pr.description_body = "[one two three four five six seven eight](https://github.com/o/r/issues/2) [too short](https://x.example/)";
  pr.comments = {{"issuecomment-1", "a", "[a comment link with at least eight words here](https://c.example/)"}};
  pr.review_comments = {{"discussion_r2", "b", "[a review comment link with eight words in it](https://r.example/)", "f"}};
  const auto links = harvest_links(pr, 8);
  ASSERT_EQ(links.size(), 3u);
  EXPECT_EQ(links[0].location, Location::Description);
  EXPECT_EQ(links[0].link_kind, LinkKind::Internal);
  EXPECT_EQ(links[1].location, Location::Comment);
  EXPECT_EQ(links[1].container_id, "issuecomment-1");
  EXPECT_EQ(links[2].location, Location::ReviewComment);
  EXPECT_EQ(links[2].container_id, "discussion_r2");
  for (const auto& l : links) EXPECT_NE(pr.container_body(l.location, l.container_id), nullptr);

  PrRecord terse = pr;
  terse.description_body = "[three word label](https://x.example/)";
  terse.comments.clear();
  terse.review_comments.clear();
  EXPECT_TRUE(harvest_links(terse, 8).empty());
}

// ---------------------------------------------------------------------------
// Live client against a local stand-in for the REST API.

namespace {

struct FakeGithub {
  ailp_test::FakeServer http;
  std::atomic<int> flaky_calls{0};
  std::atomic<int> requests{0};
  std::string last_auth;
  std::mutex mutex;

  FakeGithub() {
    auto& s = http.server;
    s.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response&) {
      ++requests;
      std::lock_guard lock(mutex);
      last_auth = req.get_header_value("Authorization");
      return httplib::Server::HandlerResponse::Unhandled;
    });
    s.Get("/repos/o/r", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"full_name":"o/r","description":"demo repo"})", "application/json");
    });
    s.Get("/repos/o/r/pulls/5", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"J({"number":5,"title":"Title","body":"[a b c d e f g h](https://e.example/)"})J",
                      "application/json");
    });
    s.Get("/repos/o/r/issues/5/comments", [this](const httplib::Request& req, httplib::Response& res) {
      const auto page = req.has_param("page") ? req.get_param_value("page") : "1";
      if (page == "1") {
        res.set_header("Link", "<" + http.url("/repos/o/r/issues/5/comments?per_page=100&page=2") +
                                   ">; rel=\"next\", <" +
                                   http.url("/repos/o/r/issues/5/comments?per_page=100&page=2") + ">; rel=\"last\"");
        res.set_content(R"([{"id":1,"body":"first"},{"id":2,"body":"second"}])", "application/json");
      } else {
        res.set_content(R"([{"id":3,"body":"third"}])", "application/json");
      }
    });
    s.Get("/repos/o/r/pulls/5/comments", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"([{"id":9,"body":"review","path":"a.cc"}])", "application/json");
    });
    s.Get("/repos/o/r/pulls", [](const httplib::Request& req, httplib::Response& res) {
      EXPECT_EQ(req.get_param_value("state"), "all");
      res.set_content(R"([{"number":7},{"number":5}])", "application/json");
    });
    s.Get("/repos/limited/x", [](const httplib::Request&, httplib::Response& res) {
      res.status = 403;
      res.set_header("X-RateLimit-Remaining", "0");
      res.set_header("X-RateLimit-Reset", std::to_string(kNow.time_since_epoch().count() + 120));
      res.set_content(R"({"message":"API rate limit exceeded"})", "application/json");
    });
    s.Get("/repos/flaky/x", [this](const httplib::Request&, httplib::Response& res) {
      if (++flaky_calls < 3) {
        res.status = 502;
        return;
      }
      res.set_content(R"({"full_name":"flaky/x"})", "application/json");
    });
    s.Get("/repos/down/x", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    s.Get("/repos/leaky/x", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"full_name":"leaky/x"})", "application/json");
    });
    s.Get("/repos/leaky/x/pulls", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Link", "<http://127.0.0.2:9/steal?page=2>; rel=\"next\"");
      res.set_content(R"([{"number":1}])", "application/json");
    });
    http.start();
  }

  GithubOptions options(std::vector<std::chrono::milliseconds>* sleeps = nullptr) {
    GithubOptions o;
    o.base_url = http.base_url();
    o.token = "gh-test-token";
    o.timeout = std::chrono::seconds(5);
    o.retry.sleep = [sleeps](std::chrono::milliseconds d) {
      if (sleeps) sleeps->push_back(d);
    };
    return o;
  }
};

}  // namespace

TEST(GithubPrSource, FetchesAndPaginates) {
  FakeGithub gh;
  GithubPrSource src(gh.options(), fixed_clock(kNow));
  const auto pr = src.fetch_pr("o/r", 5);
  EXPECT_EQ(pr.repo_full_name, "o/r");
  EXPECT_EQ(pr.repo_description, "demo repo");
  EXPECT_EQ(pr.title, "Title");
  ASSERT_EQ(pr.comments.size(), 3u);
  EXPECT_EQ(pr.comments[2].body, "third");
  ASSERT_EQ(pr.review_comments.size(), 1u);
  EXPECT_EQ(pr.review_comments[0].container_id, "discussion_r9");
  EXPECT_EQ(gh.last_auth, "Bearer gh-test-token");
  EXPECT_EQ(src.list_prs("o/r"), (std::vector<int>{5, 7}));
}

TEST(GithubPrSource, NotFoundIsDistinct) {
  FakeGithub gh;
  GithubPrSource src(gh.options(), fixed_clock(kNow));
  try {
    src.fetch_pr("o/r", 6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotFound);
  }
}

TEST(GithubPrSource, RateLimitCarriesResetTime) {
  FakeGithub gh;
  GithubPrSource src(gh.options(), fixed_clock(kNow));
  try {
    src.fetch_pr("limited/x", 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RateLimited);
    EXPECT_EQ(e.retry_after(), 120);
    EXPECT_EQ(e.reset_at(), kNow.time_since_epoch().count() + 120);
  }
  EXPECT_EQ(gh.requests.load(), 1);
}

TEST(GithubPrSource, RetriesServerErrorsWithBackoff) {
  FakeGithub gh;
  std::vector<std::chrono::milliseconds> sleeps;
  GithubPrSource src(gh.options(&sleeps), fixed_clock(kNow));
  EXPECT_THROW(src.fetch_pr("flaky/x", 1), Error);  // repo succeeds on the 3rd try, pull is 404
  EXPECT_EQ(gh.flaky_calls.load(), 3);
  EXPECT_EQ(sleeps, (std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(1000),
                                                            std::chrono::milliseconds(2000)}));
}

TEST(GithubPrSource, GivesUpAfterThreeAttempts) {
  FakeGithub gh;
  std::vector<std::chrono::milliseconds> sleeps;
  GithubPrSource src(gh.options(&sleeps), fixed_clock(kNow));
  try {
    src.fetch_pr("down/x", 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Transport);
  }
  EXPECT_EQ(gh.requests.load(), 3);
  EXPECT_EQ(sleeps.size(), 2u);
}

TEST(GithubPrSource, TransportFailure) {
  GithubOptions o;
  o.base_url = "http://127.0.0.1:1";
  o.timeout = std::chrono::seconds(1);
  o.retry.sleep = [](std::chrono::milliseconds) {};
  GithubPrSource src(o, fixed_clock(kNow));
  try {
    src.fetch_pr("o/r", 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Transport);
  }
}

TEST(GithubPrSource, DoesNotFollowPaginationOffOrigin) {
  FakeGithub gh;
  GithubPrSource src(gh.options(), fixed_clock(kNow));
  EXPECT_EQ(src.list_prs("leaky/x"), std::vector<int>{1});
  EXPECT_EQ(gh.requests.load(), 1);
}
