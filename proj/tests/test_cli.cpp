#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <sys/wait.h>

#include "madp/corpus.hpp"
#include "madp/http_server.hpp"
#include "test_support.hpp"

using namespace madp;
using madp::testing::TempDir;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run_cli(const std::string& args) {
  std::string cmd = std::string(MADP_CLI) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace

TEST(Cli, RunOnEmptyStore) {
  TempDir dir;
  auto r = run_cli("--store " + (dir / "store").string() + " run");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("processed 0 document(s)"), std::string::npos) << r.out;
}

TEST(Cli, UnknownAblationStage) {
  TempDir dir;
  corpus::write(corpus::generate(3), dir.path());
  EXPECT_EQ(run_cli("eval " + dir.path().string() + " --ablate magic").code, 2);
}

TEST(Cli, SustainSummaryLine) {
  auto r = run_cli("sustain --scenario ai_hitl");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("ai_hitl: 5.4 t / 15.2 MWh / 37.6 m³"), std::string::npos) << r.out;
  auto all = run_cli("sustain");
  EXPECT_NE(all.out.find("manual: 17.7 t / 49.5 MWh / 101.2 m³"), std::string::npos) << all.out;
  EXPECT_NE(all.out.find("discrepancy: pure_ai"), std::string::npos);
}

TEST(Cli, QueueMatchesTheApi) {
  TempDir dir;
  auto corpus = corpus::generate(5);
  corpus::write(corpus, dir / "corpus");
  std::string global = "--config " + (dir / "corpus" / "config.json").string() + " --store " +
                       (dir / "store").string();
  ASSERT_EQ(run_cli(global + " ingest " + (dir / "corpus" / "bundles").string()).code, 0);
  ASSERT_EQ(run_cli(global + " run").code, 0);
  auto listed = run_cli(global + " queue ls --status pending");
  ASSERT_EQ(listed.code, 0);

  auto loaded = corpus::load(dir / "corpus");
  EngineOptions o;
  o.config = loaded.config;
  o.store_dir = dir / "store";
  Engine engine(std::move(o));
  auto api = handle_request(engine, {"GET", "/queue", {{"status", "pending"}}, "", "reviewer"});
  EXPECT_EQ(json::parse(listed.out), api.body);
  EXPECT_FALSE(api.body.empty());
}

TEST(Cli, QueueRejectsUnknownStatus) {
  TempDir dir;
  EXPECT_NE(run_cli("--store " + (dir / "store").string() + " queue ls --status bogus").code, 0);
}

TEST(Cli, MissingSubcommand) { EXPECT_NE(run_cli("").code, 0); }
