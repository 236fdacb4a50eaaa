#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bogolab/cli.hpp"

using namespace bogolab;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return RunConfig::parse(in);
}

int line_of_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("bogolab-test-" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Config, ParsesSectionsCommentsAndFractions) {
  const auto c = parse("; comment\n[run]\nexperiment = infsup\n# another\n[grid]\nh = 1/32\n[domain]\neps = 0.5 1/4\n");
  EXPECT_EQ(c.experiment(), "infsup");
  EXPECT_DOUBLE_EQ(c.number("grid.h"), 1.0 / 32);
  EXPECT_EQ(c.numbers("domain.eps"), (std::vector<double>{0.5, 0.25}));
  EXPECT_EQ(c.integer("run.seed"), 1);  // default
  EXPECT_EQ(c.line("grid.h"), 6);
}

TEST(Config, LineNumberedDiagnostics) {
  EXPECT_EQ(line_of_error("[run]\nexperiment = infsup\n[domain]\nbogus = 1\n"), 4);
  EXPECT_EQ(line_of_error("[run]\n\nseed = seven\n"), 3);
  EXPECT_EQ(line_of_error("[run]\nexperiment = infsup\n[domain\n"), 3);
  EXPECT_EQ(line_of_error("[grid]\nh = 1/0\n"), 2);
  EXPECT_EQ(line_of_error("[run]\nseed = 1\nseed = 2\n"), 3);  // duplicate key
}

TEST(Config, MissingKeyIsNamed) {
  const auto c = parse("[run]\nexperiment = ba-scan\n");
  try {
    c.text("domain.kind");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("domain.kind"), std::string::npos);
  }
}

TEST(Config, CanonicalTextDependsOnlyOnRelevantResolvedKeys) {
  auto a = parse("[run]\nexperiment = identities\nseed = 7\nout = x\n");
  auto b = parse("[run]\nexperiment = identities\nseed = 7\nout = y\n[grid]\nh = 1/8\n");
  EXPECT_EQ(a.canonical(), b.canonical());
  EXPECT_EQ(b.ignored(), std::vector<std::string>{"grid.h"});
  b.set("identities.trials", "100");  // the default, made explicit
  EXPECT_EQ(a.canonical(), b.canonical());
  b.set("run.seed", "8");
  EXPECT_NE(a.canonical(), b.canonical());
}

TEST(Hash, GitBlobConvention) {
  // `printf 'hello\n' | git hash-object --stdin`
  EXPECT_EQ(git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
  EXPECT_EQ(git_blob_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST(Run, IdentitiesPassAndWriteBothReports) {
  const auto dir = scratch("identities");
  RunRequest r;
  r.overrides = {{"run.experiment", "identities"}, {"run.seed", "7"}, {"run.out", dir.string()}};
  std::ostringstream out, err;
  EXPECT_EQ(run(r, out, err), kExitPass) << err.str();
  int csv = 0, json = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    csv += e.path().extension() == ".csv";
    json += e.path().extension() == ".json";
    EXPECT_EQ(e.path().filename().string().rfind("identities-", 0), 0u);
  }
  EXPECT_EQ(csv, 1);
  EXPECT_EQ(json, 1);
  std::filesystem::remove_all(dir);
}

TEST(Run, FlagsWinOverTheConfigFile) {
  const auto dir = scratch("flags");
  std::filesystem::create_directories(dir);
  const auto cfg = dir / "c.ini";
  std::ofstream(cfg) << "[run]\nexperiment = identities\nseed = 3\n";
  RunRequest r;
  r.config_path = cfg.string();
  r.overrides = {{"run.seed", "7"}};
  r.dry_run = true;
  std::ostringstream out, err;
  EXPECT_EQ(run(r, out, err), kExitPass);
  EXPECT_NE(out.str().find("run.seed = 7"), std::string::npos) << out.str();
  EXPECT_FALSE(std::filesystem::exists(dir / "out"));  // dry run computes nothing
  std::filesystem::remove_all(dir);
}

TEST(Run, InputErrorsExitOne) {
  std::ostringstream out, err;
  RunRequest missing;
  missing.overrides = {{"run.experiment", "ba-scan"}};
  EXPECT_EQ(run(missing, out, err), kExitInputError);
  EXPECT_NE(err.str().find("domain.kind"), std::string::npos);

  RunRequest unknown;
  unknown.overrides = {{"run.experiment", "heat"}};
  EXPECT_EQ(run(unknown, out, err), kExitInputError);

  RunRequest bad_file;
  bad_file.config_path = "/nonexistent/bogolab.ini";
  EXPECT_EQ(run(bad_file, out, err), kExitInputError);

  RunRequest wrong_kind;
  wrong_kind.overrides = {{"run.experiment", "infsup"}, {"domain.kind", "ball"}, {"domain.r", "1"}, {"run.out", "/tmp"}};
  EXPECT_EQ(run(wrong_kind, out, err), kExitInputError);
}

TEST(Run, ViolationExitsTwo) {
  // A tolerance below the discretization error forces a failing check row.
  const auto dir = scratch("violation");
  RunRequest r;
  r.overrides = {{"run.experiment", "solve"}, {"domain.kind", "rectangle"}, {"domain.a", "0.5"},
                 {"domain.eps", "0.5"},       {"grid.h", "1/8"},            {"solve.tol", "1e-12"},
                 {"run.out", dir.string()}};
  std::ostringstream out, err;
  EXPECT_EQ(run(r, out, err), kExitViolation);
  EXPECT_NE(err.str().find("FAIL"), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(Run, DomainFamiliesBroadcast) {
  const auto c = parse("[run]\nexperiment = ba-scan\n[domain]\nkind = rectangle\na = 1\neps = 0.5 0.25 0.125\n");
  const auto p = detail::domain_params(c, DomainKind::rectangle, true);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[2], (std::vector<double>{1.0, 0.125}));
  EXPECT_THROW(detail::domain_params(c, DomainKind::rectangle, false), ConfigError);
}
