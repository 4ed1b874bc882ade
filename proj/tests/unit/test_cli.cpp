#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>

#include "config.hpp"
#include "experiments.hpp"
#include "rbmlab/errors.hpp"

using namespace rbm;
using namespace rbm::cli;
namespace fs = std::filesystem;

namespace {
const char* kSmallAmp = R"(
[experiment]
kind = AmpVsSe
name = small
seeds = 1
[model]
alpha = 2
lambda = 1.4
k = 1
d = 200
[amp]
max_iters = 5
[se]
T = 5
[sweep]
axis = lambda
values = 1.2, 1.4, 2.0
)";

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}
}  // namespace

TEST(GitBlobSha1, KnownIds) {
  EXPECT_EQ(git_blob_sha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(Config, ParsesAndHashes) {
  const ExperimentConfig c = parse_config(kSmallAmp);
  EXPECT_EQ(c.kind, ExperimentKind::AmpVsSe);
  EXPECT_EQ(c.model.d, 200);
  EXPECT_EQ(c.amp.max_iters, 5);
  EXPECT_EQ(c.sweep.values.size(), 3u);
  EXPECT_EQ(c.hash, git_blob_sha1(kSmallAmp));
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, StrictSchema) {
  EXPECT_THROW(parse_config("[model]\nalpah = 2\n"), ValidationError);
  EXPECT_THROW(parse_config("[modle]\nalpha = 2\n"), ValidationError);
  EXPECT_THROW(parse_config("alpha = 2\n"), ValidationError);
  EXPECT_THROW(parse_config("[model]\nalpha = two\n"), ValidationError);
  EXPECT_THROW(parse_config("[experiment]\nkind = Nope\n"), ValidationError);
}

TEST(Config, EmptySeedsRejected) {
  const ExperimentConfig c = parse_config("[experiment]\nkind = AmpVsSe\nseeds =\n");
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Config, ShippedConfigsValidate) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(RBMLAB_CONFIG_DIR)) {
    if (e.path().extension() != ".ini") continue;
    SCOPED_TRACE(e.path().string());
    EXPECT_NO_THROW(load_config(e.path().string()).validate());
    ++n;
  }
  EXPECT_GE(n, 9);
}

TEST(Sweep, RowCountContract) {
  const ExperimentConfig c = parse_config(kSmallAmp);
  RunOptions o;
  o.write_artifacts = false;
  o.quiet = true;
  const std::string csv = run_sweep(c, o);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "lambda,seed,metric,value");
  const RunResult one = run_job(Job::Amp, c, o);
  const std::size_t metrics = one.per_seed.at(0).metrics.size();
  ASSERT_GT(metrics, 0u);
  EXPECT_EQ(count_lines(csv), 1 + 3 * metrics);
}

TEST(Sweep, BitwiseReproducible) {
  const ExperimentConfig c = parse_config(kSmallAmp);
  RunOptions o;
  o.write_artifacts = false;
  o.quiet = true;
  EXPECT_EQ(run_sweep(c, o), run_sweep(c, o));
}

TEST(Sweep, RejectsDuplicatesAndBadAxes) {
  RunOptions o;
  o.write_artifacts = false;
  o.quiet = true;
  ExperimentConfig c = parse_config(kSmallAmp);
  c.sweep.values = {1.2, 1.4, 1.2};
  EXPECT_THROW(run_sweep(c, o), ValidationError);
  c = parse_config(kSmallAmp);
  c.sweep.axis = "model.prior_u";
  EXPECT_THROW(run_sweep(c, o), ValidationError);
  c.sweep.axis = "name";
  EXPECT_THROW(run_sweep(c, o), ValidationError);
}

TEST(Execute, ValidationFailureWritesNothing) {
  const fs::path out = fresh_dir("rbmlab_cli_validation");
  const ExperimentConfig c = parse_config("[experiment]\nkind = AmpVsSe\nseeds =\n");
  RunOptions o;
  o.out_dir = out.string();
  o.quiet = true;
  EXPECT_EQ(execute(Job::Amp, c, o), 2);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Execute, CapacityRefusalLeavesMarker) {
  const fs::path out = fresh_dir("rbmlab_cli_capacity");
  ExperimentConfig c = parse_config(kSmallAmp);
  c.model.d = 2000000;
  RunOptions o;
  o.out_dir = out.string();
  o.quiet = true;
  EXPECT_EQ(execute(Job::Generate, c, o), 4);
  EXPECT_TRUE(fs::exists(out / "FAILED"));
  EXPECT_TRUE(fs::exists(out / "summary.json"));
  fs::remove_all(out);
}

TEST(Execute, SuccessWritesSummaryAndTraces) {
  const fs::path out = fresh_dir("rbmlab_cli_amp");
  const ExperimentConfig c = parse_config(kSmallAmp);
  RunOptions o;
  o.out_dir = out.string();
  o.quiet = true;
  ASSERT_EQ(execute(Job::Amp, c, o), 0);
  EXPECT_TRUE(fs::exists(out / "summary.json"));
  EXPECT_FALSE(fs::exists(out / "FAILED"));
  int csv = 0;
  for (const auto& e : fs::directory_iterator(out)) csv += e.path().extension() == ".csv";
  EXPECT_GE(csv, 1);
  fs::remove_all(out);
}

TEST(Jobs, KindMismatchRejected) {
  ExperimentConfig c = parse_config(kSmallAmp);
  c.kind = ExperimentKind::GordonRank1;
  RunOptions o;
  o.write_artifacts = false;
  o.quiet = true;
  EXPECT_THROW(run_job(Job::Amp, c, o), ValidationError);
}

TEST(Jobs, MedianMetrics) {
  RunResult r;
  r.per_seed = {{1, {{"a", 1.0}, {"b", 5.0}}}, {2, {{"a", 3.0}, {"b", 1.0}}}, {3, {{"a", 2.0}, {"b", 2.0}}}};
  const Metrics m = median_metrics(r);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].first, "a");
  EXPECT_DOUBLE_EQ(m[0].second, 2.0);
  EXPECT_DOUBLE_EQ(m[1].second, 2.0);
}
