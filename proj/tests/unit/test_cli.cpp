#include "hoifkit/cli/app.hpp"
#include "hoifkit/rng.hpp"

#include <json.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using hoifkit::cli::dispatch;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "hoifkit");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("hoifkit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  // A = p(X) + noise, Y = A; p is wiggly so a k = 3 nuisance leaves real bias.
  std::string data_table(int n, double amp) {
    hoifkit::Engine eng = hoifkit::make_engine(99, 0, "cli-data");
    std::ostringstream o;
    o << "X1,A,Y\n";
    for (int i = 0; i < n; ++i) {
      const double x = hoifkit::uniform01(eng);
      const double a = amp * std::cos(2.0 * M_PI * 7.0 * x) + 0.1 * hoifkit::standard_normal(eng);
      o << x << ',' << a << ',' << a << '\n';
    }
    return write("data.csv", o.str());
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, UnknownCommandAndMissingConfig) {
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"run-experiment", (dir_ / "none.yaml").string()}).code, 2);
}

TEST_F(CliTest, UnknownKeyNamesThePath) {
  const auto cfg = write("bad.yaml", "id: x\ntest:\n  alhpa: 0.1\n");
  const CliRun r = run({"run-experiment", cfg, "--dry-run"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("test.alhpa"), std::string::npos) << r.err;
}

TEST_F(CliTest, OverridesAndDryRun) {
  const auto cfg = write("ok.yaml", "id: tiny\nn: [200]\nreps: 2\ntest:\n  k: 5\n");
  const CliRun r = run({"run-experiment", cfg, "--dry-run", "--set", "test.alpha=0.1", "seed=42"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\nalpha=0.1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("seed=42"), std::string::npos);
  EXPECT_EQ(run({"run-experiment", cfg, "--dry-run", "--set", "test.alpha"}).code, 2);
  EXPECT_EQ(run({"run-experiment", cfg, "--dry-run", "--set", "test.alpha=2"}).code, 2);
}

TEST_F(CliTest, RunExperimentWritesOutputs) {
  const auto cfg = write("ok.yaml", "id: tiny\nn: [200]\nreps: 3\ntruth:\n  J: 40\ntest:\n  k: 5\n");
  const CliRun a = run({"run-experiment", cfg, "--out", (dir_ / "a").string(), "--threads", "1"});
  ASSERT_EQ(a.code, 0) << a.err;
  const CliRun b = run({"run-experiment", cfg, "--out", (dir_ / "b").string(), "--threads", "2"});
  ASSERT_EQ(b.code, 0) << b.err;
  const auto csv = slurp(dir_ / "a" / "tiny.aggregate.csv");
  EXPECT_EQ(csv, slurp(dir_ / "b" / "tiny.aggregate.csv"));
  EXPECT_EQ(csv.rfind("experiment_id,n,k,statistic_name,value,mc_se,n_reps\n", 0), 0u);
  const auto run_json = nlohmann::json::parse(slurp(dir_ / "a" / "tiny.run.json"));
  EXPECT_EQ(run_json.at("command"), "run-experiment");
  EXPECT_EQ(run_json.at("outputs").size(), 2u);
  EXPECT_EQ(nlohmann::json::parse(a.out).at("records"), 3);
  for (const auto& e : fs::directory_iterator(dir_ / "a"))
    EXPECT_EQ(e.path().string().find(".tmp."), std::string::npos);
}

TEST_F(CliTest, TestBiasExitCodes) {
  const auto data = data_table(2000, 0.5);
  const auto cfg = write("tb.yaml", "data: " + data + "\nnuisance:\n  k: 3\ntest:\n  k: 20\n");
  const CliRun big = run({"test-bias", cfg, "--out", dir_.string()});
  ASSERT_EQ(big.code, 3) << big.err << big.out;
  const auto j = nlohmann::json::parse(big.out);
  EXPECT_TRUE(j.at("reject").get<bool>());
  EXPECT_GT(j.at("statistic").get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(dir_ / "test_bias.json"));
  EXPECT_TRUE(fs::exists(dir_ / "test_bias.run.json"));

  // an unreachable delta keeps the null
  const CliRun small = run({"test-bias", cfg, "--set", "test.delta=1e9"});
  EXPECT_EQ(small.code, 0) << small.err;
  EXPECT_FALSE(nlohmann::json::parse(small.out).at("reject").get<bool>());

  EXPECT_EQ(run({"test-bias", cfg, "--set", "test.statistic=chi_9"}).code, 2);
  EXPECT_EQ(run({"test-bias", cfg, "--set", "data=" + (dir_ / "missing.csv").string()}).code, 2);
  EXPECT_EQ(run({"test-bias", cfg, "--set", "nuisance.k=5000"}).code, 1);
}

TEST_F(CliTest, UniversalCi) {
  const auto data = data_table(800, 0.3);
  const auto cfg = write("u.yaml", "data: " + data + "\nbasis:\n  k: 5\nalpha: 0.1\n");
  const CliRun r = run({"universal-ci", cfg});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  const double plo = j.at("plugin")[0], phi = j.at("plugin")[1];
  const double qlo = j.at("profile")[0], qhi = j.at("profile")[1];
  EXPECT_LE(plo, phi);
  EXPECT_LE(qlo, plo + 1e-9);
  EXPECT_GE(qhi, phi - 1e-9);
  EXPECT_GE(j.at("lower_bound").get<double>(), 0.0);
}

TEST_F(CliTest, CheckBasis) {
  const CliRun r = run({"check-basis", "--family", "fourier", "--k", "8", "--scan-points", "2000"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j.at("gram").at("identity").get<bool>());
  EXPECT_NEAR(j.at("condition_sw").at("sup_zz").get<double>(), 9.0, 1e-9);
  const CliRun m = run({"check-basis", "--family", "monomial", "--k", "4"});
  ASSERT_EQ(m.code, 0);
  EXPECT_FALSE(nlohmann::json::parse(m.out).at("gram").at("identity").get<bool>());
  EXPECT_EQ(run({"check-basis", "--family", "wavelet"}).code, 2);
  EXPECT_EQ(run({"check-basis", "--k", "0"}).code, 2);
}

TEST_F(CliTest, CondvarRate) {
  const auto cfg = write("c.yaml", "id: cv\nn: [100, 200]\nreps: 4\n");
  const CliRun r = run({"condvar-rate", cfg, "--out", dir_.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = slurp(dir_ / "cv.condvar.csv");
  EXPECT_EQ(text.rfind("n,k,rmse,slope_fit\n", 0), 0u);
  EXPECT_TRUE(std::isfinite(nlohmann::json::parse(r.out).at("slope_fit").get<double>()));
}

TEST_F(CliTest, AtomicWriteReplaces) {
  const auto p = (dir_ / "sub" / "f.txt").string();
  hoifkit::cli::atomic_write(p, "one");
  hoifkit::cli::atomic_write(p, "two");
  EXPECT_EQ(slurp(p), "two");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir_ / "sub")) ++files;
  EXPECT_EQ(files, 1);
}
