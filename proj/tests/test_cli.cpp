#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int exit_code;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(FWM_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return {-1, ""};
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fwm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, PredictPaths) {
  const CliRun x = run("predict --path X");
  ASSERT_EQ(x.exit_code, 0);
  const json jx = json::parse(x.out);
  EXPECT_NEAR(jx["path_amplitudes"]["a0"].get<double>(), 0.55, 0.005);
  EXPECT_NEAR(jx["path_amplitudes"]["a1"].get<double>(), 0.83, 0.005);
  EXPECT_NEAR(jx["path_amplitudes"]["phi0"].get<double>(), 3.141592653589793, 1e-15);
  EXPECT_EQ(jx["metadata"]["tool"], "fwm-cascade");
  EXPECT_TRUE(jx["metadata"].contains("seed"));

  const CliRun y = run("predict --path Y");
  ASSERT_EQ(y.exit_code, 0);
  const json jy = json::parse(y.out);
  EXPECT_NEAR(jy["path_amplitudes"]["a0"].get<double>(), 0.92, 0.005);
  EXPECT_NEAR(jy["path_amplitudes"]["a1"].get<double>(), 0.39, 0.005);
}

TEST_F(CliTest, LevelsAliasMatchesPath) {
  json a = json::parse(run("predict --path X").out);
  json b = json::parse(run("predict --levels 2,2,3,3").out);
  a.erase("metadata");
  b.erase("metadata");
  EXPECT_EQ(a.dump(), b.dump());
}

TEST_F(CliTest, InvalidLevelsRejected) {
  EXPECT_EQ(run("predict --levels 2,2,3,1").exit_code, 2);
  EXPECT_EQ(run("predict --levels 2,2,x,1").exit_code, 2);
  EXPECT_EQ(run("predict --path Z").exit_code, 2);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run("").exit_code, 1);
  EXPECT_EQ(run("frobnicate").exit_code, 1);
  EXPECT_EQ(run("reconstruct").exit_code, 1);
}

TEST_F(CliTest, TomographyPipeline) {
  const std::string counts = path("counts.csv");
  ASSERT_EQ(run("--seed 7 simulate-tomo --path X --n 1e5 -o " + counts).exit_code, 0);
  const CliRun r = run("reconstruct --counts " + counts + " --method mle --target X");
  ASSERT_EQ(r.exit_code, 0);
  const json j = json::parse(r.out);
  EXPECT_GE(j["metrics"]["fidelity"].get<double>(), 0.995);
  EXPECT_EQ(j["metadata"]["input_digests"].size(), 1u);

  const CliRun lin = run("reconstruct --counts " + counts + " --method linear --target X");
  ASSERT_EQ(lin.exit_code, 0);
  EXPECT_GE(json::parse(lin.out)["metrics"]["fidelity"].get<double>(), 0.99);
}

TEST_F(CliTest, EmptyCountsFileIsInvalidInput) {
  const std::string empty = path("empty.csv");
  std::ofstream(empty).close();
  EXPECT_EQ(run("reconstruct --counts " + empty).exit_code, 2);
  EXPECT_EQ(run("reconstruct --counts " + path("missing.csv")).exit_code, 2);
}

TEST_F(CliTest, MalformedCountsReportLine) {
  const std::string bad = path("bad.csv");
  std::ofstream(bad) << "label,proj_s_h_re,proj_s_h_im,proj_s_v_re,proj_s_v_im,proj_i_h_re,"
                        "proj_i_h_im,proj_i_v_re,proj_i_v_im,counts,exposure\n"
                        "HH,1,0,0,0,1,0,0,0,oops,1\n";
  const std::string cmd = std::string(FWM_CLI_PATH) + " reconstruct --counts " + bad + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  std::string out;
  char buf[512];
  while (fgets(buf, sizeof buf, pipe) != nullptr) out += buf;
  const int status = pclose(pipe);
  EXPECT_EQ(WEXITSTATUS(status), 2);
  EXPECT_NE(out.find("line 2"), std::string::npos) << out;
  EXPECT_NE(out.find("counts"), std::string::npos) << out;
}

TEST_F(CliTest, Fig3PresetFitRecoversParameters) {
  const std::string hist = path("fig3.csv");
  ASSERT_EQ(run("--seed 3 simulate-g2 --preset fig3 -o " + hist).exit_code, 0);
  const CliRun r = run("fit-g2 --preset fig3 --histogram " + hist);
  ASSERT_EQ(r.exit_code, 0);
  const json j = json::parse(r.out);
  EXPECT_NEAR(j["params"]["G0"].get<double>(), 10.0, 0.3);
  EXPECT_NEAR(j["params"]["background"].get<double>(), 1.0, 0.2);
  EXPECT_TRUE(j["converged"].get<bool>());
}

TEST_F(CliTest, Fig2PresetFitRecoversDecay) {
  const std::string hist = path("fig2x.csv");
  ASSERT_EQ(run("--seed 3 simulate-g2 --preset fig2x -o " + hist).exit_code, 0);
  const CliRun r = run("fit-g2 --model single --histogram " + hist);
  ASSERT_EQ(r.exit_code, 0);
  const json j = json::parse(r.out);
  EXPECT_NEAR(j["params"]["tau_d"].get<double>(), 5.6, 0.112);
}

TEST_F(CliTest, BeatParams) {
  const CliRun r = run("beat-params");
  ASSERT_EQ(r.exit_code, 0);
  const json j = json::parse(r.out);
  EXPECT_GT(j["R"].get<double>(), 0.0);
  const CliRun s = run("beat-params --target-R 1.43 --target-phi 0");
  ASSERT_EQ(s.exit_code, 0);
  const json js = json::parse(s.out);
  EXPECT_TRUE(js["attainable"].get<bool>());
  EXPECT_NEAR(js["achieved"]["R"].get<double>(), 1.43, 1e-7);
}

TEST_F(CliTest, SeedFromEnvironment) {
  const CliRun b = run("--seed 5 simulate-g2 --preset fig2x");
  const std::string env = "env FWM_SEED=5 ";
  FILE* pipe = popen((env + FWM_CLI_PATH + " simulate-g2 --preset fig2x").c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  std::string c;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) c.append(buf, n);
  pclose(pipe);
  EXPECT_NE(c.find("# seed=5"), std::string::npos);
  EXPECT_NE(b.out.find("# seed=5"), std::string::npos);
  // Only the command line differs between the two.
  EXPECT_EQ(c.substr(c.find("bin_start_ns")), b.out.substr(b.out.find("bin_start_ns")));
}

TEST_F(CliTest, ByteIdenticalReruns) {
  const std::string counts = path("c.csv");
  for (const std::string args :
       {"--seed 11 simulate-tomo --path Y --n 1e3", "--seed 11 simulate-g2 --preset fig4b",
        "predict --path X", "beat-params"}) {
    const CliRun a = run(args);
    const CliRun b = run(args);
    ASSERT_EQ(a.exit_code, 0) << args;
    EXPECT_EQ(a.out, b.out) << args;
  }
  ASSERT_EQ(run("--seed 2 simulate-tomo --path X --n 1e3 -o " + counts).exit_code, 0);
  const std::string args = "--seed 4 reconstruct --counts " + counts + " --resamples 4";
  const CliRun a = run(args);
  const CliRun b = run(args);
  ASSERT_EQ(a.exit_code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, BundledDataFiles) {
  const std::string data = FWM_DATA_DIR;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::string> commands = {
      "simulate-tomo --state " + data + "/psi_x.json --n 1e4 -o " + path("c.csv"),
      "reconstruct --counts " + data + "/counts_x.csv --target " + data +
          "/psi_x.json --resamples 20",
      "reconstruct --counts " + data + "/counts_x.csv --method linear",
      "resample --counts " + data + "/counts_x.csv --n 20",
      "fit-g2 --model single --histogram " + data + "/g2_fig2x.csv",
      "fit-g2 --preset fig3 --jitter 0.3 --histogram " + data + "/g2_fig3.csv",
      "beat-params --ket-x " + data + "/psi_x.json --ket-y " + data + "/psi_y.json",
  };
  for (const auto& args : commands) {
    const CliRun r = run(args);
    EXPECT_EQ(r.exit_code, 0) << args;
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(elapsed, 60.0);

  const json fit = json::parse(run("fit-g2 --preset fig3 --jitter 0.3 --histogram " + data +
                                   "/g2_fig3.csv")
                                   .out);
  EXPECT_LT(fit["chi2_reduced"].get<double>(), 1.5);
  const json rec = json::parse(
      run("reconstruct --counts " + data + "/counts_x.csv --target " + data + "/psi_x.json").out);
  EXPECT_GE(rec["metrics"]["fidelity"].get<double>(), 0.99);
}
