#include <gtest/gtest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

fs::path scratch() {
  static const fs::path d = [] {
    fs::path p = fs::temp_directory_path() / ("qmetro_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// Runs the CLI with stdout captured to a file and stderr discarded.
Run cli(const std::string& args) {
  const fs::path out = scratch() / "stdout.txt";
  const std::string cmd = std::string(QMETRO_CLI_PATH) + " " + args + " > " + out.string() + " 2>/dev/null";
  const int st = std::system(cmd.c_str());
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, slurp(out)};
}

std::vector<std::vector<std::string>> csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> r;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) r.push_back(cell);
    if (!line.empty() && line.back() == ',') r.emplace_back();
    rows.push_back(r);
  }
  return rows;
}

double cell(const std::vector<std::vector<std::string>>& t, size_t row, const std::string& col) {
  const auto& h = t.at(0);
  const auto it = std::find(h.begin(), h.end(), col);
  if (it == h.end()) throw std::runtime_error("no column " + col);
  return std::stod(t.at(row + 1).at(it - h.begin()));
}

}  // namespace

TEST(CliQfi, GhzPure) {
  const auto r = cli("qfi --family ghz --M 3 --pure");
  ASSERT_EQ(r.code, 0);
  const auto t = csv(r.out);
  EXPECT_EQ(t[0], (std::vector<std::string>{"lambda", "qfi_trace", "qfi_spectral", "coh_curvature", "f", "fi2", "d2m"}));
  EXPECT_NEAR(cell(t, 0, "qfi_trace"), 36, 1e-9);
  EXPECT_NEAR(cell(t, 0, "qfi_spectral"), 36, 1e-9);
  EXPECT_NEAR(cell(t, 0, "fi2"), 36, 1e-6);
  EXPECT_NEAR(cell(t, 0, "d2m"), 0, 1e-6);
}

TEST(CliQfi, QubitClosedForm) {
  const auto r = cli("qfi --family qubit --z 0.8 --delta 1.5707963 --gamma 1");
  ASSERT_EQ(r.code, 0);
  const auto t = csv(r.out);
  EXPECT_NEAR(cell(t, 0, "qfi_trace"), 2.56, 1e-9);
  EXPECT_NEAR(cell(t, 0, "coh_curvature"), 2.56, 1e-6);
}

TEST(CliQfi, MatrixFile) {
  const fs::path m = scratch() / "qubit.json";
  std::ofstream(m) << R"({"rho": [[[0.9,0],[0,0]],[[0,0],[0.1,0]]], "G": [[[0,0],[1,0]],[[1,0],[0,0]]]})";
  const auto r = cli("qfi --family matrix --matrix " + m.string());
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(cell(csv(r.out), 0, "qfi_trace"), 2.56, 1e-9);
  const fs::path bad = scratch() / "bad.json";
  std::ofstream(bad) << R"({"rho": [[[0.9,0],[0.1,0]],[[0,0],[0.1,0]]], "G": [[[0,0],[1,0]],[[1,0],[0,0]]]})";
  EXPECT_EQ(cli("qfi --family matrix --matrix " + bad.string()).code, 2);
}

TEST(CliQfi, ConfigFileAndOverride) {
  const fs::path c = scratch() / "cfg.json";
  std::ofstream(c) << R"({"format": "csv", "qfi": {"family": "ghz", "M": 2, "weights": [0.7, 0.3], "lambda": [0, 0.1]}})";
  const auto r = cli("--config " + c.string());
  ASSERT_EQ(r.code, 0);
  const auto t = csv(r.out);
  ASSERT_EQ(t.size(), 3u);
  // 4 (M^2 - <Oz>^2 ...) with eigenvalues +-2, 0: QFI = 4 (0.7 * 4) = 11.2
  EXPECT_NEAR(cell(t, 0, "qfi_trace"), 11.2, 1e-9);
  EXPECT_NEAR(cell(t, 1, "lambda"), 0.1, 0);
  const auto o = cli("--config " + c.string() + " qfi --lambda 0.3");
  ASSERT_EQ(o.code, 0);
  EXPECT_EQ(csv(o.out).size(), 2u);
  EXPECT_NEAR(cell(csv(o.out), 0, "lambda"), 0.3, 0);
}

TEST(CliErrors, ExitCodes) {
  const fs::path out = scratch() / "never.csv";
  fs::remove(out);
  EXPECT_EQ(cli("qfi --family ghz --M three --output " + out.string()).code, 2);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_EQ(cli("qfi --family ghz --M 3 --output " + out.string()).code, 2);  // neither --pure nor weights
  EXPECT_EQ(cli("qfi --family ghz --M 3 --pure --format xml").code, 2);
  EXPECT_EQ(cli("noise-sweep --M 10 --output " + out.string()).code, 2);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_EQ(cli("noise-sweep --M-range 10 10 5").code, 2);
  EXPECT_EQ(cli("ceqe-scan --L 6 16").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  const fs::path c = scratch() / "extra.json";
  std::ofstream(c) << R"({"qfi": {"pure": true, "bogus": 1}})";
  EXPECT_EQ(cli("--config " + c.string()).code, 2);
  // finite-difference step far too coarse for a fast rotation
  EXPECT_EQ(cli("qfi --family qubit --gamma 40 --step 0.05 --output " + out.string()).code, 3);
  EXPECT_FALSE(fs::exists(out));
}

TEST(CliSweep, ColumnsAndSlopes) {
  const auto r = cli("noise-sweep --channel parallel --M 10 20 40");
  ASSERT_EQ(r.code, 0);
  const auto t = csv(r.out);
  EXPECT_EQ(t[0], (std::vector<std::string>{"M", "inv_qfi_rate", "inv_coh_rate", "analytic_bound", "fitted_slope"}));
  ASSERT_EQ(t.size(), 4u);
  EXPECT_EQ(t[1].back(), "");
  EXPECT_NEAR(cell(t, 2, "fitted_slope"), 1.0, 0.05);
  for (size_t i = 0; i < 3; ++i) EXPECT_LT(std::abs(cell(t, i, "inv_qfi_rate") / cell(t, i, "analytic_bound") - 1), 1e-6);
  const auto tr = cli("noise-sweep --M 10 20 30");
  ASSERT_EQ(tr.code, 0);
  EXPECT_LT(cell(csv(tr.out), 2, "fitted_slope"), -1.5);
}

TEST(CliScan, TfimAndCommuting) {
  const fs::path out = scratch() / "scan.csv";
  ASSERT_EQ(cli("ceqe-scan --L 4 6 8 --output " + out.string()).code, 0);
  const auto t = csv(slurp(out));
  ASSERT_EQ(t.size(), 4u);
  for (size_t i = 1; i < 3; ++i) EXPECT_GT(cell(t, i, "qfi_peak_over_L"), cell(t, i - 1, "qfi_peak_over_L"));
  const auto s = nlohmann::json::parse(slurp(out.string() + ".summary.json"));
  EXPECT_TRUE(s["super_extensive"].get<bool>());
  EXPECT_GT(s["exponent"].get<double>(), 1.0);
  const auto c = cli("ceqe-scan --model commuting --L 3 4 --grid 0.1 0.2 0.3");
  ASSERT_EQ(c.code, 0);
  EXPECT_EQ(cell(csv(c.out), 1, "qfi_peak"), 0.0);
}

TEST(CliFormat, JsonMirrorsCsvDigits) {
  const auto a = cli("qfi --family random --dim 4 --lambda 0 0.2");
  const auto b = cli("qfi --family random --dim 4 --lambda 0 0.2 --format json");
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  const auto t = csv(a.out);
  const auto j = nlohmann::json::parse(b.out);
  for (size_t r = 0; r < 2; ++r)
    for (const auto& col : t[0]) {
      const double x = cell(t, r, col), y = j["rows"][r][col].get<double>();
      EXPECT_LE(std::abs(x - y), 1e-12 * std::max(1.0, std::abs(y))) << col;
    }
  EXPECT_EQ(a.out.find('\r'), std::string::npos);
}

TEST(CliDeterminism, ByteIdenticalAcrossRunsAndJobs) {
  const std::string base = "qfi --family random --dim 6 --seed 9 --lambda 0 0.1 0.2 0.3";
  const auto a = cli(base), b = cli(base), c = cli(base + " --jobs 3");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
  EXPECT_NE(a.out, cli("qfi --family random --dim 6 --seed 10 --lambda 0 0.1 0.2 0.3").out);
  const auto s1 = cli("noise-sweep --M 10 20 30 40 --jobs 1"), s2 = cli("noise-sweep --M 10 20 30 40 --jobs 4");
  EXPECT_EQ(s1.out, s2.out);
}
