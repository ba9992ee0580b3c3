// qmetro command-line front end.
//
//   qmetro_cli [--config f.json] [--output path] [--format csv|json] [--jobs n] [--seed s] <command> ...
//
// Commands: qfi, noise-sweep, ceqe-scan. Exit codes: 0 ok, 2 bad configuration,
// 3 numerical invariant failure.

#include "qmetro/qmetro.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace qmetro;
using nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// JSON config files: top-level keys are global options, nested objects are
// keyed by subcommand name.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config: top level must be an object");
    std::vector<CLI::ConfigItem> out;
    flatten(j, {}, out);
    return out;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
      return buf;
    }
    throw CLI::ConversionError("config: unsupported value " + v.dump());
  }

  static void flatten(const json& j, std::vector<std::string> parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, v] : j.items()) {
      if (v.is_object()) {
        auto p = parents;
        p.push_back(key);
        // section markers select the subcommand
        out.push_back({p, "++", {}});
        flatten(v, p, out);
        out.push_back({p, "--", {}});
        continue;
      }
      CLI::ConfigItem item{parents, key, {}};
      if (v.is_array())
        for (const auto& x : v) item.inputs.push_back(scalar(x));
      else
        item.inputs.push_back(scalar(v));
      out.push_back(std::move(item));
    }
  }
};

// ---------------------------------------------------------------- output

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// A table with named columns. Empty cells are written as blanks in CSV and
// null in JSON.
struct Table {
  std::vector<std::string> cols;
  std::vector<std::vector<std::optional<double>>> rows;
  json summary;  // optional trailing object

  std::string csv() const {
    std::ostringstream s;
    for (size_t i = 0; i < cols.size(); ++i) s << (i ? "," : "") << cols[i];
    s << '\n';
    for (const auto& r : rows) {
      for (size_t i = 0; i < r.size(); ++i) s << (i ? "," : "") << (r[i] ? num(*r[i]) : "");
      s << '\n';
    }
    return s.str();
  }

  json to_json() const {
    json out;
    out["columns"] = cols;
    out["rows"] = json::array();
    for (const auto& r : rows) {
      json o = json::object();
      for (size_t i = 0; i < r.size(); ++i) o[cols[i]] = r[i] && std::isfinite(*r[i]) ? json(*r[i]) : json(nullptr);
      out["rows"].push_back(o);
    }
    if (!summary.is_null()) out["summary"] = summary;
    return out;
  }
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open output file " + path);
  f << text;
}

// ---------------------------------------------------------------- options

struct Global {
  std::string output, format = "csv", summary;
  int jobs = 1;
  std::uint64_t seed = 42;
};

struct QfiOpts {
  std::string family = "ghz", matrix;
  int M = 3, dim = 4;
  bool pure = false;
  std::vector<double> weights, lambdas{0.0};
  double z = 0.8, delta = std::numbers::pi / 2, gamma = 1.0, step = 0;
};

struct SweepOpts {
  std::string channel = "transverse";
  double omega = 1, gamma = 1;
  std::vector<int> Ms;
  std::vector<int> range;  // min max step
  int fit_from = 0;
};

struct ScanOpts {
  std::string model = "tfim";
  std::vector<int> Ls{6, 8, 10};
  double J = 1;
  bool periodic = false;
  std::vector<double> grid;
  double grid_min = 0.5, grid_max = 1.4;
  int grid_points = 31;
};

// ---------------------------------------------------------------- qfi

CMatrix read_matrix(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string("matrix file: ") + what + " must be a non-empty array");
  const auto n = Eigen::Index(j.size());
  CMatrix m(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto& row = j[a];
    if (!row.is_array() || Eigen::Index(row.size()) != n) throw ConfigError(std::string("matrix file: ") + what + " not square");
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto& e = row[b];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw ConfigError(std::string("matrix file: entries of ") + what + " must be [re, im] pairs");
      m(a, b) = cplx(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

struct QfiSetup {
  StateFamily fam;
  int ghz_M = 0;  // > 0 selects the GHZ-natural tensor product structure
};

QfiSetup build_family(const QfiOpts& o, std::uint64_t seed) {
  if (o.family == "ghz") {
    constexpr int kMaxCliGhz = 8;
    if (o.M < 1 || o.M > kMaxCliGhz) throw ConfigError("ghz: --M must be in [1, 8]");
    GhzMixture g = GhzMixture::pure(o.M);
    if (!o.pure) {
      if (o.weights.empty()) throw ConfigError("ghz: give --pure or --weights");
      g.w = o.weights;
    } else if (!o.weights.empty()) {
      throw ConfigError("ghz: --pure and --weights are exclusive");
    }
    g.validate();
    return {*ghz_family(g, true).family, o.M};
  }
  if (o.family == "qubit") {
    if (!(o.z >= 0 && o.z <= 1)) throw ConfigError("qubit: --z must be in [0, 1]");
    BlochQubit q;
    q.z = o.z;
    q.delta = o.delta;
    q.gamma = o.gamma;
    return {q.family(), 0};
  }
  if (o.family == "random") {
    if (o.dim < 2 || o.dim > 64 || o.dim % 2) throw ConfigError("random: --dim must be even and in [2, 64]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    Eigen::MatrixXd a(o.dim, o.dim), g(o.dim, o.dim);
    for (int i = 0; i < o.dim; ++i)
      for (int j = 0; j < o.dim; ++j) a(i, j) = u(rng);
    for (int i = 0; i < o.dim; ++i)
      for (int j = 0; j < o.dim; ++j) g(i, j) = u(rng);
    Eigen::MatrixXd r = a * a.transpose();
    r /= r.trace();
    return {StateFamily::unitary_family(from_real(r), from_real((g + g.transpose()) * 0.5)), 0};
  }
  if (o.family == "matrix") {
    if (o.matrix.empty()) throw ConfigError("matrix: --matrix <file> required");
    std::ifstream f(o.matrix);
    if (!f) throw ConfigError("matrix: cannot read " + o.matrix);
    json j;
    try {
      f >> j;
    } catch (const json::exception& e) {
      throw ConfigError(std::string("matrix: ") + e.what());
    }
    if (!j.contains("rho") || !j.contains("G")) throw ConfigError("matrix: file needs \"rho\" and \"G\"");
    const CMatrix rho = read_matrix(j["rho"], "rho"), G = read_matrix(j["G"], "G");
    try {
      DensityMatrix::checked(rho);
      if (!is_hermitian(G, 1e-12)) throw NonHermitian("G not Hermitian");
      return {StateFamily::unitary_family(rho, G), 0};
    } catch (const Error& e) {
      throw ConfigError(std::string("matrix: ") + e.what());
    }
  }
  throw ConfigError("qfi: unknown family " + o.family);
}

Table cmd_qfi(const QfiOpts& o, const Global& g) {
  if (o.lambdas.empty()) throw ConfigError("qfi: empty --lambda list");
  if (o.step < 0) throw ConfigError("qfi: --step must be positive");
  const auto setup = build_family(o, g.seed);
  Table t;
  t.cols = {"lambda", "qfi_trace", "qfi_spectral", "coh_curvature", "f", "fi2", "d2m"};
  const double spectral = qfi_spectral(setup.fam.rho0, setup.fam.G);
  // Structure at lambda = 0, carried to lambda by U(lambda). Deciding it
  // directly at lambda would depend on the eigenvector phase convention.
  std::optional<TpsDecomposition> tps0;
  try {
    const double h0 = o.step > 0 ? o.step : default_step(0);
    const auto s0 = sld(setup.fam.rho0, family_derivative(setup.fam, 0, h0));
    tps0 = setup.ghz_M > 0 ? ghz_tps(setup.ghz_M, s0.L) : tps_decompose(s0);
  } catch (const OddDimension& e) {
    std::cerr << "warning: no SLD tensor product structure: " << e.what() << '\n';
  } catch (const NotAntisymmetric& e) {
    std::cerr << "warning: no SLD tensor product structure: " << e.what() << '\n';
  }
  auto row = [&](size_t i) {
    const double l = o.lambdas[i];
    const double h = o.step > 0 ? o.step : default_step(l);
    const auto cd = coherence_decompose(setup.fam, l, h);
    const CMatrix r = setup.fam(l);
    const auto s = sld(r, family_derivative(setup.fam, l, h));
    std::optional<double> fi2, d2m;
    if (tps0) {
      const CMatrix U = unitary_from_generator(setup.fam.G, l);
      const auto sp = qfi_split(setup.fam, tps_from_pairs(U * tps0->l1, U * tps0->l2, s.L), l, h);
      fi2 = sp.fi2;
      d2m = sp.d2m;
    }
    return std::vector<std::optional<double>>{l, qfi_trace(r, s), spectral, cd.curvature, cd.f, fi2, d2m};
  };
  t.rows = parallel_map(o.lambdas.size(), g.jobs, row);
  return t;
}

// ---------------------------------------------------------------- noise-sweep

std::vector<int> sweep_list(const SweepOpts& o) {
  if (!o.Ms.empty() && !o.range.empty()) throw ConfigError("noise-sweep: --M and --M-range are exclusive");
  if (!o.range.empty()) {
    if (o.range.size() != 3 || o.range[2] <= 0 || o.range[0] < 1 || o.range[1] < o.range[0])
      throw ConfigError("noise-sweep: --M-range takes min max step");
    std::vector<int> Ms;
    for (int M = o.range[0]; M <= o.range[1]; M += o.range[2]) Ms.push_back(M);
    return Ms;
  }
  if (!o.Ms.empty()) return o.Ms;
  std::vector<int> Ms;
  for (int M = 10; M <= 100; M += 10) Ms.push_back(M);
  return Ms;
}

Table cmd_noise_sweep(const SweepOpts& o, const Global& g) {
  const auto Ms = sweep_list(o);
  if (Ms.size() < 2) throw ConfigError("noise-sweep: need at least two values of M for a fit");
  for (size_t i = 1; i < Ms.size(); ++i)
    if (Ms[i] <= Ms[i - 1]) throw ConfigError("noise-sweep: M values must be ascending");
  if (!(o.omega > 0) || !(o.gamma > 0)) throw ConfigError("noise-sweep: --omega and --gamma must be positive");
  Table t;
  t.cols = {"M", "inv_qfi_rate", "inv_coh_rate", "analytic_bound", "fitted_slope"};
  if (o.channel == "transverse") {
    if (o.fit_from > 0 && std::count_if(Ms.begin(), Ms.end(), [&](int M) { return M >= o.fit_from; }) < 2)
      throw ConfigError("noise-sweep: fewer than two points at M >= --fit-from");
    const auto r = transverse_sweep(Ms, o.omega, o.gamma, o.fit_from, g.jobs);
    for (const auto& row : r.rows) t.rows.push_back({double(row.M), row.inv_qfi_rate, row.inv_coh_rate, row.bound, {}});
    t.rows.back().back() = r.slope;
    t.summary = {{"channel", "transverse"}, {"fitted_slope", r.slope}, {"coh_slope", r.coh_slope}};
  } else if (o.channel == "parallel") {
    const auto r = parallel_sweep(Ms, o.omega, o.gamma, g.jobs);
    for (const auto& row : r.rows)
      t.rows.push_back({double(row.M), 1.0 / row.rate, 1.0 / row.coh_rate, 1.0 / row.rate_closed, {}});
    t.rows.back().back() = r.slope;
    t.summary = {{"channel", "parallel"}, {"fitted_slope", r.slope}};
  } else {
    throw ConfigError("noise-sweep: --channel must be transverse or parallel");
  }
  return t;
}

// ---------------------------------------------------------------- ceqe-scan

Table cmd_ceqe_scan(const ScanOpts& o, const Global& g) {
  if (o.Ls.empty()) throw ConfigError("ceqe-scan: empty --L list");
  for (int L : o.Ls) {
    if (L > kMaxTfimSites) throw DimTooLarge("ceqe-scan: L = " + std::to_string(L) + " exceeds 14");
    if (L < 2) throw ConfigError("ceqe-scan: L must be >= 2");
  }
  std::vector<double> grid = o.grid;
  if (grid.empty()) {
    if (o.grid_points < 3 || !(o.grid_max > o.grid_min)) throw ConfigError("ceqe-scan: bad grid");
    for (int i = 0; i < o.grid_points; ++i) grid.push_back(o.grid_min + (o.grid_max - o.grid_min) * i / (o.grid_points - 1));
  }
  std::function<HamiltonianFamily(int)> make;
  if (o.model == "tfim")
    // the ground state sits in the even sector for lambda > 0 only
    make = [&](int L) { return tfim_family(L, o.J, o.periodic, grid.front() > 0); };
  else if (o.model == "commuting")
    make = [&](int L) { return commuting_family(L, o.J); };
  else
    throw ConfigError("ceqe-scan: --model must be tfim or commuting");
  const auto fit = critical_scan(make, o.Ls, grid, g.jobs);
  Table t;
  t.cols = {"L", "lambda_star", "qfi_peak", "qfi_peak_over_L"};
  for (size_t i = 0; i < fit.L.size(); ++i)
    t.rows.push_back({double(fit.L[i]), fit.lambda_star[i], fit.peak[i], fit.peak[i] / fit.L[i]});
  if (!fit.fitted) std::cerr << "warning: QFI peak vanishes; no scaling fit\n";
  t.summary = {{"model", o.model},
               {"fitted", fit.fitted},
               {"exponent", fit.fitted ? json(fit.exponent) : json(nullptr)},
               {"residual", fit.fitted ? json(fit.residual) : json(nullptr)},
               {"super_extensive", fit.super_extensive},
               {"skipped_points", fit.skipped.size()}};
  return t;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum estimation toolkit"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON configuration file");
  app.require_subcommand(1);
  app.allow_config_extras(CLI::config_extras_mode::error);
  Global g;
  app.add_option("--output", g.output, "output file (default stdout)");
  app.add_option("--format", g.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--summary", g.summary, "summary JSON path for csv output (default <output>.summary.json)");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::Range(1, 256));
  app.add_option("--seed", g.seed, "seed for randomized families");

  QfiOpts q;
  auto* qfi = app.add_subcommand("qfi", "QFI, coherence curvature and SLD split of one family");
  qfi->add_option("--family", q.family, "ghz, qubit, random or matrix")->check(CLI::IsMember({"ghz", "qubit", "random", "matrix"}));
  qfi->add_option("--M", q.M, "GHZ qubit count");
  qfi->add_flag("--pure", q.pure, "pure GHZ state");
  qfi->add_option("--weights", q.weights, "GHZ class weights w_0..w_{M-1}");
  qfi->add_option("--z", q.z, "qubit Bloch length");
  qfi->add_option("--delta", q.delta, "qubit generator angle");
  qfi->add_option("--gamma", q.gamma, "qubit generator strength");
  qfi->add_option("--dim", q.dim, "random family dimension");
  qfi->add_option("--matrix", q.matrix, "JSON file with rho and G as [re, im] arrays");
  qfi->add_option("--lambda", q.lambdas, "working points");
  qfi->add_option("--step", q.step, "finite-difference step");

  SweepOpts s;
  auto* sweep = app.add_subcommand("noise-sweep", "GHZ rate scaling under transverse or parallel noise");
  sweep->add_option("--channel", s.channel, "transverse or parallel");
  sweep->add_option("--omega", s.omega);
  sweep->add_option("--gamma", s.gamma);
  sweep->add_option("--M", s.Ms, "qubit counts");
  sweep->add_option("--M-range", s.range, "min max step")->expected(3);
  sweep->add_option("--fit-from", s.fit_from, "fit over M >= this (default: top half)");

  ScanOpts c;
  auto* scan = app.add_subcommand("ceqe-scan", "finite-size scan of the ground-state QFI peak");
  scan->add_option("--model", c.model, "tfim or commuting");
  scan->add_option("--L", c.Ls, "chain lengths");
  scan->add_option("--J", c.J);
  scan->add_flag("--periodic", c.periodic);
  scan->add_option("--grid", c.grid, "explicit lambda grid");
  scan->add_option("--grid-min", c.grid_min);
  scan->add_option("--grid-max", c.grid_max);
  scan->add_option("--grid-points", c.grid_points);

  for (auto* sub : {qfi, sweep, scan}) sub->configurable()->fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    Table t;
    if (*qfi)
      t = cmd_qfi(q, g);
    else if (*sweep)
      t = cmd_noise_sweep(s, g);
    else
      t = cmd_ceqe_scan(c, g);
    if (g.format == "json") {
      write_text(g.output, t.to_json().dump(2) + "\n");
    } else {
      write_text(g.output, t.csv());
      if (!t.summary.is_null()) {
        const std::string sp = !g.summary.empty() ? g.summary : (g.output.empty() || g.output == "-" ? "" : g.output + ".summary.json");
        if (sp.empty())
          std::cerr << t.summary.dump() << '\n';
        else
          write_text(sp, t.summary.dump(2) + "\n");
      }
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << (e.numeric() ? "numeric failure: " : "config error: ") << e.what() << '\n';
    return e.numeric() ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
