#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "plmf/error.hpp"
#include "plmf/harness.hpp"
#include "plmf/io.hpp"
#include "plmf/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

int exit_code(plmf::ErrorCategory category) {
  switch (category) {
    case plmf::ErrorCategory::usage:
      return kExitUsage;
    case plmf::ErrorCategory::numerical:
      return kExitNumerical;
    case plmf::ErrorCategory::data:
      break;
  }
  return kExitData;
}

std::string fixed(double v, int digits = 4) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw plmf::Error(plmf::Errc::io_error, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json p_json(double p) { return std::isinf(p) ? json("inf") : json(p); }

// Flags shared by analyze, mc and compare. Unset flags leave the base options alone.
struct AnalysisFlags {
  std::vector<std::string> p;
  std::vector<double> q;
  std::vector<double> q_range;
  int j1 = 0;
  int j2 = 0;
  int n_vanishing = 0;
  bool restricted = false;
  bool no_correction = false;
  bool uniform = false;
  bool mfdfa = false;
  int mfdfa_degree = 0;
  bool mfdfa_integrate = false;
  bool no_p0 = false;

  void attach(CLI::App& app) {
    app.add_option("--p", p, "p values, e.g. 0.5,2,inf")->delimiter(',');
    app.add_option("--q", q, "explicit q grid")->delimiter(',');
    app.add_option("--q-range", q_range, "q grid as min,max,step")->delimiter(',')->expected(3);
    app.add_option("--j1", j1, "finest octave of the scaling range");
    app.add_option("--j2", j2, "coarsest octave of the scaling range");
    app.add_option("--vanishing-moments", n_vanishing, "Daubechies vanishing moments");
    app.add_flag("--restricted", restricted, "leaders without the 3^d neighbourhood");
    app.add_flag("--no-correction", no_correction, "disable the finite-size correction");
    app.add_flag("--uniform-weights", uniform, "uniform regression weights instead of counts");
    app.add_flag("--mfdfa", mfdfa, "add the MFDFA estimator (1D only)");
    app.add_option("--mfdfa-degree", mfdfa_degree, "MFDFA detrending degree");
    app.add_flag("--mfdfa-integrate", mfdfa_integrate, "integrate the series before MFDFA");
    app.add_flag("--no-p0", no_p0, "skip the critical-index estimate");
  }

  void apply(plmf::AnalysisOptions& o) const {
    if (!p.empty()) {
      o.p_list.clear();
      for (const auto& s : p) o.p_list.push_back(plmf::parse_p(s));
    }
    if (!q.empty()) o.q_grid = q;
    if (!q_range.empty()) {
      const double lo = q_range[0], hi = q_range[1], step = q_range[2];
      if (!(step > 0.0) || hi < lo) throw plmf::Error(plmf::Errc::invalid_parameter, "--q-range needs min <= max, step > 0");
      o.q_grid.clear();
      const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
      for (std::size_t i = 0; i <= count; ++i) o.q_grid.push_back(lo + step * static_cast<double>(i));
    }
    if (j1 > 0) o.j1 = j1;
    if (j2 > 0) o.j2 = j2;
    if (n_vanishing > 0) o.n_vanishing = n_vanishing;
    if (restricted) o.mode = plmf::Neighborhood::restricted;
    if (no_correction) o.corrected = false;
    if (uniform) o.weights = plmf::WeightScheme::uniform;
    if (mfdfa) o.mfdfa = true;
    if (mfdfa_degree > 0) o.mfdfa_degree = mfdfa_degree;
    if (mfdfa_integrate) o.mfdfa_integrate = true;
    if (no_p0) o.estimate_p0 = false;
  }
};

struct ProcessFlags {
  double H = std::nan("");
  double lambda = std::nan("");
  double nu = std::nan("");
  double sigma = std::nan("");
  double L = std::nan("");
  double alpha = std::nan("");
  double eta = std::nan("");
  double m = std::nan("");
  double beta = std::nan("");
  double gamma = std::nan("");
  std::size_t n = 0;
  std::size_t side = 0;
  std::string trend;

  void attach(CLI::App& app) {
    app.add_option("--H", H, "MRW Hurst exponent");
    app.add_option("--lambda", lambda, "MRW intermittency");
    app.add_option("--nu", nu, "MRW fractional differentiation order");
    app.add_option("--sigma", sigma, "MRW increment standard deviation");
    app.add_option("--L", L, "MRW correlation length in samples");
    app.add_option("--alpha", alpha, "LWS regularity or CMC integration order");
    app.add_option("--eta", eta, "LWS lacunarity");
    app.add_option("--m", m, "CMC log-normal parameter");
    app.add_option("--beta", beta, "CMC log-Poisson beta");
    app.add_option("--gamma", gamma, "CMC log-Poisson gamma");
    app.add_option("-n,--length", n, "1D sample count (power of two)");
    app.add_option("--side", side, "2D side length (power of two)");
    app.add_option("--trend", trend, "trend added to 1D signals: none, cusp")->check(CLI::IsMember({"none", "cusp"}));
  }

  void apply(plmf::ExperimentConfig& c) const {
    auto set = [](double v, double& field) {
      if (!std::isnan(v)) field = v;
    };
    set(H, c.mrw.H);
    set(lambda, c.mrw.lambda);
    set(nu, c.mrw.nu);
    set(sigma, c.mrw.sigma);
    if (!std::isnan(L)) c.mrw.L = static_cast<std::size_t>(L);
    set(eta, c.lws.eta);
    set(m, c.cmc.m);
    set(beta, c.cmc.beta);
    set(gamma, c.cmc.gamma);
    if (!std::isnan(alpha)) {
      c.lws.alpha = alpha;
      c.cmc.alpha = alpha;
    }
    if (n > 0) {
      c.mrw.n = n;
      c.lws.n = n;
    }
    if (side > 0) c.cmc.side = side;
    if (trend == "cusp") c.trend.kind = plmf::TrendKind::cusp;
    if (trend == "none") c.trend.kind = plmf::TrendKind::none;
  }
};

void print_bundle(const plmf::AnalysisBundle& b) {
  std::cout << "dimension " << b.dimension << ", " << b.sample_count << " samples, octaves " << b.j1 << ".." << b.j2
            << "\n";
  std::cout << "hmin " << fixed(b.hmin) << ", p0 " << fixed(b.p0_hat, 3) << "\n\n";
  std::cout << "estimator   eta_p     c1        c2        c3        c4\n";
  for (const auto& e : b.estimators) {
    char line[160];
    if (!e.ok) {
      std::snprintf(line, sizeof line, "%-10s  failed: %s", e.name.c_str(), e.error.c_str());
    } else {
      const bool uncorrected = e.name != "mfdfa" && std::isfinite(e.p) && !e.corrected;
      std::snprintf(line, sizeof line, "%-10s  %-8s  %-8s  %-8s  %-8s  %-8s%s", e.name.c_str(), fixed(e.eta_p, 3).c_str(),
                    fixed(e.estimates.c[0]).c_str(), fixed(e.estimates.c[1]).c_str(), fixed(e.estimates.c[2]).c_str(),
                    fixed(e.estimates.c[3]).c_str(), uncorrected ? "  (uncorrected)" : "");
    }
    std::cout << line << "\n";
  }
  for (const auto& w : b.warnings) std::cerr << "warning: " << w << "\n";
}

void print_aggregates(const plmf::ResultSet& rs) {
  std::cout << rs.records.size() << " realisations";
  if (rs.resumed) std::cout << " (" << rs.resumed << " resumed)";
  std::cout << ", " << rs.failures.size() << " estimator failures\n\n";
  std::cout << "estimator   m  truth     mean      sd        rmse\n";
  for (const auto& a : rs.aggregates) {
    char line[160];
    std::snprintf(line, sizeof line, "%-10s  %d  %-8s  %-8s  %-8s  %-8s", a.estimator.c_str(), a.order,
                  fixed(a.truth).c_str(), fixed(a.mean).c_str(), fixed(a.sd).c_str(), fixed(a.rmse).c_str());
    std::cout << line << "\n";
  }
  const auto p0 = rs.p0_estimates();
  if (!p0.empty()) {
    double mean = 0.0;
    for (double v : p0) mean += v;
    std::cout << "\nmean p0 estimate " << fixed(mean / static_cast<double>(p0.size()), 3) << " over " << p0.size()
              << " realisations\n";
  }
}

plmf::ExperimentConfig load_config(const std::string& path, const std::string& process) {
  if (!path.empty()) {
    auto c = plmf::config_from_json(read_file(path));
    if (!process.empty()) throw plmf::Error(plmf::Errc::invalid_parameter, "--process conflicts with --config");
    return c;
  }
  return plmf::default_experiment(plmf::parse_process(process.empty() ? "mrw" : process));
}

// Oracle values written next to synthesized data.
json oracle_json(const plmf::ExperimentConfig& c) {
  json o;
  const std::vector<double> p_grid{0.25, 0.5, 1.0, 2.0, 4.0, 5.0, 8.0, 10.0, plmf::kInfinity};
  switch (c.process) {
    case plmf::ProcessKind::mrw: {
      const auto cm = plmf::mrw_cumulants(c.mrw);
      o["c1"] = cm.c1;
      o["c2"] = cm.c2;
      try {
        o["p0"] = p_json(plmf::mrw_p0(c.mrw));
      } catch (const plmf::Error&) {
        o["p0"] = nullptr;
      }
      json eta = json::array();
      for (double p : p_grid)
        if (std::isfinite(p)) eta.push_back({{"p", p}, {"eta", plmf::mrw_eta(p, c.mrw)}});
      o["eta"] = eta;
      break;
    }
    case plmf::ProcessKind::lws: {
      json ends = json::array();
      for (double p : p_grid)
        ends.push_back({{"p", p_json(p)}, {"right_endpoint", plmf::lws_right_endpoint(c.lws.alpha, c.lws.eta, p)}});
      o["hmin"] = c.lws.alpha;
      o["right_endpoints"] = ends;
      break;
    }
    case plmf::ProcessKind::cmc_ln:
    case plmf::ProcessKind::cmc_lp: {
      plmf::CmcParams p = c.cmc;
      p.kind = c.process == plmf::ProcessKind::cmc_ln ? plmf::CmcKind::log_normal : plmf::CmcKind::log_poisson;
      const auto cm = plmf::cmc_cumulants(p);
      o["c"] = cm;
      json zeta = json::array();
      for (int i = -10; i <= 10; ++i) zeta.push_back({{"q", 0.5 * i}, {"zeta", plmf::cmc_zeta(p, 0.5 * i)}});
      o["zeta"] = zeta;
      break;
    }
  }
  return o;
}

json params_json(const plmf::ExperimentConfig& c) {
  const json full = json::parse(plmf::config_to_json(c));
  switch (c.process) {
    case plmf::ProcessKind::mrw:
      return full.at("mrw");
    case plmf::ProcessKind::lws:
      return full.at("lws");
    case plmf::ProcessKind::cmc_ln:
    case plmf::ProcessKind::cmc_lp:
      return full.at("cmc");
  }
  return {};
}

void write_sidecar(const fs::path& data_path, const json& extra) {
  fs::path sidecar = data_path;
  sidecar.replace_extension(".json");
  json j = json::object();
  if (fs::exists(sidecar)) j = json::parse(read_file(sidecar));
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  std::ofstream out(sidecar);
  if (!out) throw plmf::Error(plmf::Errc::io_error, "cannot write " + sidecar.string());
  out << j.dump(2) << "\n";
}

int run_analyze(const std::string& input, const std::string& config_path, const AnalysisFlags& flags,
                const std::string& out_dir) {
  plmf::AnalysisOptions options;
  if (!config_path.empty()) options = plmf::config_from_json(read_file(config_path)).analysis;
  options.tolerate_failures = false;
  flags.apply(options);
  const auto bundle = plmf::analyze_file(input, options);
  print_bundle(bundle);
  if (!out_dir.empty()) plmf::write_bundle(out_dir, bundle, options);
  return 0;
}

int run_synth(const std::string& process, const std::string& output, std::uint64_t seed, std::size_t index,
              int n_vanishing, const ProcessFlags& flags, double omega0, double omega1, int depth) {
  if (process == "cascade") {
    const auto pyr = plmf::gen_deterministic_cascade(omega0, omega1, depth);
    plmf::write_pyramid(output, pyr);
    json eta = json::array();
    for (int i = -10; i <= 10; ++i)
      eta.push_back({{"q", 0.5 * i}, {"eta", plmf::cascade_eta(omega0, omega1, 0.5 * i)}});
    const json oracle{{"process", "cascade"}, {"omega0", omega0}, {"omega1", omega1}, {"J", depth}, {"eta", eta}};
    std::ofstream out(fs::path(output) / "oracle.json");
    out << oracle.dump(2) << "\n";
    std::cout << "wrote cascade pyramid to " << output << "\n";
    return 0;
  }
  auto config = plmf::default_experiment(plmf::parse_process(process));
  config.seed = seed;
  if (n_vanishing > 0) config.analysis.n_vanishing = n_vanishing;
  flags.apply(config);
  const auto data = plmf::synthesize(config, index);
  plmf::write_dataset(output, data);
  json meta{{"process", plmf::to_string(config.process)},
            {"seed", seed},
            {"realization", index},
            {"realization_seed", plmf::realization_seed(seed, index)},
            {"vanishing_moments", config.analysis.n_vanishing},
            {"parameters", params_json(config)},
            {"oracle", oracle_json(config)}};
  write_sidecar(output, meta);
  std::cout << "wrote " << data.values.size() << " samples to " << output << "\n";
  return 0;
}

// "p=2" or "p=inf" adds to the p list; "mfdfa" enables MFDFA.
void require_estimator(plmf::ExperimentConfig& c, const std::string& name) {
  if (name == "mfdfa") {
    c.analysis.mfdfa = true;
    return;
  }
  if (name.rfind("p=", 0) != 0)
    throw plmf::Error(plmf::Errc::invalid_parameter, "estimator must be 'p=<value>' or 'mfdfa', got '" + name + "'");
  const double p = plmf::parse_p(name.substr(2));
  for (double q : c.analysis.p_list)
    if (plmf::estimator_name(q) == plmf::estimator_name(p)) return;
  c.analysis.p_list.push_back(p);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"p-leader multifractal analysis, MFDFA and synthetic multifractal processes"};
  app.require_subcommand(1);

  std::string input, out_dir, config_path, process, output;
  AnalysisFlags analysis_flags;
  ProcessFlags process_flags;

  auto* analyze = app.add_subcommand("analyze", "analyze a signal, field or pyramid directory");
  analyze->add_option("input", input, "CSV, .bin or pyramid directory")->required();
  analyze->add_option("-o,--out", out_dir, "directory for estimates.csv, spectra.csv, eta.csv, summary.json");
  analyze->add_option("-c,--config", config_path, "experiment config whose analysis block sets the defaults");
  analysis_flags.attach(*analyze);

  std::uint64_t seed = 1;
  std::size_t index = 0;
  int n_vanishing = 0;
  double omega0 = 0.4, omega1 = 0.6;
  int depth = 14;
  auto* synth = app.add_subcommand("synth", "synthesize a process realisation");
  synth->add_option("process", process, "mrw, lws, cmc-ln, cmc-lp or cascade")
      ->required()
      ->check(CLI::IsMember({"mrw", "lws", "cmc-ln", "cmc-lp", "cascade"}));
  synth->add_option("-o,--out", output, "output file (.csv or .bin) or directory for cascade")->required();
  synth->add_option("--seed", seed, "experiment seed");
  synth->add_option("--index", index, "realisation index");
  synth->add_option("--vanishing-moments", n_vanishing, "filter used by wavelet-domain synthesis");
  synth->add_option("--omega0", omega0, "cascade weight of the left child");
  synth->add_option("--omega1", omega1, "cascade weight of the right child");
  synth->add_option("--J", depth, "cascade depth");
  process_flags.attach(*synth);

  std::size_t realizations = 0;
  unsigned threads = 0;
  std::string mc_process;
  bool has_seed = false;
  auto* mc = app.add_subcommand("mc", "run a Monte Carlo experiment");
  auto* compare = app.add_subcommand("compare", "paired rmse table for two estimators");
  std::string est_a, est_b;
  for (auto* cmd : {mc, compare}) {
    cmd->add_option("-c,--config", config_path, "experiment config JSON");
    cmd->add_option("--process", mc_process, "mrw, lws, cmc-ln or cmc-lp when no config is given");
    cmd->add_option("-o,--out", out_dir, "output directory (enables resume)");
    cmd->add_option("-r,--realizations", realizations, "number of realisations");
    cmd->add_option("--seed", seed, "experiment seed")->each([&has_seed](const std::string&) { has_seed = true; });
    cmd->add_option("-t,--threads", threads, "worker threads (default: PLMF_THREADS or all cores)");
    analysis_flags.attach(*cmd);
    process_flags.attach(*cmd);
  }
  compare->add_option("a", est_a, "reference estimator, e.g. p=2")->required();
  compare->add_option("b", est_b, "compared estimator, e.g. mfdfa or p=inf")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*analyze) return run_analyze(input, config_path, analysis_flags, out_dir);
    if (*synth) return run_synth(process, output, seed, index, n_vanishing, process_flags, omega0, omega1, depth);

    auto config = load_config(config_path, mc_process);
    if (realizations > 0) config.realizations = realizations;
    if (has_seed) config.seed = seed;
    if (threads > 0) config.threads = threads;
    if (!out_dir.empty()) config.output_dir = out_dir;
    analysis_flags.apply(config.analysis);
    process_flags.apply(config);

    if (*mc) {
      const auto rs = plmf::run_experiment(config);
      print_aggregates(rs);
      return 0;
    }
    require_estimator(config, est_a);
    require_estimator(config, est_b);
    const auto rs = plmf::run_experiment(config);
    const auto rows = plmf::compare_estimators(rs, est_a, est_b);
    std::cout << "m  rmse(" << est_a << ")  rmse(" << est_b << ")  ratio\n";
    std::ostringstream csv;
    csv << "order,rmse_a,rmse_b,ratio\n";
    for (const auto& r : rows) {
      std::cout << r.order << "  " << fixed(r.rmse_a) << "  " << fixed(r.rmse_b) << "  " << fixed(r.ratio, 3) << "\n";
      csv << r.order << ',' << r.rmse_a << ',' << r.rmse_b << ',' << r.ratio << '\n';
    }
    if (!config.output_dir.empty()) {
      std::ofstream out(fs::path(config.output_dir) / "compare.csv");
      out << csv.str();
    }
    return 0;
  } catch (const plmf::Error& e) {
    std::cerr << "plmf: " << e.what() << "\n";
    return exit_code(plmf::errc_category(e.code()));
  } catch (const CLI::Error& e) {
    std::cerr << "plmf: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "plmf: " << e.what() << "\n";
    return kExitData;
  }
}
