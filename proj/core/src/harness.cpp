#include "plmf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "plmf/error.hpp"

namespace plmf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kMinSamples = 256;

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error(Errc::io_error, "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error(Errc::io_error, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double parse_double(const std::string& s) {
  if (s == "nan" || s == "-nan") return std::nan("");
  if (s == "inf") return kInfinity;
  if (s == "-inf") return -kInfinity;
  return std::stod(s);
}

json p_to_json(double p) { return std::isinf(p) ? json("inf") : json(p); }
double p_from_json(const json& j) { return j.is_string() ? parse_p(j.get<std::string>()) : j.get<double>(); }

AnalysisBundle analyze_pyramid(const CoefficientPyramid& pyr, std::span<const double> series,
                               const AnalysisOptions& options) {
  AnalysisBundle bundle;
  bundle.dimension = pyr.dimension;
  bundle.sample_count = pyr.sample_count;
  bundle.j1 = options.j1.value_or(default_j1(pyr.dimension));
  if (options.j2) {
    bundle.j2 = *options.j2;
  } else {
    bundle.j2 = default_j2(compute_p_leaders(pyr, kInfinity, options.mode));
  }
  if (bundle.j2 < bundle.j1 + 2)
    throw Error(Errc::insufficient_scales, "scaling range [" + std::to_string(bundle.j1) + ", " +
                                               std::to_string(bundle.j2) + "] spans fewer than 3 octaves (" +
                                               std::to_string(pyr.octave_count()) + " octaves available)");

  auto soft = [&](const Error& e, const std::string& what) {
    if (!options.tolerate_failures) throw e;
    bundle.warnings.push_back(what + ": " + e.what());
  };

  try {
    bundle.hmin = hmin(pyr, bundle.j1, bundle.j2, options.weights);
  } catch (const Error& e) {
    soft(e, "hmin");
  }

  if (options.estimate_p0) {
    try {
      bundle.eta_curve = wavelet_scaling_function(pyr, options.p0_grid, bundle.j1, bundle.j2, options.weights);
      bundle.p0_hat = p0_hat(bundle.eta_curve);
    } catch (const Error& e) {
      if (e.code() == Errc::no_valid_p)
        bundle.warnings.push_back(std::string("p0: ") + e.what());
      else
        soft(e, "p0");
    }
  }

  for (double p : options.p_list) {
    EstimatorResult r;
    r.name = estimator_name(p);
    r.p = p;
    try {
      const auto leaders = compute_p_leaders(pyr, p, options.mode);
      const auto weights = leader_weights(leaders, bundle.j1, bundle.j2, options.weights);
      Correction corr;
      corr.p = p;
      if (std::isfinite(p)) {
        r.eta_p = eta_hat(pyr, p, bundle.j1, bundle.j2, options.weights);
        corr.eta_p = r.eta_p;
        if (options.corrected) {
          if (r.eta_p > 0.0) {
            corr.enabled = true;
          } else {
            bundle.warnings.push_back(r.name + ": eta(p) = " + fmt(r.eta_p) +
                                      " <= 0, finite-size correction skipped");
          }
        }
      }
      if (std::isfinite(bundle.p0_hat) && p > bundle.p0_hat)
        bundle.warnings.push_back(r.name + ": p exceeds the estimated critical index p0 = " + fmt(bundle.p0_hat) +
                                  "; spectra may be biased towards the p-bound");
      auto analysis = analyze_leaders(leaders, options.q_grid, weights, corr);
      r.corrected = corr.active();
      r.estimates = std::move(analysis.estimates);
      r.spectrum = std::move(analysis.spectrum);
    } catch (const Error& e) {
      if (!options.tolerate_failures) throw;
      r.ok = false;
      r.error = e.what();
    }
    bundle.estimators.push_back(std::move(r));
  }

  if (options.mfdfa) {
    EstimatorResult r;
    r.name = "mfdfa";
    r.p = 2.0;
    try {
      if (pyr.dimension != 1) throw Error(Errc::invalid_input, "MFDFA is only available for 1D signals");
      const std::size_t n = series.size();
      const auto scales = default_mfdfa_scales(n, options.mfdfa_degree);
      FluctuationOptions fo;
      fo.degree = options.mfdfa_degree;
      fo.integrate = options.mfdfa_integrate;
      const auto table = fluctuations(series, scales, fo);
      const std::size_t a_min = options.mfdfa_a_min.value_or(std::size_t{1} << bundle.j1);
      const std::size_t a_max = options.mfdfa_a_max.value_or(n / 4);
      const auto weights = mfdfa_weights(table, a_min, a_max, options.weights);
      auto res = mfdfa_analyze(table, options.q_grid, weights);
      r.estimates = std::move(res.estimates);
      r.spectrum = std::move(res.spectrum);
    } catch (const Error& e) {
      if (!options.tolerate_failures) throw;
      r.ok = false;
      r.error = e.what();
    }
    bundle.estimators.push_back(std::move(r));
  }
  return bundle;
}

// Per-realisation shard: comment header, then long-format rows.
std::string shard_text(const RealizationRecord& rec) {
  std::ostringstream os;
  os << "# index=" << rec.index << "\n# seed=" << rec.seed << "\n";
  for (const auto& w : rec.warnings) os << "# warning=" << w << "\n";
  for (const auto& e : rec.estimators)
    if (!e.ok) os << "# error " << e.name << "=" << e.error << "\n";
  os << "estimator,p,field,k,value\n";
  os << "-,-,hmin,0," << fmt(rec.hmin) << "\n";
  os << "-,-,p0_hat,0," << fmt(rec.p0_hat) << "\n";
  for (const auto& e : rec.estimators) {
    const std::string prefix = e.name + "," + format_p(e.p) + ",";
    os << prefix << "ok,0," << (e.ok ? 1 : 0) << "\n";
    if (!e.ok) continue;
    os << prefix << "corrected,0," << (e.corrected ? 1 : 0) << "\n";
    os << prefix << "eta_p,0," << fmt(e.eta_p) << "\n";
    for (std::size_t m = 0; m < 4; ++m) os << prefix << "c,"<< m + 1 << "," << fmt(e.c[m]) << "\n";
    for (std::size_t i = 0; i < e.zeta.size(); ++i) os << prefix << "zeta," << i << "," << fmt(e.zeta[i]) << "\n";
    for (std::size_t i = 0; i < e.h.size(); ++i) os << prefix << "h," << i << "," << fmt(e.h[i]) << "\n";
    for (std::size_t i = 0; i < e.L.size(); ++i) os << prefix << "L," << i << "," << fmt(e.L[i]) << "\n";
  }
  return os.str();
}

std::optional<RealizationRecord> read_shard(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  RealizationRecord rec;
  std::string line;
  auto find_or_add = [&rec](const std::string& name, double p) -> EstimatorRecord& {
    for (auto& e : rec.estimators)
      if (e.name == name) return e;
    EstimatorRecord e;
    e.name = name;
    e.p = p;
    rec.estimators.push_back(e);
    return rec.estimators.back();
  };
  std::vector<std::pair<std::string, std::string>> errors;
  try {
    while (std::getline(in, line)) {
      if (line.rfind("# index=", 0) == 0) {
        rec.index = std::stoull(line.substr(8));
      } else if (line.rfind("# seed=", 0) == 0) {
        rec.seed = std::stoull(line.substr(7));
      } else if (line.rfind("# warning=", 0) == 0) {
        rec.warnings.push_back(line.substr(10));
      } else if (line.rfind("# error ", 0) == 0) {
        const auto eq = line.find('=');
        errors.emplace_back(line.substr(8, eq - 8), line.substr(eq + 1));
      } else if (line.rfind("estimator,", 0) == 0 || line.empty()) {
        continue;
      } else {
        std::stringstream ss(line);
        std::string name, p, field, k, value;
        std::getline(ss, name, ',');
        std::getline(ss, p, ',');
        std::getline(ss, field, ',');
        std::getline(ss, k, ',');
        std::getline(ss, value, ',');
        if (name == "-") {
          if (field == "hmin") rec.hmin = parse_double(value);
          if (field == "p0_hat") rec.p0_hat = parse_double(value);
          continue;
        }
        auto& e = find_or_add(name, parse_p(p));
        const double v = parse_double(value);
        if (field == "ok") {
          e.ok = v != 0.0;
        } else if (field == "corrected") {
          e.corrected = v != 0.0;
        } else if (field == "eta_p") {
          e.eta_p = v;
        } else if (field == "c") {
          e.c[std::stoul(k) - 1] = v;
        } else if (field == "zeta") {
          e.zeta.push_back(v);
        } else if (field == "h") {
          e.h.push_back(v);
        } else if (field == "L") {
          e.L.push_back(v);
        }
      }
    }
  } catch (const std::exception&) {
    return std::nullopt;  // truncated or foreign shard: recompute
  }
  for (const auto& [name, msg] : errors)
    for (auto& e : rec.estimators)
      if (e.name == name) e.error = msg;
  return rec;
}

RealizationRecord to_record(std::size_t index, std::uint64_t seed, const AnalysisBundle& bundle) {
  RealizationRecord rec;
  rec.index = index;
  rec.seed = seed;
  rec.hmin = bundle.hmin;
  rec.p0_hat = bundle.p0_hat;
  rec.warnings = bundle.warnings;
  for (const auto& r : bundle.estimators) {
    EstimatorRecord e;
    e.name = r.name;
    e.p = r.p;
    e.ok = r.ok;
    e.error = r.error;
    if (r.ok) {
      e.corrected = r.corrected;
      e.eta_p = r.eta_p;
      e.c = r.estimates.c;
      e.zeta = r.estimates.zeta;
      e.h = r.spectrum.h;
      e.L = r.spectrum.L;
    }
    rec.estimators.push_back(std::move(e));
  }
  return rec;
}

std::vector<std::string> configured_estimators(const ExperimentConfig& config) {
  std::vector<std::string> names;
  for (double p : config.analysis.p_list) names.push_back(estimator_name(p));
  if (config.analysis.mfdfa) names.push_back("mfdfa");
  return names;
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PLMF_THREADS")) {
    try {
      const int t = std::stoi(env);
      if (t > 0) return static_cast<unsigned>(t);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string shard_name(std::size_t index) {
  std::ostringstream os;
  os << "r";
  os.width(6);
  os.fill('0');
  os << index << ".csv";
  return os.str();
}

void write_outputs(const fs::path& dir, const ResultSet& rs) {
  {
    std::ostringstream os;
    os << "estimator,order,truth,mean,sd,bias,rmse,count\n";
    for (const auto& a : rs.aggregates)
      os << a.estimator << ',' << a.order << ',' << fmt(a.truth) << ',' << fmt(a.mean) << ',' << fmt(a.sd) << ','
         << fmt(a.bias) << ',' << fmt(a.rmse) << ',' << a.count << '\n';
    write_text(dir / "aggregate.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "estimator,p,order,rmse\n";
    for (const auto& a : rs.aggregates) {
      const auto* first = rs.records.empty() ? nullptr : rs.records.front().find(a.estimator);
      os << a.estimator << ',' << (first ? format_p(first->p) : "-") << ',' << a.order << ',' << fmt(a.rmse) << '\n';
    }
    write_text(dir / "rmse_by_p.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "estimator,q,h,L\n";
    for (const auto& name : rs.estimator_names()) {
      const auto spec = rs.mean_spectrum(name);
      for (std::size_t i = 0; i < spec.h.size(); ++i)
        os << name << ',' << fmt(spec.q[i]) << ',' << fmt(spec.h[i]) << ',' << fmt(spec.L[i]) << '\n';
    }
    write_text(dir / "spectra_mean.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "index,seed,hmin,p0_hat,estimator,p,ok,eta_p,c1,c2,c3,c4\n";
    for (const auto& r : rs.records)
      for (const auto& e : r.estimators)
        os << r.index << ',' << r.seed << ',' << fmt(r.hmin) << ',' << fmt(r.p0_hat) << ',' << e.name << ','
           << format_p(e.p) << ',' << (e.ok ? 1 : 0) << ',' << fmt(e.eta_p) << ',' << fmt(e.c[0]) << ','
           << fmt(e.c[1]) << ',' << fmt(e.c[2]) << ',' << fmt(e.c[3]) << '\n';
    write_text(dir / "estimates.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "index,estimator,error\n";
    for (const auto& f : rs.failures) {
      std::string msg = f.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      os << f.index << ',' << f.estimator << ',' << msg << '\n';
    }
    write_text(dir / "failures.csv", os.str());
  }
}

json options_to_json(const AnalysisOptions& o) {
  json p_list = json::array();
  for (double p : o.p_list) p_list.push_back(p_to_json(p));
  json j{{"p_list", p_list},
         {"q_grid", o.q_grid},
         {"n_vanishing", o.n_vanishing},
         {"mode", o.mode == Neighborhood::full ? "full" : "restricted"},
         {"corrected", o.corrected},
         {"weights", o.weights == WeightScheme::counts ? "counts" : "uniform"},
         {"estimate_p0", o.estimate_p0},
         {"p0_grid", o.p0_grid},
         {"mfdfa", o.mfdfa},
         {"mfdfa_degree", o.mfdfa_degree},
         {"mfdfa_integrate", o.mfdfa_integrate}};
  j["j1"] = o.j1 ? json(*o.j1) : json(nullptr);
  j["j2"] = o.j2 ? json(*o.j2) : json(nullptr);
  j["mfdfa_a_min"] = o.mfdfa_a_min ? json(*o.mfdfa_a_min) : json(nullptr);
  j["mfdfa_a_max"] = o.mfdfa_a_max ? json(*o.mfdfa_a_max) : json(nullptr);
  return j;
}

AnalysisOptions options_from_json(const json& j, AnalysisOptions o) {
  if (j.contains("p_list")) {
    o.p_list.clear();
    for (const auto& p : j.at("p_list")) o.p_list.push_back(p_from_json(p));
  }
  if (j.contains("q_grid")) o.q_grid = j.at("q_grid").get<std::vector<double>>();
  if (j.contains("n_vanishing")) o.n_vanishing = j.at("n_vanishing").get<int>();
  if (j.contains("mode")) o.mode = j.at("mode") == "restricted" ? Neighborhood::restricted : Neighborhood::full;
  if (j.contains("corrected")) o.corrected = j.at("corrected").get<bool>();
  if (j.contains("weights")) o.weights = j.at("weights") == "uniform" ? WeightScheme::uniform : WeightScheme::counts;
  if (j.contains("estimate_p0")) o.estimate_p0 = j.at("estimate_p0").get<bool>();
  if (j.contains("p0_grid")) o.p0_grid = j.at("p0_grid").get<std::vector<double>>();
  if (j.contains("mfdfa")) o.mfdfa = j.at("mfdfa").get<bool>();
  if (j.contains("mfdfa_degree")) o.mfdfa_degree = j.at("mfdfa_degree").get<int>();
  if (j.contains("mfdfa_integrate")) o.mfdfa_integrate = j.at("mfdfa_integrate").get<bool>();
  auto opt_int = [&j](const char* key, auto& field) {
    if (j.contains(key)) {
      if (j.at(key).is_null())
        field.reset();
      else
        field = j.at(key).get<typename std::remove_reference_t<decltype(field)>::value_type>();
    }
  };
  opt_int("j1", o.j1);
  opt_int("j2", o.j2);
  opt_int("mfdfa_a_min", o.mfdfa_a_min);
  opt_int("mfdfa_a_max", o.mfdfa_a_max);
  return o;
}

}  // namespace

double rmse(std::span<const double> estimates, double truth) {
  if (estimates.empty()) throw Error(Errc::invalid_input, "rmse of an empty estimate list");
  double s = 0.0;
  for (double e : estimates) s += (e - truth) * (e - truth);
  return std::sqrt(s / static_cast<double>(estimates.size()));
}

Aggregate aggregate(std::span<const double> estimates, double truth) {
  if (estimates.empty()) throw Error(Errc::invalid_input, "aggregate of an empty estimate list");
  Aggregate a;
  a.truth = truth;
  a.count = estimates.size();
  const double n = static_cast<double>(a.count);
  double mean = 0.0;
  for (double e : estimates) mean += e;
  mean /= n;
  double var = 0.0;
  for (double e : estimates) var += (e - mean) * (e - mean);
  var /= n;
  a.mean = mean;
  a.sd = std::sqrt(var);
  a.bias = mean - truth;
  a.rmse = rmse(estimates, truth);
  return a;
}

std::string estimator_name(double p) { return "p=" + format_p(p); }

const EstimatorResult& AnalysisBundle::estimator(const std::string& name) const {
  for (const auto& e : estimators)
    if (e.name == name) return e;
  throw Error(Errc::invalid_parameter, "no estimator named " + name);
}

AnalysisBundle analyze_signal(std::span<const double> signal, const AnalysisOptions& options) {
  if (signal.size() < kMinSamples)
    throw Error(Errc::insufficient_data, "signal has " + std::to_string(signal.size()) + " samples; at least " +
                                             std::to_string(kMinSamples) + " are required");
  const auto filter = daubechies_filter(options.n_vanishing);
  const auto pyr = dwt1d(signal, filter);
  return analyze_pyramid(pyr, signal, options);
}

AnalysisBundle analyze_field(const Field2d& field, const AnalysisOptions& options) {
  if (field.values.size() < kMinSamples)
    throw Error(Errc::insufficient_data, "field has " + std::to_string(field.values.size()) + " samples; at least " +
                                             std::to_string(kMinSamples) + " are required");
  const auto filter = daubechies_filter(options.n_vanishing);
  const auto pyr = dwt2d(field, filter);
  return analyze_pyramid(pyr, {}, options);
}

AnalysisBundle analyze_coefficients(const CoefficientPyramid& pyramid, const AnalysisOptions& options) {
  if (options.mfdfa) throw Error(Errc::invalid_input, "MFDFA needs samples, not a coefficient pyramid");
  return analyze_pyramid(pyramid, {}, options);
}

AnalysisBundle analyze_file(const fs::path& path, const AnalysisOptions& options) {
  if (fs::is_directory(path)) return analyze_coefficients(read_pyramid(path), options);
  const auto data = read_dataset(path);
  if (data.dimension == 2) return analyze_field(data.field(), options);
  return analyze_signal(data.values, options);
}

void write_bundle(const fs::path& dir, const AnalysisBundle& bundle, const AnalysisOptions& options) {
  fs::create_directories(dir);
  {
    std::ostringstream os;
    os << "estimator,p,ok,corrected,eta_p,c1,c2,c3,c4\n";
    for (const auto& e : bundle.estimators) {
      os << e.name << ',' << format_p(e.p) << ',' << (e.ok ? 1 : 0) << ',' << (e.corrected ? 1 : 0) << ','
         << fmt(e.eta_p);
      for (double c : e.estimates.c) os << ',' << fmt(c);
      os << '\n';
    }
    write_text(dir / "estimates.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "estimator,q,zeta,h,L\n";
    for (const auto& e : bundle.estimators)
      for (std::size_t i = 0; i < e.spectrum.h.size(); ++i)
        os << e.name << ',' << fmt(e.spectrum.q[i]) << ',' << fmt(e.estimates.zeta[i]) << ',' << fmt(e.spectrum.h[i])
           << ',' << fmt(e.spectrum.L[i]) << '\n';
    write_text(dir / "spectra.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "p,eta\n";
    for (std::size_t i = 0; i < bundle.eta_curve.p_grid.size(); ++i)
      os << fmt(bundle.eta_curve.p_grid[i]) << ',' << fmt(bundle.eta_curve.eta[i]) << '\n';
    write_text(dir / "eta.csv", os.str());
  }
  json summary{{"dimension", bundle.dimension},
               {"sample_count", bundle.sample_count},
               {"j1", bundle.j1},
               {"j2", bundle.j2},
               {"hmin", std::isfinite(bundle.hmin) ? json(bundle.hmin) : json(nullptr)},
               {"p0_hat", std::isnan(bundle.p0_hat) ? json(nullptr) : p_to_json(bundle.p0_hat)},
               {"warnings", bundle.warnings},
               {"options", options_to_json(options)}};
  json est = json::array();
  for (const auto& e : bundle.estimators) {
    json item{{"name", e.name}, {"p", p_to_json(e.p)}, {"ok", e.ok}, {"corrected", e.corrected}};
    if (!e.ok) item["error"] = e.error;
    if (e.ok) item["c"] = e.estimates.c;
    if (std::isfinite(e.eta_p)) item["eta_p"] = e.eta_p;
    est.push_back(item);
  }
  summary["estimators"] = est;
  write_text(dir / "summary.json", summary.dump(2) + "\n");
}

std::string to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::mrw:
      return "mrw";
    case ProcessKind::lws:
      return "lws";
    case ProcessKind::cmc_ln:
      return "cmc-ln";
    case ProcessKind::cmc_lp:
      return "cmc-lp";
  }
  return "unknown";
}

ProcessKind parse_process(const std::string& text) {
  if (text == "mrw") return ProcessKind::mrw;
  if (text == "lws") return ProcessKind::lws;
  if (text == "cmc-ln") return ProcessKind::cmc_ln;
  if (text == "cmc-lp") return ProcessKind::cmc_lp;
  throw Error(Errc::invalid_parameter, "unknown process '" + text + "' (mrw, lws, cmc-ln, cmc-lp)");
}

ExperimentConfig default_experiment(ProcessKind process) {
  ExperimentConfig c;
  c.process = process;
  c.analysis.tolerate_failures = true;
  switch (process) {
    case ProcessKind::mrw:
      c.analysis.p_list = {0.25, 0.5, 1.0, 2.0, 4.0, 5.0, 8.0, 10.0, kInfinity};
      c.analysis.mfdfa = true;
      c.analysis.mfdfa_degree = 1;
      c.analysis.mfdfa_integrate = false;
      break;
    case ProcessKind::lws:
      c.analysis.p_list = {1.0, 2.0, 4.0, kInfinity};
      c.analysis.q_grid.clear();
      for (int i = 1; i <= 20; ++i) c.analysis.q_grid.push_back(0.05 * i);
      for (int i = 5; i <= 20; ++i) c.analysis.q_grid.push_back(0.25 * i);
      c.realizations = 20;
      break;
    case ProcessKind::cmc_ln:
    case ProcessKind::cmc_lp:
      c.cmc.kind = process == ProcessKind::cmc_ln ? CmcKind::log_normal : CmcKind::log_poisson;
      c.analysis.p_list = {0.5, 2.0, 4.0, kInfinity};
      c.realizations = 20;
      break;
  }
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json j{{"process", to_string(c.process)},
         {"realizations", c.realizations},
         {"seed", c.seed},
         {"threads", c.threads},
         {"output_dir", c.output_dir},
         {"analysis", options_to_json(c.analysis)}};
  j["mrw"] = {{"H", c.mrw.H}, {"lambda", c.mrw.lambda}, {"L", c.mrw.L}, {"n", c.mrw.n}, {"nu", c.mrw.nu}, {"sigma", c.mrw.sigma}};
  j["lws"] = {{"alpha", c.lws.alpha}, {"eta", c.lws.eta}, {"n", c.lws.n}};
  j["cmc"] = {{"m", c.cmc.m}, {"beta", c.cmc.beta}, {"gamma", c.cmc.gamma}, {"side", c.cmc.side}, {"alpha", c.cmc.alpha}};
  std::string trend = c.trend.kind == TrendKind::none ? "none" : c.trend.kind == TrendKind::cusp ? "cusp" : "polynomial";
  j["trend"] = {{"kind", trend}, {"coefficients", c.trend.coefficients}};
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_input, std::string("malformed experiment config: ") + e.what());
  }
  try {
    ExperimentConfig c = default_experiment(parse_process(j.value("process", std::string("mrw"))));
    c.realizations = j.value("realizations", c.realizations);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("analysis")) c.analysis = options_from_json(j.at("analysis"), c.analysis);
    c.analysis.tolerate_failures = true;
    if (j.contains("mrw")) {
      const auto& m = j.at("mrw");
      c.mrw.H = m.value("H", c.mrw.H);
      c.mrw.lambda = m.value("lambda", c.mrw.lambda);
      c.mrw.L = m.value("L", c.mrw.L);
      c.mrw.n = m.value("n", c.mrw.n);
      c.mrw.nu = m.value("nu", c.mrw.nu);
      c.mrw.sigma = m.value("sigma", c.mrw.sigma);
    }
    if (j.contains("lws")) {
      const auto& m = j.at("lws");
      c.lws.alpha = m.value("alpha", c.lws.alpha);
      c.lws.eta = m.value("eta", c.lws.eta);
      c.lws.n = m.value("n", c.lws.n);
    }
    if (j.contains("cmc")) {
      const auto& m = j.at("cmc");
      c.cmc.m = m.value("m", c.cmc.m);
      c.cmc.beta = m.value("beta", c.cmc.beta);
      c.cmc.gamma = m.value("gamma", c.cmc.gamma);
      c.cmc.side = m.value("side", c.cmc.side);
      c.cmc.alpha = m.value("alpha", c.cmc.alpha);
    }
    if (j.contains("trend")) {
      const auto& t = j.at("trend");
      const std::string kind = t.value("kind", std::string("none"));
      if (kind == "none")
        c.trend.kind = TrendKind::none;
      else if (kind == "cusp")
        c.trend.kind = TrendKind::cusp;
      else if (kind == "polynomial")
        c.trend.kind = TrendKind::polynomial;
      else
        throw Error(Errc::invalid_parameter, "unknown trend kind '" + kind + "'");
      c.trend.coefficients = t.value("coefficients", std::vector<double>{});
    }
    return c;
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_input, std::string("invalid experiment config: ") + e.what());
  }
}

std::uint64_t realization_seed(std::uint64_t seed, std::size_t index) {
  auto rng = make_rng(seed, index);
  return rng();
}

const EstimatorRecord* RealizationRecord::find(const std::string& name) const {
  for (const auto& e : estimators)
    if (e.name == name) return &e;
  return nullptr;
}

std::vector<std::string> ResultSet::estimator_names() const { return configured_estimators(config); }

std::vector<double> ResultSet::cumulant_estimates(const std::string& estimator, int order) const {
  std::vector<double> out;
  for (const auto& r : records) {
    const auto* e = r.find(estimator);
    if (e && e->ok && std::isfinite(e->c[static_cast<std::size_t>(order - 1)]))
      out.push_back(e->c[static_cast<std::size_t>(order - 1)]);
  }
  return out;
}

const Aggregate* ResultSet::find_aggregate(const std::string& estimator, int order) const {
  for (const auto& a : aggregates)
    if (a.estimator == estimator && a.order == order) return &a;
  return nullptr;
}

LegendreSpectrum ResultSet::mean_spectrum(const std::string& estimator) const {
  LegendreSpectrum spec;
  spec.dimension = config.process == ProcessKind::cmc_ln || config.process == ProcessKind::cmc_lp ? 2 : 1;
  const auto& q = config.analysis.q_grid;
  spec.q = q;
  spec.h.assign(q.size(), 0.0);
  spec.L.assign(q.size(), 0.0);
  std::size_t count = 0;
  for (const auto& r : records) {
    const auto* e = r.find(estimator);
    if (!e || !e->ok || e->h.size() != q.size()) continue;
    ++count;
    for (std::size_t i = 0; i < q.size(); ++i) {
      spec.h[i] += e->h[i];
      spec.L[i] += e->L[i];
    }
  }
  if (count == 0) return {};
  for (std::size_t i = 0; i < q.size(); ++i) {
    spec.h[i] /= static_cast<double>(count);
    spec.L[i] /= static_cast<double>(count);
  }
  return spec;
}

std::vector<double> ResultSet::p0_estimates() const {
  std::vector<double> out;
  for (const auto& r : records)
    if (!std::isnan(r.p0_hat)) out.push_back(r.p0_hat);
  return out;
}

std::optional<std::array<double, 4>> cumulant_truth(const ExperimentConfig& config) {
  switch (config.process) {
    case ProcessKind::mrw: {
      const auto c = mrw_cumulants(config.mrw);
      return std::array<double, 4>{c.c1, c.c2, 0.0, 0.0};
    }
    case ProcessKind::cmc_ln:
    case ProcessKind::cmc_lp: {
      CmcParams p = config.cmc;
      p.kind = config.process == ProcessKind::cmc_ln ? CmcKind::log_normal : CmcKind::log_poisson;
      return cmc_cumulants(p);
    }
    case ProcessKind::lws:
      return std::nullopt;
  }
  return std::nullopt;
}

Dataset synthesize(const ExperimentConfig& config, std::size_t index) {
  const std::uint64_t seed = realization_seed(config.seed, index);
  const auto filter = daubechies_filter(config.analysis.n_vanishing);
  switch (config.process) {
    case ProcessKind::mrw: {
      MrwParams p = config.mrw;
      p.seed = seed;
      return make_dataset(add_trend(gen_mrw(p, filter), config.trend));
    }
    case ProcessKind::lws: {
      LwsParams p = config.lws;
      p.seed = seed;
      return make_dataset(add_trend(gen_lws(p, filter), config.trend));
    }
    case ProcessKind::cmc_ln:
    case ProcessKind::cmc_lp: {
      CmcParams p = config.cmc;
      p.seed = seed;
      p.kind = config.process == ProcessKind::cmc_ln ? CmcKind::log_normal : CmcKind::log_poisson;
      return make_dataset(gen_cmc2d(p, filter));
    }
  }
  throw Error(Errc::invalid_parameter, "unknown process");
}

ResultSet run_experiment(const ExperimentConfig& config) {
  if (config.realizations == 0) throw Error(Errc::invalid_parameter, "experiment needs at least one realisation");
  ResultSet rs;
  rs.config = config;
  rs.records.resize(config.realizations);

  AnalysisOptions options = config.analysis;
  options.tolerate_failures = true;

  fs::path shard_dir;
  if (!config.output_dir.empty()) {
    const fs::path dir(config.output_dir);
    fs::create_directories(dir / "realizations");
    shard_dir = dir / "realizations";
    const std::string cfg = config_to_json(config);
    const fs::path cfg_path = dir / "config.json";
    if (fs::exists(cfg_path)) {
      ExperimentConfig previous = config_from_json(read_text(cfg_path));
      previous.threads = config.threads;
      previous.realizations = config.realizations;
      ExperimentConfig current = config;
      current.analysis.tolerate_failures = true;
      if (config_to_json(previous) != config_to_json(current))
        throw Error(Errc::invalid_parameter,
                    "output directory " + dir.string() + " holds a different experiment; choose another directory");
    }
    write_text(cfg_path, cfg + "\n");
  }

  std::vector<std::uint8_t> done(config.realizations, 0);
  if (!shard_dir.empty()) {
    for (std::size_t i = 0; i < config.realizations; ++i) {
      auto rec = read_shard(shard_dir / shard_name(i));
      if (rec && rec->index == i && rec->seed == realization_seed(config.seed, i)) {
        rs.records[i] = std::move(*rec);
        done[i] = 1;
        ++rs.resumed;
      }
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= config.realizations) return;
      if (done[i]) continue;
      const std::uint64_t seed = realization_seed(config.seed, i);
      RealizationRecord rec;
      try {
        const auto data = synthesize(config, i);
        const auto bundle =
            data.dimension == 2 ? analyze_field(data.field(), options) : analyze_signal(data.values, options);
        rec = to_record(i, seed, bundle);
      } catch (const Error& e) {
        rec.index = i;
        rec.seed = seed;
        for (const auto& name : configured_estimators(config)) {
          EstimatorRecord er;
          er.name = name;
          er.p = name == "mfdfa" ? 2.0 : parse_p(name.substr(2));
          er.ok = false;
          er.error = e.what();
          rec.estimators.push_back(er);
        }
      }
      if (!shard_dir.empty()) write_text(shard_dir / shard_name(i), shard_text(rec));
      rs.records[i] = std::move(rec);
    }
  };

  const unsigned threads = std::min<unsigned>(resolve_threads(config.threads),
                                              static_cast<unsigned>(config.realizations));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& r : rs.records)
    for (const auto& e : r.estimators)
      if (!e.ok) rs.failures.push_back({r.index, e.name, e.error});

  if (const auto truth = cumulant_truth(config)) {
    for (const auto& name : configured_estimators(config))
      for (int m = 1; m <= 4; ++m) {
        const auto est = rs.cumulant_estimates(name, m);
        if (est.empty()) continue;
        Aggregate a = aggregate(est, (*truth)[static_cast<std::size_t>(m - 1)]);
        a.estimator = name;
        a.order = m;
        rs.aggregates.push_back(a);
      }
  }

  if (!config.output_dir.empty()) write_outputs(config.output_dir, rs);
  return rs;
}

std::vector<ComparisonRow> compare_estimators(const ResultSet& results, const std::string& a, const std::string& b) {
  std::vector<ComparisonRow> rows;
  for (int m = 1; m <= 4; ++m) {
    const auto* aa = results.find_aggregate(a, m);
    const auto* bb = results.find_aggregate(b, m);
    if (!aa || !bb) continue;
    ComparisonRow row;
    row.order = m;
    row.rmse_a = aa->rmse;
    row.rmse_b = bb->rmse;
    row.ratio = aa->rmse > 0.0 ? bb->rmse / aa->rmse : kInfinity;
    rows.push_back(row);
  }
  if (rows.empty())
    throw Error(Errc::invalid_parameter, "no shared aggregates for estimators '" + a + "' and '" + b + "'");
  return rows;
}

}  // namespace plmf
