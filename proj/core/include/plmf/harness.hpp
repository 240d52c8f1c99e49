#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plmf/formalism.hpp"
#include "plmf/io.hpp"
#include "plmf/mfdfa.hpp"
#include "plmf/synth.hpp"

namespace plmf {

/// sqrt(mean((x - truth)^2)).
double rmse(std::span<const double> estimates, double truth);

struct Aggregate {
  std::string estimator;
  int order = 1;  // log-cumulant index m
  double truth = 0.0;
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation
  double bias = 0.0;
  double rmse = 0.0;
  std::size_t count = 0;
};

/// Moments of `estimates` around `truth`; rmse^2 = bias^2 + sd^2.
Aggregate aggregate(std::span<const double> estimates, double truth);

// ---------------------------------------------------------------------------
// Single-signal analysis

struct AnalysisOptions {
  std::vector<double> p_list{2.0};
  std::vector<double> q_grid = default_q_grid();
  std::optional<int> j1;
  std::optional<int> j2;
  int n_vanishing = 2;
  Neighborhood mode = Neighborhood::full;
  bool corrected = true;
  WeightScheme weights = WeightScheme::counts;
  bool estimate_p0 = true;
  std::vector<double> p0_grid = default_p0_grid();
  bool mfdfa = false;
  int mfdfa_degree = 1;
  bool mfdfa_integrate = false;
  /// Window range for the MFDFA regression; defaults to 2^j1 .. n/4.
  std::optional<std::size_t> mfdfa_a_min;
  std::optional<std::size_t> mfdfa_a_max;
  /// Record per-estimator errors instead of throwing (used by Monte Carlo).
  bool tolerate_failures = false;
};

struct EstimatorResult {
  std::string name;  // "p=2", "p=inf", "mfdfa"
  double p = 2.0;
  double eta_p = std::nan("");
  bool corrected = false;
  bool ok = true;
  std::string error;
  ScalingEstimates estimates;
  LegendreSpectrum spectrum;
};

struct AnalysisBundle {
  int dimension = 1;
  std::size_t sample_count = 0;
  int j1 = 0;
  int j2 = 0;
  double hmin = std::nan("");
  WaveletScalingFunction eta_curve;
  double p0_hat = std::nan("");
  std::vector<EstimatorResult> estimators;
  std::vector<std::string> warnings;

  const EstimatorResult& estimator(const std::string& name) const;
};

std::string estimator_name(double p);

AnalysisBundle analyze_signal(std::span<const double> signal, const AnalysisOptions& options);
AnalysisBundle analyze_field(const Field2d& field, const AnalysisOptions& options);
/// Analysis of a precomputed coefficient pyramid (MFDFA unavailable).
AnalysisBundle analyze_coefficients(const CoefficientPyramid& pyramid, const AnalysisOptions& options);
/// A pyramid directory, a .bin file or a CSV file.
AnalysisBundle analyze_file(const std::filesystem::path& path, const AnalysisOptions& options);

/// estimates.csv, spectra.csv, eta.csv and summary.json under `dir`.
void write_bundle(const std::filesystem::path& dir, const AnalysisBundle& bundle, const AnalysisOptions& options);

// ---------------------------------------------------------------------------
// Monte Carlo experiments

enum class ProcessKind { mrw, lws, cmc_ln, cmc_lp };

std::string to_string(ProcessKind kind);
ProcessKind parse_process(const std::string& text);

struct ExperimentConfig {
  ProcessKind process = ProcessKind::mrw;
  MrwParams mrw;
  LwsParams lws;
  CmcParams cmc;
  std::size_t realizations = 50;
  std::uint64_t seed = 1;
  AnalysisOptions analysis;
  TrendSpec trend;
  std::string output_dir;
  /// 0 selects PLMF_THREADS, then the hardware concurrency.
  unsigned threads = 0;
};

/// Defaults for the chosen process (p list, vanishing moments, MFDFA degree,
/// scaling range).
ExperimentConfig default_experiment(ProcessKind process);

std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text);

/// Seed of realisation `index`.
std::uint64_t realization_seed(std::uint64_t seed, std::size_t index);

struct EstimatorRecord {
  std::string name;
  double p = 2.0;
  bool ok = true;
  std::string error;
  bool corrected = false;
  double eta_p = std::nan("");
  std::array<double, 4> c{};
  std::vector<double> zeta;
  std::vector<double> h;
  std::vector<double> L;
};

struct RealizationRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  double hmin = std::nan("");
  double p0_hat = std::nan("");
  std::vector<EstimatorRecord> estimators;
  std::vector<std::string> warnings;

  const EstimatorRecord* find(const std::string& name) const;
};

struct FailureEntry {
  std::size_t index = 0;
  std::string estimator;
  std::string error;
};

struct ResultSet {
  ExperimentConfig config;
  std::vector<RealizationRecord> records;
  std::vector<FailureEntry> failures;
  std::vector<Aggregate> aggregates;
  std::size_t resumed = 0;

  std::vector<std::string> estimator_names() const;
  /// Finite c_m estimates of `estimator` over successful realisations.
  std::vector<double> cumulant_estimates(const std::string& estimator, int order) const;
  const Aggregate* find_aggregate(const std::string& estimator, int order) const;
  /// Mean (h, L) per q over successful realisations.
  LegendreSpectrum mean_spectrum(const std::string& estimator) const;
  std::vector<double> p0_estimates() const;
};

/// Ground-truth log-cumulants for the configured process, if it has them.
std::optional<std::array<double, 4>> cumulant_truth(const ExperimentConfig& config);

/// Synthesise realisation `index` (trend included).
Dataset synthesize(const ExperimentConfig& config, std::size_t index);

ResultSet run_experiment(const ExperimentConfig& config);

struct ComparisonRow {
  int order = 1;
  double rmse_a = 0.0;
  double rmse_b = 0.0;
  double ratio = 0.0;  // rmse_b / rmse_a
};

std::vector<ComparisonRow> compare_estimators(const ResultSet& results, const std::string& a, const std::string& b);

}  // namespace plmf
