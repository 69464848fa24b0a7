#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ampdet/amp.hpp"
#include "ampdet/gst.hpp"
#include "ampdet/ht.hpp"
#include "ampdet/keyval.hpp"
#include "ampdet/metrics.hpp"
#include "ampdet/parallel.hpp"
#include "ampdet/scenario.hpp"
#include "ampdet/sr.hpp"
#include "ampdet/state_evolution.hpp"

namespace ampdet {

enum class Detector { kGst, kHt, kSamp };

inline std::string detector_name(Detector d) {
  switch (d) {
    case Detector::kGst: return "gst";
    case Detector::kHt: return "ht";
    case Detector::kSamp: return "samp";
  }
  return "?";
}

inline Detector detector_from_name(const std::string& name) {
  if (name == "gst") return Detector::kGst;
  if (name == "ht") return Detector::kHt;
  if (name == "samp") return Detector::kSamp;
  throw std::runtime_error("unknown detector: " + name + " (expected gst, ht or samp)");
}

/// Per-detector algorithm settings. tau and max_iters default per detector
/// when unset: the group threshold compares whole-row norms whose noise scale
/// grows like sqrt(M), hence the sqrt(M) in the gst default.
struct DetectorConfig {
  Detector kind = Detector::kGst;
  std::optional<double> tau;
  std::optional<std::size_t> max_iters;
  double conv_tol = 1e-6;
  // ht
  double ht_oversample = 4.0;
  double ht_smooth_eps = 0.05;
  bool ht_smoothing = true;
  // samp
  GreedyConfig greedy{};
  SmoothingConfig smoothing{};

  double resolved_tau(std::size_t n_antennas) const {
    if (tau) return *tau;
    switch (kind) {
      case Detector::kGst:
        // group threshold acts on row norms; noise rows have norm ~ sqrt(M) sigma
        return 1.5 * std::sqrt(static_cast<double>(n_antennas));
      case Detector::kHt:
        // per-coefficient threshold; 4 sigma clears the best-of-grid noise peaks
        return 4.0;
      case Detector::kSamp:
        return 3.0;
    }
    return 3.0;
  }

  std::size_t resolved_max_iters() const {
    if (max_iters) return *max_iters;
    return kind == Detector::kGst ? 15 : 10;
  }
};

inline AmpConfig resolve_amp_config(const DetectorConfig& det, std::size_t n_antennas,
                                    int n_threads = 1) {
  AmpConfig cfg;
  cfg.tau = det.resolved_tau(n_antennas);
  cfg.max_iters = det.resolved_max_iters();
  cfg.conv_tol = det.conv_tol;
  cfg.n_threads = n_threads;
  return cfg;
}

/// Builds the denoiser for one run. The S-AMP smoothing seed is derived from
/// trial_seed so smoothing noise is independent across trials yet fully
/// reproducible.
inline std::unique_ptr<RowDenoiser> make_denoiser(const DetectorConfig& det,
                                                  std::size_t n_antennas,
                                                  std::uint64_t trial_seed) {
  switch (det.kind) {
    case Detector::kGst:
      return std::make_unique<GstDenoiser>();
    case Detector::kHt:
      return std::make_unique<HtDenoiser>(n_antennas, det.ht_oversample, det.ht_smooth_eps,
                                          det.ht_smoothing);
    case Detector::kSamp: {
      GreedyConfig greedy = det.greedy;
      greedy.tau = det.resolved_tau(n_antennas);
      SmoothingConfig smoothing = det.smoothing;
      smoothing.seed = derive_seed(trial_seed, 0x53edULL);
      return std::make_unique<SrDenoiser>(n_antennas, greedy, smoothing);
    }
  }
  throw std::logic_error("make_denoiser: unreachable");
}

enum class SweepVar { kNone, kM, kK, kQ, kSnrDb };

inline std::string sweep_var_name(SweepVar v) {
  switch (v) {
    case SweepVar::kNone: return "none";
    case SweepVar::kM: return "M";
    case SweepVar::kK: return "K";
    case SweepVar::kQ: return "Q";
    case SweepVar::kSnrDb: return "snr_db";
  }
  return "?";
}

inline SweepVar sweep_var_from_name(const std::string& name) {
  if (name == "none") return SweepVar::kNone;
  if (name == "M") return SweepVar::kM;
  if (name == "K") return SweepVar::kK;
  if (name == "Q") return SweepVar::kQ;
  if (name == "snr_db") return SweepVar::kSnrDb;
  throw std::runtime_error("unknown sweep variable: " + name +
                           " (expected none, M, K, Q or snr_db)");
}

/// Applies one sweep value to the base scenario config. K sets the expected
/// active count, i.e. activity_prob = K / N.
inline SystemConfig apply_sweep(SystemConfig config, SweepVar var, double value) {
  switch (var) {
    case SweepVar::kNone:
      break;
    case SweepVar::kM:
      config.n_antennas = static_cast<std::size_t>(std::llround(value));
      config.paths_max = std::min(config.paths_max, config.n_antennas);
      config.paths_min = std::min(config.paths_min, config.paths_max);
      break;
    case SweepVar::kK:
      config.activity_prob = value / static_cast<double>(config.n_users);
      break;
    case SweepVar::kQ:
      config.pilot_len = static_cast<std::size_t>(std::llround(value));
      break;
    case SweepVar::kSnrDb:
      config.snr_override_db = value;
      break;
  }
  return config;
}

struct ExperimentSpec {
  SystemConfig base;
  std::vector<DetectorConfig> detectors = {DetectorConfig{Detector::kGst}};
  SweepVar sweep_var = SweepVar::kNone;
  std::vector<double> sweep_values;  // ignored (one implicit point) when sweep_var is none
  std::size_t trials = 1;
  std::vector<double> threshold_grid;  // explicit detection-threshold grid for ROC reporting
  bool se_enabled = false;
  SeParams se;
  int threads = 1;
  std::string out_path = "results.csv";

  void validate() const {
    base.validate();
    if (trials < 1) throw std::invalid_argument("ExperimentSpec: trials must be >= 1");
    if (detectors.empty()) throw std::invalid_argument("ExperimentSpec: detector list is empty");
    if (sweep_var != SweepVar::kNone && sweep_values.empty())
      throw std::invalid_argument("ExperimentSpec: sweep has no values");
    for (double v : sweep_values)
      if (!(v > 0.0) && sweep_var != SweepVar::kSnrDb)
        throw std::invalid_argument("ExperimentSpec: sweep values must be positive");
  }

  std::vector<double> effective_sweep_values() const {
    if (sweep_var == SweepVar::kNone) return {0.0};
    return sweep_values;
  }
};

struct TrialRow {
  std::string sweep_var;
  double sweep_value = 0.0;
  std::string detector;
  long long trial = 0;  // -1 marks aggregate rows
  std::uint64_t seed = 0;
  double iters = 0.0;
  double converged = 0.0;
  double nmse = 0.0;
  double pfa = 0.0;
  double pmd = 0.0;
  double runtime_ms = 0.0;
  std::string status;  // ok | diverged | mean | std
};

struct TrialDetail {
  std::size_t sweep_index = 0;
  std::size_t detector_index = 0;
  std::size_t trial = 0;
  std::vector<double> nmse_history;
  std::vector<double> sigma_history;
  bool converged = false;
  std::size_t iters = 0;
};

struct SeRun {
  std::size_t sweep_index = 0;
  std::size_t detector_index = 0;
  StateEvolutionTrace trace;
};

struct ExperimentResult {
  std::vector<TrialRow> rows;  // data rows in (sweep, detector, trial) order, then aggregates
  std::vector<TrialDetail> details;  // one per non-diverged trial
  std::vector<SeRun> se_runs;
};

/// Documented trial seeding scheme: every (sweep point, detector, trial)
/// gets scenario seed derive_seed(master, sweep_index, detector_index, trial).
inline std::uint64_t trial_seed(std::uint64_t master, std::size_t sweep_index,
                                std::size_t detector_index, std::size_t trial) {
  return derive_seed(master, sweep_index, detector_index, trial);
}

namespace detail {

inline void append_aggregates(std::vector<TrialRow>& rows, const std::vector<TrialRow>& data,
                              const std::string& sweep_var, double sweep_value,
                              const std::string& detector, std::uint64_t master_seed) {
  std::vector<const TrialRow*> ok;
  for (const auto& row : data)
    if (row.status == "ok") ok.push_back(&row);
  if (ok.empty()) return;
  auto mean_of = [&](auto field) {
    double sum = 0.0;
    for (const auto* row : ok) sum += row->*field;
    return sum / static_cast<double>(ok.size());
  };
  auto std_of = [&](auto field, double mean) {
    if (ok.size() < 2) return 0.0;
    double sum = 0.0;
    for (const auto* row : ok) {
      const double d = row->*field - mean;
      sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(ok.size() - 1));
  };

  TrialRow mean_row;
  mean_row.sweep_var = sweep_var;
  mean_row.sweep_value = sweep_value;
  mean_row.detector = detector;
  mean_row.trial = -1;
  mean_row.seed = master_seed;
  mean_row.iters = mean_of(&TrialRow::iters);
  mean_row.converged = mean_of(&TrialRow::converged);
  mean_row.nmse = mean_of(&TrialRow::nmse);
  mean_row.pfa = mean_of(&TrialRow::pfa);
  mean_row.pmd = mean_of(&TrialRow::pmd);
  mean_row.runtime_ms = mean_of(&TrialRow::runtime_ms);
  mean_row.status = "mean";
  rows.push_back(mean_row);

  if (ok.size() >= 2) {
    TrialRow std_row = mean_row;
    std_row.iters = std_of(&TrialRow::iters, mean_row.iters);
    std_row.converged = std_of(&TrialRow::converged, mean_row.converged);
    std_row.nmse = std_of(&TrialRow::nmse, mean_row.nmse);
    std_row.pfa = std_of(&TrialRow::pfa, mean_row.pfa);
    std_row.pmd = std_of(&TrialRow::pmd, mean_row.pmd);
    std_row.runtime_ms = std_of(&TrialRow::runtime_ms, mean_row.runtime_ms);
    std_row.status = "std";
    rows.push_back(std_row);
  }
}

}  // namespace detail

/// Runs the full experiment grid. Trials are the unit of parallelism; each
/// trial itself runs single-threaded so the result is identical for any
/// thread count (runtime_ms aside, which is wall clock).
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto sweep_values = spec.effective_sweep_values();
  const std::string sweep_name = sweep_var_name(spec.sweep_var);
  const std::size_t n_sweep = sweep_values.size();
  const std::size_t n_det = spec.detectors.size();
  const std::size_t n_tasks = n_sweep * n_det * spec.trials;

  std::vector<TrialRow> data(n_tasks);
  std::vector<TrialDetail> details(n_tasks);
  std::vector<std::uint8_t> has_detail(n_tasks, 0);

  // Trials are the parallel unit; keep the per-trial linear algebra single
  // threaded while the pool is wider than one worker.
  const int eigen_threads_before = Eigen::nbThreads();
  if (spec.threads > 1) Eigen::setNbThreads(1);

  parallel_blocks(n_tasks, 1, spec.threads, [&](std::size_t task, std::size_t, std::size_t) {
    const std::size_t trial = task % spec.trials;
    const std::size_t det_index = (task / spec.trials) % n_det;
    const std::size_t sweep_index = task / (spec.trials * n_det);
    const DetectorConfig& det = spec.detectors[det_index];

    SystemConfig config = apply_sweep(spec.base, spec.sweep_var, sweep_values[sweep_index]);
    config.seed = trial_seed(spec.base.seed, sweep_index, det_index, trial);

    TrialRow row;
    row.sweep_var = sweep_name;
    row.sweep_value = sweep_values[sweep_index];
    row.detector = detector_name(det.kind);
    row.trial = static_cast<long long>(trial);
    row.seed = config.seed;

    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Scenario scenario = generate_scenario(config);
      const auto denoiser = make_denoiser(det, config.n_antennas, config.seed);
      const AmpConfig amp_cfg = resolve_amp_config(det, config.n_antennas, 1);
      const AmpResult amp = run_amp(scenario, amp_cfg, *denoiser);
      const double threshold = default_detection_threshold(amp.estimate);
      const DetectionResult detection =
          evaluate_detection(amp.estimate, scenario.truth, scenario.activity, threshold);
      row.iters = static_cast<double>(amp.iters);
      row.converged = amp.converged ? 1.0 : 0.0;
      row.nmse = detection.nmse;
      row.pfa = detection.pfa;
      row.pmd = detection.pmd;
      row.status = "ok";

      TrialDetail& detail = details[task];
      detail.sweep_index = sweep_index;
      detail.detector_index = det_index;
      detail.trial = trial;
      detail.nmse_history = amp.state.nmse_history;
      detail.sigma_history = amp.sigma_history;
      detail.converged = amp.converged;
      detail.iters = amp.iters;
      has_detail[task] = 1;
    } catch (const DivergedError&) {
      row.iters = 0.0;
      row.converged = 0.0;
      row.nmse = std::numeric_limits<double>::quiet_NaN();
      row.pfa = std::numeric_limits<double>::quiet_NaN();
      row.pmd = std::numeric_limits<double>::quiet_NaN();
      row.status = "diverged";
    }
    const auto t1 = std::chrono::steady_clock::now();
    row.runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    data[task] = std::move(row);
  });

  Eigen::setNbThreads(eigen_threads_before);

  ExperimentResult result;
  result.rows = std::move(data);
  for (std::size_t task = 0; task < n_tasks; ++task)
    if (has_detail[task]) result.details.push_back(std::move(details[task]));

  // Aggregates per (sweep value, detector), appended after the data rows.
  std::vector<TrialRow> aggregates;
  for (std::size_t s = 0; s < n_sweep; ++s)
    for (std::size_t d = 0; d < n_det; ++d) {
      const std::size_t begin = (s * n_det + d) * spec.trials;
      std::vector<TrialRow> group(result.rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                  result.rows.begin() + static_cast<std::ptrdiff_t>(begin + spec.trials));
      detail::append_aggregates(aggregates, group, sweep_name, sweep_values[s],
                                detector_name(spec.detectors[d].kind), spec.base.seed);
    }
  result.rows.insert(result.rows.end(), aggregates.begin(), aggregates.end());

  // Optional paired state evolution per (sweep value, detector), predicted on
  // the trial-0 scenario of the pair.
  if (spec.se_enabled) {
    for (std::size_t s = 0; s < n_sweep; ++s)
      for (std::size_t d = 0; d < n_det; ++d) {
        const DetectorConfig& det = spec.detectors[d];
        SystemConfig config = apply_sweep(spec.base, spec.sweep_var, sweep_values[s]);
        config.seed = trial_seed(spec.base.seed, s, d, 0);
        const Scenario scenario = generate_scenario(config);
        const auto denoiser = make_denoiser(det, config.n_antennas, config.seed);
        const AmpConfig amp_cfg = resolve_amp_config(det, config.n_antennas, 1);
        SeParams se = spec.se;
        se.n_threads = spec.threads;
        SeRun run;
        run.sweep_index = s;
        run.detector_index = d;
        run.trace = run_se(scenario, amp_cfg, *denoiser, se);
        result.se_runs.push_back(std::move(run));
      }
  }
  return result;
}

// ---------------------------------------------------------------------------
// CSV I/O
// ---------------------------------------------------------------------------

inline constexpr const char* kResultsCsvHeader =
    "sweep_var,sweep_value,detector,trial,seed,iters,converged,nmse,pfa,pmd,runtime_ms,status";

namespace detail {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace detail

inline void emit_csv(const std::vector<TrialRow>& rows, std::ostream& out) {
  out << kResultsCsvHeader << '\n';
  for (const auto& row : rows) {
    out << row.sweep_var << ',' << detail::format_double(row.sweep_value) << ',' << row.detector
        << ',' << row.trial << ',' << row.seed << ',' << detail::format_double(row.iters) << ','
        << detail::format_double(row.converged) << ',' << detail::format_double(row.nmse) << ','
        << detail::format_double(row.pfa) << ',' << detail::format_double(row.pmd) << ','
        << detail::format_double(row.runtime_ms) << ',' << row.status << '\n';
  }
}

inline void emit_csv(const std::vector<TrialRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  emit_csv(rows, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::vector<TrialRow> parse_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("results csv: empty file");
  if (line != kResultsCsvHeader) throw std::runtime_error("results csv: unexpected header");
  std::vector<TrialRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 12) throw std::runtime_error("results csv: bad row: " + line);
    TrialRow row;
    row.sweep_var = fields[0];
    row.sweep_value = std::stod(fields[1]);
    row.detector = fields[2];
    row.trial = std::stoll(fields[3]);
    row.seed = std::stoull(fields[4]);
    row.iters = std::stod(fields[5]);
    row.converged = std::stod(fields[6]);
    row.nmse = std::stod(fields[7]);
    row.pfa = std::stod(fields[8]);
    row.pmd = std::stod(fields[9]);
    row.runtime_ms = std::stod(fields[10]);
    row.status = fields[11];
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<TrialRow> parse_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return parse_results_csv(in);
}

// ---------------------------------------------------------------------------
// Flat key-value experiment config
// ---------------------------------------------------------------------------

inline DetectorConfig detector_config_from_keyvalues(Detector kind, const KeyValues& kv) {
  DetectorConfig det;
  det.kind = kind;
  const std::string prefix = detector_name(kind) + ".";
  if (kv.has(prefix + "tau")) det.tau = kv.get_double(prefix + "tau");
  if (kv.has(prefix + "max_iters"))
    det.max_iters = static_cast<std::size_t>(kv.get_u64(prefix + "max_iters"));
  det.conv_tol = kv.get_double(prefix + "conv_tol", det.conv_tol);
  if (kind == Detector::kHt) {
    det.ht_oversample = kv.get_double("ht.oversample", det.ht_oversample);
    det.ht_smooth_eps = kv.get_double("ht.smooth_eps", det.ht_smooth_eps);
    det.ht_smoothing = kv.get_bool("ht.smoothing_enabled", det.ht_smoothing);
  }
  if (kind == Detector::kSamp) {
    auto& g = det.greedy;
    g.grid_oversample = static_cast<std::size_t>(kv.get_u64("samp.grid_oversample", g.grid_oversample));
    g.newton_max_iters =
        static_cast<std::size_t>(kv.get_u64("samp.newton_max_iters", g.newton_max_iters));
    g.newton_tol = kv.get_double("samp.newton_tol", g.newton_tol);
    g.max_atoms = static_cast<std::size_t>(kv.get_u64("samp.max_atoms", g.max_atoms));
    g.prune_tol = kv.get_double("samp.prune_tol", g.prune_tol);
    g.stop_factor = kv.get_double("samp.stop_factor", g.stop_factor);
    auto& sm = det.smoothing;
    sm.j1 = static_cast<std::size_t>(kv.get_u64("samp.j1", sm.j1));
    sm.j2 = static_cast<std::size_t>(kv.get_u64("samp.j2", sm.j2));
    sm.smooth_std = kv.get_double("samp.smooth_std", sm.smooth_std);
    sm.fd_step = kv.get_double("samp.fd_step", sm.fd_step);
  }
  return det;
}

inline ExperimentSpec experiment_spec_from_keyvalues(const KeyValues& kv,
                                                     ExperimentSpec base = {}) {
  base.base = system_config_from_keyvalues(kv, base.base);
  if (kv.has("detectors")) {
    base.detectors.clear();
    for (const auto& name : kv.get_list("detectors"))
      base.detectors.push_back(detector_config_from_keyvalues(detector_from_name(name), kv));
  } else {
    for (auto& det : base.detectors)
      det = detector_config_from_keyvalues(det.kind, kv);
  }
  if (kv.has("sweep_var")) base.sweep_var = sweep_var_from_name(kv.get_string("sweep_var"));
  if (kv.has("sweep_values")) base.sweep_values = kv.get_double_list("sweep_values");
  base.trials = static_cast<std::size_t>(kv.get_u64("trials", base.trials));
  if (kv.has("threshold_grid")) base.threshold_grid = kv.get_double_list("threshold_grid");
  base.se_enabled = kv.get_bool("se_enabled", base.se_enabled);
  base.se.mc_samples = static_cast<std::size_t>(kv.get_u64("se_mc_samples", base.se.mc_samples));
  base.se.user_subsample =
      static_cast<std::size_t>(kv.get_u64("se_user_subsample", base.se.user_subsample));
  base.se.seed = kv.get_u64("se_seed", base.se.seed);
  base.threads = static_cast<int>(kv.get_u64("threads", static_cast<std::uint64_t>(base.threads)));
  base.out_path = kv.get_string("out_path", base.out_path);
  return base;
}

inline ExperimentSpec load_experiment_config(const std::string& path) {
  return experiment_spec_from_keyvalues(KeyValues::parse_file(path));
}

}  // namespace ampdet
