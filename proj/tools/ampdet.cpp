// Command-line front end: scenario generation, single detector runs, Monte
// Carlo sweeps, state evolution and tau calibration.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "ampdet/ampdet.hpp"

namespace {

using namespace ampdet;

int hardware_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

struct ConfigCli {
  std::string config_path;
  std::optional<std::uint64_t> n_users, pilot_len, n_antennas, paths_min, paths_max, seed;
  std::optional<double> activity_prob, tx_power_dbm, pathloss_db, noise_psd, bandwidth, snr_db;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "flat key = value config file");
    app.add_option("-N,--n-users", n_users, "number of users");
    app.add_option("-M,--n-antennas", n_antennas, "number of BS antennas");
    app.add_option("-Q,--pilot-len", pilot_len, "pilot sequence length");
    app.add_option("--activity-prob", activity_prob, "activity probability epsilon");
    app.add_option("--paths-min", paths_min, "minimum number of channel paths");
    app.add_option("--paths-max", paths_max, "maximum number of channel paths");
    app.add_option("--tx-power-dbm", tx_power_dbm, "transmit power [dBm]");
    app.add_option("--pathloss-db", pathloss_db, "pathloss [dB], negative");
    app.add_option("--noise-psd", noise_psd, "noise PSD [dBm/Hz]");
    app.add_option("--bandwidth", bandwidth, "bandwidth [Hz]");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--snr-db", snr_db, "SNR override [dB]; inf gives a noiseless run");
  }

  KeyValues merged() const {
    KeyValues kv = config_path.empty() ? KeyValues{} : KeyValues::parse_file(config_path);
    auto set_u64 = [&kv](const char* key, const std::optional<std::uint64_t>& v) {
      if (v) kv.set(key, std::to_string(*v));
    };
    auto set_double = [&kv](const char* key, const std::optional<double>& v) {
      if (v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", *v);
        kv.set(key, buf);
      }
    };
    set_u64("n_users", n_users);
    set_u64("n_antennas", n_antennas);
    set_u64("pilot_len", pilot_len);
    set_u64("paths_min", paths_min);
    set_u64("paths_max", paths_max);
    set_u64("seed", seed);
    set_double("activity_prob", activity_prob);
    set_double("tx_power_dbm", tx_power_dbm);
    set_double("pathloss_db", pathloss_db);
    set_double("noise_psd_dbm_hz", noise_psd);
    set_double("bandwidth_hz", bandwidth);
    set_double("snr_override_db", snr_db);
    return kv;
  }

  SystemConfig system_config() const { return system_config_from_keyvalues(merged()); }
};

struct DetectorCli {
  std::string detector = "gst";
  std::optional<double> tau;
  std::optional<std::uint64_t> max_iters;
  std::optional<double> conv_tol;

  void attach(CLI::App& app, bool require_detector) {
    auto* opt = app.add_option("-d,--detector", detector, "detector: gst, ht or samp");
    if (require_detector) opt->required();
    app.add_option("--tau", tau, "threshold multiplier tau (default per detector)");
    app.add_option("--max-iters", max_iters, "AMP iteration cap");
    app.add_option("--conv-tol", conv_tol, "relative-change convergence tolerance");
  }

  DetectorConfig resolve(const KeyValues& kv) const {
    DetectorConfig det = detector_config_from_keyvalues(detector_from_name(detector), kv);
    if (tau) det.tau = *tau;
    if (max_iters) det.max_iters = static_cast<std::size_t>(*max_iters);
    if (conv_tol) det.conv_tol = *conv_tol;
    return det;
  }
};

void print_detection(const std::string& name, const AmpResult& amp, const DetectionResult& det,
                     double runtime_ms) {
  std::printf("%s: iters=%zu converged=%d nmse=%.6g pfa=%.6g pmd=%.6g threshold=%.6g time=%.1f ms\n",
              name.c_str(), amp.iters, amp.converged ? 1 : 0, det.nmse, det.pfa, det.pmd,
              det.threshold, runtime_ms);
}

void write_roc_csv(const std::vector<RocPoint>& roc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "threshold,pfa,pmd\n";
  char line[128];
  for (const auto& p : roc) {
    std::snprintf(line, sizeof(line), "%.12g,%.12g,%.12g\n", p.threshold, p.pfa, p.pmd);
    out << line;
  }
}

std::string se_csv_path(const std::string& out_path, const std::string& detector,
                        const std::string& sweep_var, double sweep_value) {
  std::filesystem::path p(out_path);
  const std::string stem = p.stem().string();
  char value[40];
  std::snprintf(value, sizeof(value), "%g", sweep_value);
  std::string name = stem + "_se_" + detector;
  if (sweep_var != "none") name += std::string("_") + sweep_var + value;
  name += ".csv";
  return (p.parent_path() / name).string();
}

int cmd_generate(const ConfigCli& cfg_cli, const std::string& out_path,
                 const std::string& config_out) {
  const SystemConfig config = cfg_cli.system_config();
  config.validate();
  const Scenario scenario = generate_scenario(config);
  save_scenario(scenario, out_path);
  if (!config_out.empty()) save_system_config(config, config_out);
  std::printf("wrote %s: N=%zu M=%zu Q=%zu K=%zu snr=%.2f dB noise_var=%.6g\n", out_path.c_str(),
              scenario.n_users(), scenario.n_antennas(), scenario.pilot_len(), scenario.n_active(),
              config.snr_db(), scenario.noise_var);
  return 0;
}

int cmd_run(const ConfigCli& cfg_cli, const DetectorCli& det_cli, const std::string& scenario_path,
            std::optional<double> threshold, int threads, const std::string& out_path,
            const std::string& roc_path, bool with_se, const std::string& se_out) {
  const KeyValues kv = cfg_cli.merged();
  Scenario scenario;
  if (!scenario_path.empty()) {
    scenario = load_scenario(scenario_path);
  } else {
    scenario = generate_scenario(system_config_from_keyvalues(kv));
  }
  const std::size_t m = scenario.n_antennas();
  const DetectorConfig det = det_cli.resolve(kv);
  const auto denoiser = make_denoiser(det, m, scenario.config.seed);
  const AmpConfig amp_cfg = resolve_amp_config(det, m, threads);

  const auto t0 = std::chrono::steady_clock::now();
  const AmpResult amp = run_amp(scenario, amp_cfg, *denoiser);
  const auto t1 = std::chrono::steady_clock::now();
  const double runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  const double op_threshold = threshold ? *threshold : default_detection_threshold(amp.estimate);
  const DetectionResult detection =
      evaluate_detection(amp.estimate, scenario.truth, scenario.activity, op_threshold);
  print_detection(detector_name(det.kind), amp, detection, runtime_ms);

  std::vector<double> grid = kv.has("threshold_grid") ? kv.get_double_list("threshold_grid")
                                                      : auto_threshold_grid(amp.estimate);
  if (!roc_path.empty()) {
    write_roc_csv(roc_sweep(amp.estimate, scenario.activity, grid), roc_path);
    std::printf("wrote ROC sweep (%zu thresholds) to %s\n", grid.size(), roc_path.c_str());
  }

  if (!out_path.empty()) {
    TrialRow row;
    row.sweep_var = "none";
    row.sweep_value = 0.0;
    row.detector = detector_name(det.kind);
    row.trial = 0;
    row.seed = scenario.config.seed;
    row.iters = static_cast<double>(amp.iters);
    row.converged = amp.converged ? 1.0 : 0.0;
    row.nmse = detection.nmse;
    row.pfa = detection.pfa;
    row.pmd = detection.pmd;
    row.runtime_ms = runtime_ms;
    row.status = "ok";
    emit_csv({row}, out_path);
  }

  if (with_se) {
    SeParams se;
    se.mc_samples = static_cast<std::size_t>(kv.get_u64("se_mc_samples", se.mc_samples));
    se.user_subsample =
        static_cast<std::size_t>(kv.get_u64("se_user_subsample", se.user_subsample));
    se.seed = kv.get_u64("se_seed", se.seed);
    se.n_threads = threads;
    const StateEvolutionTrace trace = run_se(scenario, amp_cfg, *denoiser, se);
    const std::string path =
        se_out.empty() ? se_csv_path(out_path.empty() ? "run.csv" : out_path,
                                     detector_name(det.kind), "none", 0.0)
                       : se_out;
    save_se_csv(trace, path);
    std::printf("state evolution: predicted nmse at t=%zu is %.6g (empirical %.6g); wrote %s\n",
                trace.predicted_nmse.size() - 1, trace.predicted_nmse.back(),
                amp.state.nmse_history.back(), path.c_str());
  }
  return 0;
}

int cmd_sweep(const ConfigCli& cfg_cli, std::vector<std::string> detectors,
              const std::string& sweep_var, std::vector<double> sweep_values,
              std::optional<std::uint64_t> trials, std::optional<int> threads,
              std::optional<bool> se_enabled, std::string out_path) {
  KeyValues kv = cfg_cli.merged();
  if (!detectors.empty()) {
    std::string joined;
    for (const auto& d : detectors) joined += (joined.empty() ? "" : ",") + d;
    kv.set("detectors", joined);
  }
  if (!sweep_var.empty()) kv.set("sweep_var", sweep_var);
  if (!sweep_values.empty()) {
    std::string joined;
    for (double v : sweep_values) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      joined += (joined.empty() ? "" : ",") + std::string(buf);
    }
    kv.set("sweep_values", joined);
  }
  if (trials) kv.set("trials", std::to_string(*trials));
  if (threads) kv.set("threads", std::to_string(*threads));
  if (se_enabled) kv.set("se_enabled", *se_enabled ? "true" : "false");
  if (!out_path.empty()) kv.set("out_path", out_path);

  const ExperimentSpec spec = experiment_spec_from_keyvalues(kv);
  spec.validate();
  std::printf("sweep %s over %zu point(s), %zu detector(s), %zu trial(s), %d thread(s)\n",
              sweep_var_name(spec.sweep_var).c_str(), spec.effective_sweep_values().size(),
              spec.detectors.size(), spec.trials, spec.threads);
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentResult result = run_experiment(spec);
  const auto t1 = std::chrono::steady_clock::now();
  emit_csv(result.rows, spec.out_path);
  std::printf("wrote %zu rows to %s in %.1f s\n", result.rows.size(), spec.out_path.c_str(),
              std::chrono::duration<double>(t1 - t0).count());
  const auto sweep_values_eff = spec.effective_sweep_values();
  for (const auto& run : result.se_runs) {
    const std::string path =
        se_csv_path(spec.out_path, detector_name(spec.detectors[run.detector_index].kind),
                    sweep_var_name(spec.sweep_var), sweep_values_eff[run.sweep_index]);
    save_se_csv(run.trace, path);
    std::printf("wrote paired state evolution to %s\n", path.c_str());
  }
  return 0;
}

int cmd_se(const ConfigCli& cfg_cli, const DetectorCli& det_cli, const std::string& scenario_path,
           std::optional<std::uint64_t> iters, std::optional<std::uint64_t> mc_samples,
           std::optional<std::uint64_t> user_subsample, int threads, const std::string& out_path) {
  const KeyValues kv = cfg_cli.merged();
  Scenario scenario;
  if (!scenario_path.empty()) {
    scenario = load_scenario(scenario_path);
  } else {
    scenario = generate_scenario(system_config_from_keyvalues(kv));
  }
  const std::size_t m = scenario.n_antennas();
  const DetectorConfig det = det_cli.resolve(kv);
  const auto denoiser = make_denoiser(det, m, scenario.config.seed);
  const AmpConfig amp_cfg = resolve_amp_config(det, m, threads);
  SeParams se;
  se.mc_samples = mc_samples ? static_cast<std::size_t>(*mc_samples)
                             : static_cast<std::size_t>(kv.get_u64("se_mc_samples", se.mc_samples));
  se.user_subsample = user_subsample
                          ? static_cast<std::size_t>(*user_subsample)
                          : static_cast<std::size_t>(kv.get_u64("se_user_subsample", se.user_subsample));
  se.seed = kv.get_u64("se_seed", se.seed);
  se.n_threads = threads;
  const StateEvolutionTrace trace =
      run_se(scenario, amp_cfg, *denoiser, se, iters ? static_cast<std::size_t>(*iters) : 0);
  save_se_csv(trace, out_path);
  std::printf("wrote %zu state-evolution iterations to %s (final predicted nmse %.6g)\n",
              trace.predicted_nmse.size(), out_path.c_str(), trace.predicted_nmse.back());
  return 0;
}

int cmd_calibrate_tau(const ConfigCli& cfg_cli, const DetectorCli& det_cli,
                      std::vector<double> taus, std::uint64_t trials, int threads,
                      const std::string& out_path) {
  if (taus.empty()) throw std::runtime_error("calibrate-tau: need at least one --taus value");
  KeyValues kv = cfg_cli.merged();
  std::printf("tau sweep for %s: %zu values x %llu trials\n", det_cli.detector.c_str(), taus.size(),
              static_cast<unsigned long long>(trials));
  std::ofstream out;
  if (!out_path.empty()) {
    out.open(out_path);
    if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
    out << "tau,mean_nmse,std_nmse,mean_pfa,mean_pmd,mean_iters,converged_fraction\n";
  }
  double best_tau = taus.front();
  double best_nmse = std::numeric_limits<double>::infinity();
  for (double tau : taus) {
    ExperimentSpec spec;
    spec.base = system_config_from_keyvalues(kv);
    DetectorConfig det = det_cli.resolve(kv);
    det.tau = tau;
    spec.detectors = {det};
    spec.trials = static_cast<std::size_t>(trials);
    spec.threads = threads;
    const ExperimentResult result = run_experiment(spec);
    double mean_nmse = std::numeric_limits<double>::quiet_NaN(), std_nmse = 0.0, mean_pfa = 0.0,
           mean_pmd = 0.0, mean_iters = 0.0, conv = 0.0;
    for (const auto& row : result.rows) {
      if (row.status == "mean") {
        mean_nmse = row.nmse;
        mean_pfa = row.pfa;
        mean_pmd = row.pmd;
        mean_iters = row.iters;
        conv = row.converged;
      } else if (row.status == "std") {
        std_nmse = row.nmse;
      }
    }
    std::printf("  tau=%-8g nmse=%-10.5g pfa=%-9.4g pmd=%-9.4g iters=%-5.2f converged=%.0f%%\n",
                tau, mean_nmse, mean_pfa, mean_pmd, mean_iters, 100.0 * conv);
    if (out.is_open()) {
      char line[200];
      std::snprintf(line, sizeof(line), "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", tau,
                    mean_nmse, std_nmse, mean_pfa, mean_pmd, mean_iters, conv);
      out << line;
    }
    if (std::isfinite(mean_nmse) && mean_nmse < best_nmse) {
      best_nmse = mean_nmse;
      best_tau = tau;
    }
  }
  std::printf("best tau by mean nmse: %g (nmse %.5g)\n", best_tau, best_nmse);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AMP-based device activity detection and mmWave channel estimation"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "generate a scenario and write it to disk");
  ConfigCli gen_cfg;
  gen_cfg.attach(*generate);
  std::string gen_out = "scenario.bin";
  std::string gen_config_out;
  generate->add_option("-o,--out", gen_out, "output scenario path");
  generate->add_option("--save-config", gen_config_out, "also write the resolved config file");

  // run
  auto* run = app.add_subcommand("run", "run one detector on one scenario");
  ConfigCli run_cfg;
  run_cfg.attach(*run);
  DetectorCli run_det;
  run_det.attach(*run, true);
  std::string run_scenario, run_out, run_roc, run_se_out;
  std::optional<double> run_threshold;
  int run_threads = hardware_threads();
  bool run_with_se = false;
  run->add_option("--scenario", run_scenario, "load a saved scenario instead of generating one");
  run->add_option("--threshold", run_threshold, "detection threshold (default: automatic)");
  run->add_option("--threads", run_threads, "threads for per-user work");
  run->add_option("-o,--out", run_out, "write a one-row results CSV");
  run->add_option("--roc-out", run_roc, "write the detection-threshold sweep CSV");
  run->add_flag("--se", run_with_se, "also run the paired state evolution");
  run->add_option("--se-out", run_se_out, "state-evolution CSV path");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo experiment grid, CSV output");
  ConfigCli sweep_cfg;
  sweep_cfg.attach(*sweep);
  std::vector<std::string> sweep_detectors;
  std::string sweep_var;
  std::vector<double> sweep_values;
  std::optional<std::uint64_t> sweep_trials;
  std::optional<int> sweep_threads;
  std::optional<bool> sweep_se;
  std::string sweep_out;
  sweep->add_option("--detectors", sweep_detectors, "detectors to run")->delimiter(',');
  sweep->add_option("--sweep", sweep_var, "sweep variable: none, M, K, Q or snr_db");
  sweep->add_option("--values", sweep_values, "sweep values")->delimiter(',');
  sweep->add_option("--trials", sweep_trials, "trials per (sweep value, detector)");
  sweep->add_option("--threads", sweep_threads, "parallel trial workers");
  sweep->add_option("--se", sweep_se, "pair each (sweep value, detector) with state evolution");
  sweep->add_option("-o,--out", sweep_out, "results CSV path");

  // se
  auto* se = app.add_subcommand("se", "state-evolution prediction only");
  ConfigCli se_cfg;
  se_cfg.attach(*se);
  DetectorCli se_det;
  se_det.attach(*se, true);
  std::string se_scenario, se_out = "se.csv";
  std::optional<std::uint64_t> se_iters, se_mc, se_sub;
  int se_threads = hardware_threads();
  se->add_option("--scenario", se_scenario, "load a saved scenario instead of generating one");
  se->add_option("--iters", se_iters, "number of SE iterations (default: detector max_iters)");
  se->add_option("--mc-samples", se_mc, "Monte Carlo draws per user");
  se->add_option("--user-subsample", se_sub, "users entering the expectation");
  se->add_option("--threads", se_threads, "threads");
  se->add_option("-o,--out", se_out, "state-evolution CSV path");

  // calibrate-tau
  auto* cal = app.add_subcommand("calibrate-tau", "sweep the threshold multiplier tau");
  ConfigCli cal_cfg;
  cal_cfg.attach(*cal);
  DetectorCli cal_det;
  cal_det.attach(*cal, true);
  std::vector<double> cal_taus;
  std::uint64_t cal_trials = 10;
  int cal_threads = hardware_threads();
  std::string cal_out;
  cal->add_option("--taus", cal_taus, "tau values to try")->delimiter(',')->required();
  cal->add_option("--trials", cal_trials, "trials per tau");
  cal->add_option("--threads", cal_threads, "parallel trial workers");
  cal->add_option("-o,--out", cal_out, "calibration CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(gen_cfg, gen_out, gen_config_out);
    if (run->parsed())
      return cmd_run(run_cfg, run_det, run_scenario, run_threshold, run_threads, run_out, run_roc,
                     run_with_se, run_se_out);
    if (sweep->parsed())
      return cmd_sweep(sweep_cfg, sweep_detectors, sweep_var, sweep_values, sweep_trials,
                       sweep_threads, sweep_se, sweep_out);
    if (se->parsed())
      return cmd_se(se_cfg, se_det, se_scenario, se_iters, se_mc, se_sub, se_threads, se_out);
    if (cal->parsed()) return cmd_calibrate_tau(cal_cfg, cal_det, cal_taus, cal_trials, cal_threads, cal_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
