#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "ampdet/errors.hpp"
#include "ampdet/keyval.hpp"
#include "ampdet/rng.hpp"
#include "ampdet/types.hpp"

namespace ampdet {

/// Synthetic uplink setup. Powers are carried in dBm / dB and converted to
/// linear milliwatt units only where noise and signal scales are formed, so
/// all downstream processing is scale free.
struct SystemConfig {
  std::size_t n_users = 2000;    // N
  std::size_t n_antennas = 32;   // M
  std::size_t pilot_len = 1000;  // Q
  double activity_prob = 0.05;   // epsilon
  std::size_t paths_min = 1;
  std::size_t paths_max = 4;
  double tx_power_dbm = 30.0;
  double pathloss_db = -94.0;
  double noise_psd_dbm_hz = -174.0;
  double bandwidth_hz = 1e8;
  std::uint64_t seed = 1;
  /// When set, overrides the PSD x bandwidth derivation with
  /// sigma_w^2 = rx_power / 10^(snr/10). +inf gives an exactly noiseless run.
  std::optional<double> snr_override_db{};

  void validate() const {
    if (n_users < 1 || n_antennas < 1 || pilot_len < 1)
      throw std::invalid_argument("SystemConfig: N, M, Q must all be >= 1");
    if (!(activity_prob >= 0.0 && activity_prob <= 1.0))
      throw std::invalid_argument("SystemConfig: activity_prob must lie in [0, 1]");
    if (paths_min < 1 || paths_min > paths_max || paths_max > n_antennas)
      throw std::invalid_argument("SystemConfig: need 1 <= paths_min <= paths_max <= n_antennas");
    if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("SystemConfig: bandwidth_hz must be > 0");
  }

  /// Per-antenna received power after pathloss, in mW.
  double rx_power_mw() const { return std::pow(10.0, (tx_power_dbm + pathloss_db) / 10.0); }

  /// Noise power sigma_w^2 in mW.
  double noise_var_mw() const {
    if (snr_override_db) return rx_power_mw() * std::pow(10.0, -*snr_override_db / 10.0);
    const double noise_dbm = noise_psd_dbm_hz + 10.0 * std::log10(bandwidth_hz);
    return std::pow(10.0, noise_dbm / 10.0);
  }

  /// Per-antenna SNR in dB under the convention snr = rx_power / sigma_w^2.
  double snr_db() const { return 10.0 * std::log10(rx_power_mw() / noise_var_mw()); }
};

struct PathAtom {
  double freq = 0.0;  // normalized spatial frequency in [0, 1)
  Complex gain{};
};

struct Scenario {
  SystemConfig config;
  CMat pilots;       // U, Q x N
  CMat truth;        // X, N x M
  CMat observation;  // Y, Q x M
  std::vector<std::uint8_t> activity;        // N entries, 0/1
  std::vector<std::vector<PathAtom>> paths;  // per user; empty when inactive
  double noise_var = 0.0;                    // sigma_w^2 (linear)

  std::size_t n_users() const { return static_cast<std::size_t>(truth.rows()); }
  std::size_t n_antennas() const { return static_cast<std::size_t>(truth.cols()); }
  std::size_t pilot_len() const { return static_cast<std::size_t>(pilots.rows()); }

  std::size_t n_active() const {
    std::size_t k = 0;
    for (auto a : activity) k += (a != 0);
    return k;
  }
};

/// Unit-norm array steering vector: element m is exp(j 2 pi m f) / sqrt(M).
inline CVec steering(double freq, std::size_t n_antennas) {
  if (!(freq >= 0.0 && freq < 1.0)) throw std::invalid_argument("steering: frequency outside [0, 1)");
  if (n_antennas < 1) throw std::invalid_argument("steering: need at least one antenna");
  CVec a(static_cast<Eigen::Index>(n_antennas));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_antennas));
  const Complex step = std::polar(1.0, kTwoPi * freq);
  Complex phase(1.0, 0.0);
  for (Eigen::Index m = 0; m < a.size(); ++m) {
    a[m] = scale * phase;
    phase *= step;
  }
  return a;
}

/// Multipath superposition sum_l gains[l] * a(freqs[l]).
inline CVec synthesize_channel(const std::vector<double>& freqs, const std::vector<Complex>& gains,
                               std::size_t n_antennas) {
  if (freqs.size() != gains.size())
    throw std::invalid_argument("synthesize_channel: frequency/gain count mismatch");
  CVec h = CVec::Zero(static_cast<Eigen::Index>(n_antennas));
  for (std::size_t l = 0; l < freqs.size(); ++l) h += gains[l] * steering(freqs[l], n_antennas);
  return h;
}

struct ChannelDraw {
  std::vector<double> freqs;
  std::vector<Complex> gains;
  CVec channel;  // equals synthesize_channel(freqs, gains, M)
};

/// Draws n_paths atoms with standard complex normal gains and frequencies
/// uniform on [0, 1).
inline ChannelDraw generate_channel(Rng& rng, std::size_t n_paths, std::size_t n_antennas) {
  if (n_paths < 1) throw std::invalid_argument("generate_channel: need at least one path");
  if (n_paths > n_antennas)
    throw std::invalid_argument("generate_channel: more paths than antennas (oversaturated model)");
  ChannelDraw draw;
  draw.freqs.reserve(n_paths);
  draw.gains.reserve(n_paths);
  for (std::size_t l = 0; l < n_paths; ++l) {
    draw.freqs.push_back(rng.uniform());
    draw.gains.push_back(rng.cnormal());
  }
  draw.channel = synthesize_channel(draw.freqs, draw.gains, n_antennas);
  return draw;
}

/// QPSK pilot matrix with entries of magnitude 1/sqrt(Q), so every column has
/// unit squared norm.
inline CMat generate_pilots(Rng& rng, std::size_t pilot_len, std::size_t n_users) {
  if (pilot_len < 1 || n_users < 1) throw std::invalid_argument("generate_pilots: empty dimensions");
  CMat u(static_cast<Eigen::Index>(pilot_len), static_cast<Eigen::Index>(n_users));
  const double scale = 1.0 / std::sqrt(static_cast<double>(pilot_len));
  for (Eigen::Index c = 0; c < u.cols(); ++c)
    for (Eigen::Index r = 0; r < u.rows(); ++r) u(r, c) = scale * rng.qpsk();
  return u;
}

namespace detail {
// Stream tags for the independent per-component substreams.
inline constexpr std::uint64_t kPilotStream = 0x70696c6f74ULL;
inline constexpr std::uint64_t kActivityStream = 0x616374ULL;
inline constexpr std::uint64_t kChannelStream = 0x6368616eULL;
inline constexpr std::uint64_t kNoiseStream = 0x6e6f6973ULL;
}  // namespace detail

/// Generates the full problem instance from config.seed. Identical configs
/// give bit-identical scenarios.
inline Scenario generate_scenario(const SystemConfig& config) {
  config.validate();
  const std::size_t n = config.n_users;
  const std::size_t m = config.n_antennas;
  const std::size_t q = config.pilot_len;

  Scenario s;
  s.config = config;
  s.noise_var = config.noise_var_mw();

  Rng pilot_rng(derive_seed(config.seed, detail::kPilotStream));
  s.pilots = generate_pilots(pilot_rng, q, n);

  Rng activity_rng(derive_seed(config.seed, detail::kActivityStream));
  s.activity.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    s.activity[i] = activity_rng.bernoulli(config.activity_prob) ? 1 : 0;

  // Row scale: per-antenna link-budget power times the M-antenna aperture.
  const double row_amp = std::sqrt(config.rx_power_mw() * static_cast<double>(m));

  s.truth = CMat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  s.paths.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    if (!s.activity[i]) continue;
    Rng chan_rng(derive_seed(config.seed, detail::kChannelStream, i));
    const std::size_t n_paths =
        static_cast<std::size_t>(chan_rng.uniform_int(config.paths_min, config.paths_max));
    ChannelDraw draw = generate_channel(chan_rng, n_paths, m);
    auto& atoms = s.paths[i];
    atoms.resize(n_paths);
    for (std::size_t l = 0; l < n_paths; ++l) {
      atoms[l].freq = draw.freqs[l];
      atoms[l].gain = row_amp * draw.gains[l];
    }
    std::vector<double> freqs(n_paths);
    std::vector<Complex> gains(n_paths);
    for (std::size_t l = 0; l < n_paths; ++l) {
      freqs[l] = atoms[l].freq;
      gains[l] = atoms[l].gain;
    }
    s.truth.row(static_cast<Eigen::Index>(i)) = synthesize_channel(freqs, gains, m).transpose();
  }

  s.observation.noalias() = s.pilots * s.truth;
  if (s.noise_var > 0.0) {
    Rng noise_rng(derive_seed(config.seed, detail::kNoiseStream));
    const double z_amp = std::sqrt(s.noise_var);
    for (Eigen::Index c = 0; c < s.observation.cols(); ++c)
      for (Eigen::Index r = 0; r < s.observation.rows(); ++r)
        s.observation(r, c) += z_amp * noise_rng.cnormal();
  }
  return s;
}

// ---------------------------------------------------------------------------
// Binary scenario format, magic "AMPSCN01". Little-endian header of u32 dims
// (N, M, Q) and f64 sigma_w^2, then row-major complex64 arrays as (re, im)
// f64 pairs in order U, X, Y, then activity as one byte per user, then
// per-user path records (u32 count, then (f64 f, f64 re, f64 im) triples).
// ---------------------------------------------------------------------------

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "scenario format is little-endian; byte swapping is not implemented");

inline constexpr char kScenarioMagic[8] = {'A', 'M', 'P', 'S', 'C', 'N', '0', '1'};

inline void write_raw(std::ostream& out, const void* data, std::size_t size) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

inline void read_raw(std::istream& in, void* data, std::size_t size, const char* what) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
  if (in.gcount() != static_cast<std::streamsize>(size))
    throw ScenarioIoError(ScenarioIoStatus::kTruncated,
                          std::string("scenario file truncated while reading ") + what);
}

inline void write_complex_rowmajor(std::ostream& out, const CMat& mat) {
  for (Eigen::Index r = 0; r < mat.rows(); ++r)
    for (Eigen::Index c = 0; c < mat.cols(); ++c) {
      const double re = mat(r, c).real();
      const double im = mat(r, c).imag();
      write_raw(out, &re, sizeof(re));
      write_raw(out, &im, sizeof(im));
    }
}

inline CMat read_complex_rowmajor(std::istream& in, std::size_t rows, std::size_t cols,
                                  const char* what) {
  CMat mat(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::vector<double> buffer(cols * 2);
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    read_raw(in, buffer.data(), buffer.size() * sizeof(double), what);
    for (Eigen::Index c = 0; c < mat.cols(); ++c)
      mat(r, c) = Complex(buffer[2 * c], buffer[2 * c + 1]);
  }
  return mat;
}

}  // namespace detail

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ScenarioIoError(ScenarioIoStatus::kIoFailure, "cannot open for writing: " + path);
  detail::write_raw(out, detail::kScenarioMagic, sizeof(detail::kScenarioMagic));
  const std::uint32_t n = static_cast<std::uint32_t>(s.n_users());
  const std::uint32_t m = static_cast<std::uint32_t>(s.n_antennas());
  const std::uint32_t q = static_cast<std::uint32_t>(s.pilot_len());
  detail::write_raw(out, &n, sizeof(n));
  detail::write_raw(out, &m, sizeof(m));
  detail::write_raw(out, &q, sizeof(q));
  detail::write_raw(out, &s.noise_var, sizeof(s.noise_var));
  detail::write_complex_rowmajor(out, s.pilots);
  detail::write_complex_rowmajor(out, s.truth);
  detail::write_complex_rowmajor(out, s.observation);
  detail::write_raw(out, s.activity.data(), s.activity.size());
  for (const auto& atoms : s.paths) {
    const std::uint32_t count = static_cast<std::uint32_t>(atoms.size());
    detail::write_raw(out, &count, sizeof(count));
    for (const auto& atom : atoms) {
      const double re = atom.gain.real();
      const double im = atom.gain.imag();
      detail::write_raw(out, &atom.freq, sizeof(atom.freq));
      detail::write_raw(out, &re, sizeof(re));
      detail::write_raw(out, &im, sizeof(im));
    }
  }
  out.flush();
  if (!out) throw ScenarioIoError(ScenarioIoStatus::kIoFailure, "write failed: " + path);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ScenarioIoError(ScenarioIoStatus::kIoFailure, "cannot open for reading: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic))
    throw ScenarioIoError(ScenarioIoStatus::kTruncated, "scenario file shorter than its magic");
  if (std::memcmp(magic, detail::kScenarioMagic, sizeof(magic)) != 0)
    throw ScenarioIoError(ScenarioIoStatus::kBadMagic, "not a scenario file (bad magic)");

  std::uint32_t n = 0, m = 0, q = 0;
  detail::read_raw(in, &n, sizeof(n), "header");
  detail::read_raw(in, &m, sizeof(m), "header");
  detail::read_raw(in, &q, sizeof(q), "header");
  constexpr std::uint32_t kDimLimit = 100'000'000;
  if (n == 0 || m == 0 || q == 0 || n > kDimLimit || m > kDimLimit || q > kDimLimit)
    throw ScenarioIoError(ScenarioIoStatus::kDimensionMismatch,
                          "scenario header carries invalid dimensions");

  Scenario s;
  detail::read_raw(in, &s.noise_var, sizeof(s.noise_var), "header");
  s.pilots = detail::read_complex_rowmajor(in, q, n, "pilots");
  s.truth = detail::read_complex_rowmajor(in, n, m, "truth");
  s.observation = detail::read_complex_rowmajor(in, q, m, "observation");
  s.activity.resize(n);
  detail::read_raw(in, s.activity.data(), s.activity.size(), "activity");
  for (auto a : s.activity)
    if (a > 1)
      throw ScenarioIoError(ScenarioIoStatus::kDimensionMismatch,
                            "activity flags must be 0 or 1");
  s.paths.assign(n, {});
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint32_t count = 0;
    detail::read_raw(in, &count, sizeof(count), "path records");
    if (count > m)
      throw ScenarioIoError(ScenarioIoStatus::kDimensionMismatch,
                            "path count exceeds antenna count");
    auto& atoms = s.paths[i];
    atoms.resize(count);
    for (auto& atom : atoms) {
      double re = 0.0, im = 0.0;
      detail::read_raw(in, &atom.freq, sizeof(atom.freq), "path records");
      detail::read_raw(in, &re, sizeof(re), "path records");
      detail::read_raw(in, &im, sizeof(im), "path records");
      atom.gain = Complex(re, im);
    }
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw ScenarioIoError(ScenarioIoStatus::kTrailingData, "scenario file has trailing bytes");

  s.config.n_users = n;
  s.config.n_antennas = m;
  s.config.pilot_len = q;
  return s;
}

// ---------------------------------------------------------------------------
// Flat key-value serialization of SystemConfig.
// ---------------------------------------------------------------------------

inline SystemConfig system_config_from_keyvalues(const KeyValues& kv, SystemConfig base = {}) {
  base.n_users = static_cast<std::size_t>(kv.get_u64("n_users", base.n_users));
  base.n_antennas = static_cast<std::size_t>(kv.get_u64("n_antennas", base.n_antennas));
  base.pilot_len = static_cast<std::size_t>(kv.get_u64("pilot_len", base.pilot_len));
  base.activity_prob = kv.get_double("activity_prob", base.activity_prob);
  base.paths_min = static_cast<std::size_t>(kv.get_u64("paths_min", base.paths_min));
  base.paths_max = static_cast<std::size_t>(kv.get_u64("paths_max", base.paths_max));
  base.tx_power_dbm = kv.get_double("tx_power_dbm", base.tx_power_dbm);
  base.pathloss_db = kv.get_double("pathloss_db", base.pathloss_db);
  base.noise_psd_dbm_hz = kv.get_double("noise_psd_dbm_hz", base.noise_psd_dbm_hz);
  base.bandwidth_hz = kv.get_double("bandwidth_hz", base.bandwidth_hz);
  base.seed = kv.get_u64("seed", base.seed);
  if (kv.has("snr_override_db")) base.snr_override_db = kv.get_double("snr_override_db");
  return base;
}

inline void save_system_config(const SystemConfig& config, std::ostream& out) {
  out << "n_users = " << config.n_users << '\n'
      << "n_antennas = " << config.n_antennas << '\n'
      << "pilot_len = " << config.pilot_len << '\n'
      << "activity_prob = " << config.activity_prob << '\n'
      << "paths_min = " << config.paths_min << '\n'
      << "paths_max = " << config.paths_max << '\n'
      << "tx_power_dbm = " << config.tx_power_dbm << '\n'
      << "pathloss_db = " << config.pathloss_db << '\n'
      << "noise_psd_dbm_hz = " << config.noise_psd_dbm_hz << '\n'
      << "bandwidth_hz = " << config.bandwidth_hz << '\n'
      << "seed = " << config.seed << '\n';
  if (config.snr_override_db) out << "snr_override_db = " << *config.snr_override_db << '\n';
}

inline void save_system_config(const SystemConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open config for writing: " + path);
  save_system_config(config, out);
}

inline SystemConfig load_system_config(const std::string& path) {
  return system_config_from_keyvalues(KeyValues::parse_file(path));
}

}  // namespace ampdet
