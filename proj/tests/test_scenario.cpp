#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ampdet/scenario.hpp"

using namespace ampdet;
using Catch::Approx;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("steering closed-form values") {
  const CVec a0 = steering(0.0, 4);
  for (int i = 0; i < 4; ++i) {
    REQUIRE(a0[i].real() == Approx(0.5).margin(1e-15));
    REQUIRE(a0[i].imag() == Approx(0.0).margin(1e-15));
  }

  const CVec a_half = steering(0.5, 2);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  REQUIRE(a_half[0].real() == Approx(inv_sqrt2).margin(1e-15));
  REQUIRE(a_half[1].real() == Approx(-inv_sqrt2).margin(1e-12));
  REQUIRE(std::abs(a_half[1].imag()) < 1e-12);

  const CVec a_q = steering(0.25, 4);
  const Complex expected[4] = {{0.5, 0.0}, {0.0, 0.5}, {-0.5, 0.0}, {0.0, -0.5}};
  for (int i = 0; i < 4; ++i) REQUIRE(std::abs(a_q[i] - expected[i]) < 1e-12);
}

TEST_CASE("steering rejects out-of-range input") {
  REQUIRE_THROWS_AS(steering(1.0, 4), std::invalid_argument);
  REQUIRE_THROWS_AS(steering(-0.1, 4), std::invalid_argument);
  REQUIRE_THROWS_AS(steering(0.3, 0), std::invalid_argument);
}

TEST_CASE("steering vectors are unit norm") {
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t m = 1 + rng.next_u64() % 64;
    REQUIRE(steering(rng.uniform(), m).norm() == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("DFT-grid steering vectors are orthonormal") {
  const std::size_t m = 16;
  CMat atoms(m, m);
  for (std::size_t k = 0; k < m; ++k)
    atoms.col(static_cast<Eigen::Index>(k)) = steering(static_cast<double>(k) / m, m);
  const CMat gram = atoms.adjoint() * atoms;
  REQUIRE((gram - CMat::Identity(m, m)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("synthesize_channel handles cancelling atoms") {
  const CVec h = synthesize_channel({0.1, 0.1}, {Complex(1, 0), Complex(-1, 0)}, 8);
  REQUIRE(h.norm() < 1e-15);
}

TEST_CASE("generate_channel reproduces its atom decomposition") {
  Rng rng(42);
  const auto draw = generate_channel(rng, 3, 8);
  REQUIRE(draw.freqs.size() == 3);
  // independent resynthesis with plain loops
  CVec recon = CVec::Zero(8);
  for (std::size_t l = 0; l < 3; ++l)
    for (int i = 0; i < 8; ++i)
      recon[i] += draw.gains[l] *
                  std::polar(1.0 / std::sqrt(8.0), kTwoPi * i * draw.freqs[l]);
  REQUIRE((recon - draw.channel).norm() < 1e-13 * draw.channel.norm());

  // single atom, unit gain path: channel equals the steering atom scaled
  Rng rng2(1);
  const auto single = generate_channel(rng2, 1, 6);
  REQUIRE((single.channel - single.gains[0] * steering(single.freqs[0], 6)).norm() < 1e-15);
}

TEST_CASE("generate_channel rejects an oversaturated model") {
  Rng rng(1);
  REQUIRE_THROWS_AS(generate_channel(rng, 9, 8), std::invalid_argument);
  REQUIRE_THROWS_AS(generate_channel(rng, 0, 8), std::invalid_argument);
}

TEST_CASE("pilots have constant modulus and unit column norm") {
  Rng rng(5);
  const std::size_t q = 250, n = 40;
  const CMat u = generate_pilots(rng, q, n);
  const double mag0 = std::abs(u(0, 0));
  REQUIRE(mag0 == Approx(1.0 / std::sqrt(double(q))).margin(1e-15));
  for (Eigen::Index c = 0; c < u.cols(); ++c)
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      REQUIRE(std::abs(u(r, c).real()) == Approx(std::abs(u(0, 0).real())).margin(0.0));
      REQUIRE(std::abs(u(r, c).imag()) == Approx(std::abs(u(0, 0).imag())).margin(0.0));
    }
  for (Eigen::Index c = 0; c < u.cols(); ++c)
    REQUIRE(u.col(c).squaredNorm() == Approx(1.0).margin(1e-12));
}

TEST_CASE("pilot entries average out (law of large numbers)") {
  Rng rng(8);
  const std::size_t q = 400, n = 500;
  const CMat u = generate_pilots(rng, q, n);
  const Complex mean = u.sum() / double(q * n) * std::sqrt(double(q));  // in symbol units
  REQUIRE(std::abs(mean) < 3.0 / std::sqrt(double(q * n)));
}

TEST_CASE("baseline link budget gives 30 dB per-antenna SNR") {
  // 30 dBm - 94 dB pathloss = -64 dBm received; -174 dBm/Hz + 10log10(1e8)
  // = -94 dBm noise; difference 30 dB.
  const SystemConfig config;
  REQUIRE(config.snr_db() == Approx(30.0).margin(1e-9));
  REQUIRE(config.rx_power_mw() == Approx(std::pow(10.0, -6.4)).epsilon(1e-12));
  REQUIRE(config.noise_var_mw() == Approx(std::pow(10.0, -9.4)).epsilon(1e-12));
}

TEST_CASE("snr override replaces the PSD derivation") {
  SystemConfig config;
  config.snr_override_db = 10.0;
  REQUIRE(config.noise_var_mw() == Approx(config.rx_power_mw() / 10.0).epsilon(1e-12));
  config.snr_override_db = std::numeric_limits<double>::infinity();
  REQUIRE(config.noise_var_mw() == 0.0);
}

TEST_CASE("zero activity gives a noise-only observation") {
  SystemConfig config;
  config.n_users = 50;
  config.n_antennas = 4;
  config.pilot_len = 20;
  config.activity_prob = 0.0;
  config.seed = 9;
  const Scenario s = generate_scenario(config);
  REQUIRE(s.truth.norm() == 0.0);
  REQUIRE(s.n_active() == 0);
  REQUIRE(s.observation.norm() > 0.0);  // Y = Z
}

TEST_CASE("noiseless scenario satisfies Y = U X exactly") {
  SystemConfig config;
  config.n_users = 60;
  config.n_antennas = 8;
  config.pilot_len = 30;
  config.seed = 4;
  config.snr_override_db = std::numeric_limits<double>::infinity();
  const Scenario s = generate_scenario(config);
  REQUIRE(s.noise_var == 0.0);
  REQUIRE((s.observation - s.pilots * s.truth).norm() == 0.0);
}

TEST_CASE("row sparsity matches the activity pattern") {
  SystemConfig config;
  config.n_users = 300;
  config.n_antennas = 8;
  config.pilot_len = 100;
  config.seed = 12;
  const Scenario s = generate_scenario(config);
  std::size_t nonzero_rows = 0;
  for (Eigen::Index i = 0; i < s.truth.rows(); ++i)
    nonzero_rows += s.truth.row(i).norm() > 0.0;
  REQUIRE(nonzero_rows == s.n_active());
  for (Eigen::Index i = 0; i < s.truth.rows(); ++i)
    REQUIRE((s.truth.row(i).norm() > 0.0) == (s.activity[i] != 0));
}

TEST_CASE("active rows equal their stored atom decomposition") {
  SystemConfig config;
  config.n_users = 100;
  config.n_antennas = 16;
  config.pilot_len = 50;
  config.seed = 77;
  const Scenario s = generate_scenario(config);
  for (std::size_t i = 0; i < s.paths.size(); ++i) {
    if (!s.activity[i]) {
      REQUIRE(s.paths[i].empty());
      continue;
    }
    std::vector<double> freqs;
    std::vector<Complex> gains;
    for (const auto& atom : s.paths[i]) {
      REQUIRE(atom.freq >= 0.0);
      REQUIRE(atom.freq < 1.0);
      freqs.push_back(atom.freq);
      gains.push_back(atom.gain);
    }
    const CVec recon = synthesize_channel(freqs, gains, 16);
    REQUIRE((recon.transpose() - s.truth.row(static_cast<Eigen::Index>(i))).norm() <
            1e-13 * s.truth.row(static_cast<Eigen::Index>(i)).norm());
    REQUIRE(s.paths[i].size() >= config.paths_min);
    REQUIRE(s.paths[i].size() <= config.paths_max);
  }
}

TEST_CASE("noise realization carries the configured power") {
  SystemConfig config;
  config.n_users = 50;
  config.n_antennas = 8;
  config.pilot_len = 200;
  config.seed = 3;
  const Scenario s = generate_scenario(config);
  const double empirical =
      (s.observation - s.pilots * s.truth).squaredNorm() / double(200 * 8);
  REQUIRE(empirical == Approx(s.noise_var).epsilon(0.10));
}

TEST_CASE("identical config and seed give a bit-identical scenario") {
  SystemConfig config;
  config.n_users = 80;
  config.n_antennas = 8;
  config.pilot_len = 40;
  config.seed = 1234;
  const Scenario a = generate_scenario(config);
  const Scenario b = generate_scenario(config);
  REQUIRE(a.pilots == b.pilots);
  REQUIRE(a.truth == b.truth);
  REQUIRE(a.observation == b.observation);
  REQUIRE(a.activity == b.activity);

  config.seed = 1235;
  const Scenario c = generate_scenario(config);
  REQUIRE(a.observation != c.observation);
}

TEST_CASE("scenario round-trips bitwise through the binary format") {
  SystemConfig config;
  config.n_users = 40;
  config.n_antennas = 4;
  config.pilot_len = 24;
  config.seed = 99;
  const Scenario s = generate_scenario(config);
  const std::string path = temp_path("ampdet_roundtrip.bin");
  save_scenario(s, path);
  const Scenario loaded = load_scenario(path);
  REQUIRE(loaded.pilots == s.pilots);
  REQUIRE(loaded.truth == s.truth);
  REQUIRE(loaded.observation == s.observation);
  REQUIRE(loaded.activity == s.activity);
  REQUIRE(loaded.noise_var == s.noise_var);
  REQUIRE(loaded.paths.size() == s.paths.size());
  for (std::size_t i = 0; i < s.paths.size(); ++i) {
    REQUIRE(loaded.paths[i].size() == s.paths[i].size());
    for (std::size_t l = 0; l < s.paths[i].size(); ++l) {
      REQUIRE(loaded.paths[i][l].freq == s.paths[i][l].freq);
      REQUIRE(loaded.paths[i][l].gain == s.paths[i][l].gain);
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("scenario loader reports distinct failure modes") {
  SystemConfig config;
  config.n_users = 20;
  config.n_antennas = 4;
  config.pilot_len = 10;
  config.seed = 5;
  const Scenario s = generate_scenario(config);
  const std::string path = temp_path("ampdet_corrupt.bin");
  save_scenario(s, path);

  SECTION("wrong magic") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("NOPE", 4);
    f.close();
    try {
      load_scenario(path);
      FAIL("expected ScenarioIoError");
    } catch (const ScenarioIoError& e) {
      REQUIRE(e.status() == ScenarioIoStatus::kBadMagic);
    }
  }

  SECTION("truncated file") {
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size / 2);
    try {
      load_scenario(path);
      FAIL("expected ScenarioIoError");
    } catch (const ScenarioIoError& e) {
      REQUIRE(e.status() == ScenarioIoStatus::kTruncated);
    }
  }

  SECTION("zero dimension in the header") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    const std::uint32_t zero = 0;
    f.seekp(8);
    f.write(reinterpret_cast<const char*>(&zero), sizeof(zero));
    f.close();
    try {
      load_scenario(path);
      FAIL("expected ScenarioIoError");
    } catch (const ScenarioIoError& e) {
      REQUIRE(e.status() == ScenarioIoStatus::kDimensionMismatch);
    }
  }

  SECTION("trailing bytes") {
    std::ofstream f(path, std::ios::app | std::ios::binary);
    f.write("junk", 4);
    f.close();
    try {
      load_scenario(path);
      FAIL("expected ScenarioIoError");
    } catch (const ScenarioIoError& e) {
      REQUIRE(e.status() == ScenarioIoStatus::kTrailingData);
    }
  }

  SECTION("missing file") {
    try {
      load_scenario(temp_path("ampdet_does_not_exist.bin"));
      FAIL("expected ScenarioIoError");
    } catch (const ScenarioIoError& e) {
      REQUIRE(e.status() == ScenarioIoStatus::kIoFailure);
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("system config key-value round trip") {
  SystemConfig config;
  config.n_users = 123;
  config.activity_prob = 0.07;
  config.snr_override_db = 25.0;
  config.seed = 4242;
  const std::string path = temp_path("ampdet_config.cfg");
  save_system_config(config, path);
  const SystemConfig loaded = load_system_config(path);
  REQUIRE(loaded.n_users == config.n_users);
  REQUIRE(loaded.activity_prob == Approx(config.activity_prob));
  REQUIRE(loaded.seed == config.seed);
  REQUIRE(loaded.snr_override_db.has_value());
  REQUIRE(*loaded.snr_override_db == Approx(25.0));
  std::filesystem::remove(path);
}

TEST_CASE("config validation rejects bad parameters") {
  SystemConfig config;
  config.activity_prob = 1.5;
  REQUIRE_THROWS_AS(config.validate(), std::invalid_argument);
  config = SystemConfig{};
  config.paths_min = 5;
  config.paths_max = 3;
  REQUIRE_THROWS_AS(config.validate(), std::invalid_argument);
  config = SystemConfig{};
  config.paths_max = 64;  // exceeds n_antennas = 32
  REQUIRE_THROWS_AS(config.validate(), std::invalid_argument);
}
