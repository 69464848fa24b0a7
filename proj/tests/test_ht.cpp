#include <catch2/catch_amalgamated.hpp>

#include "ampdet/ht.hpp"
#include "ampdet/rng.hpp"
#include "oracles.hpp"

using namespace ampdet;
using Catch::Approx;

TEST_CASE("critically sampled dictionary is orthonormal") {
  const Dictionary dict = build_dictionary(16, 1.0);
  REQUIRE(dict.grid_size() == 16);
  const CMat gram = dict.atoms.adjoint() * dict.atoms;
  REQUIRE((gram - CMat::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("oversampled dictionary has unit-norm grid columns") {
  const Dictionary dict = build_dictionary(32, 4.0);
  REQUIRE(dict.grid_size() == 128);
  REQUIRE(dict.oversample_factor() == Approx(4.0));
  for (Eigen::Index k = 0; k < dict.atoms.cols(); ++k)
    REQUIRE(dict.atoms.col(k).norm() == Approx(1.0).margin(1e-12));
  // grid self-correlation: the k-th entry of A^H a(k / grid) is 1
  const CVec corr = dict.atoms.adjoint() * steering(5.0 / 128.0, 32);
  REQUIRE(std::abs(corr[5] - Complex(1.0, 0.0)) < 1e-12);
}

TEST_CASE("build_dictionary rejects undersampling") {
  REQUIRE_THROWS_AS(build_dictionary(8, 0.5), std::invalid_argument);
}

TEST_CASE("ht zero input maps to zero and big levels kill everything") {
  const HtParams p = make_ht_params(8, 2.0, 0.05, false);
  REQUIRE(ht_denoise(CVec::Zero(8), 0.5, p).norm() == 0.0);
  Rng rng(3);
  const CVec x = rng.cnormal_vector(8);
  const double max_corr = (p.dictionary.atoms.adjoint() * x).cwiseAbs().maxCoeff();
  REQUIRE(ht_denoise(x, 1.01 * max_corr, p).norm() == 0.0);
  REQUIRE(ht_jacobian(x, 1.01 * max_corr, p).norm() == 0.0);
}

TEST_CASE("on-grid atoms above the level pass through exactly at oversample 1") {
  const std::size_t m = 16;
  const HtParams p = make_ht_params(m, 1.0, 0.05, false);
  const CVec x = Complex(2.0, 1.0) * steering(3.0 / m, m);
  // A^H x = c e_3 exactly, then A (c e_3) = x
  const CVec y = ht_denoise(x, 0.5, p);
  REQUIRE((y - x).norm() < 1e-10);
  // multi-atom variant
  const CVec x2 = Complex(2.0, 0.0) * steering(1.0 / m, m) +
                  Complex(0.0, -3.0) * steering(9.0 / m, m);
  REQUIRE((ht_denoise(x2, 0.5, p) - x2).norm() < 1e-10);
}

TEST_CASE("ht is idempotent on the orthonormal grid") {
  const std::size_t m = 8;
  const HtParams p = make_ht_params(m, 1.0, 0.05, false);
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const CVec x = rng.cnormal_vector(m);
    const CVec once = ht_denoise(x, 0.3, p);
    const CVec twice = ht_denoise(once, 0.3, p);
    REQUIRE((twice - once).norm() < 1e-10 * std::max(1.0, once.norm()));
  }
}

TEST_CASE("ht with zero level is the identity for any oversample") {
  // dual-frame synthesis: (M / grid) A A^H = I
  Rng rng(9);
  for (double oversample : {1.0, 2.0, 4.0}) {
    const HtParams p = make_ht_params(8, oversample, 0.05, false);
    const CVec x = rng.cnormal_vector(8);
    REQUIRE((ht_denoise(x, 0.0, p) - x).norm() < 1e-12 * x.norm());
    REQUIRE((ht_jacobian(x, 0.0, p) - CMat::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("ht jacobian matches finite differences away from thresholds") {
  Rng rng(13);
  SECTION("hard gate") {
    const HtParams p = make_ht_params(6, 2.0, 0.0, false);
    for (int rep = 0; rep < 20; ++rep) {
      const CVec x = rng.cnormal_vector(6);
      const double level = 0.35;
      const CVec corr = p.dictionary.atoms.adjoint() * x;
      bool near_kink = false;
      for (Eigen::Index k = 0; k < corr.size(); ++k)
        near_kink |= std::abs(std::abs(corr[k]) - level) < 1e-4;
      if (near_kink) continue;
      const CMat jac = ht_jacobian(x, level, p);
      const CMat probe = oracle::fd_wirtinger_jacobian(
          [&](const CVec& v) { return ht_denoise(v, level, p); }, x, 1e-6);
      REQUIRE((jac - probe).cwiseAbs().maxCoeff() < 1e-4 * std::max(1.0, jac.cwiseAbs().maxCoeff()));
    }
  }
  SECTION("smoothed gate") {
    const HtParams p = make_ht_params(6, 2.0, 0.1, true);
    for (int rep = 0; rep < 20; ++rep) {
      const CVec x = rng.cnormal_vector(6);
      const double level = 0.35;
      const CMat jac = ht_jacobian(x, level, p);
      const CMat probe = oracle::fd_wirtinger_jacobian(
          [&](const CVec& v) { return ht_denoise(v, level, p); }, x, 1e-6);
      REQUIRE((jac - probe).cwiseAbs().maxCoeff() < 1e-4 * std::max(1.0, jac.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("unsmoothed ht jacobian is Hermitian PSD") {
  Rng rng(19);
  const HtParams p = make_ht_params(8, 2.0, 0.05, false);
  for (int rep = 0; rep < 20; ++rep) {
    const CVec x = rng.cnormal_vector(8);
    const CMat jac = ht_jacobian(x, 0.4, p);
    REQUIRE((jac - jac.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<CMat> eig(jac);
    REQUIRE(eig.eigenvalues().minCoeff() > -1e-12);
  }
}

TEST_CASE("smoothed gate converges to the hard gate") {
  const double level = 1.0;
  // test points bounded away from |v| = level
  const std::vector<double> mags = {0.2, 0.6, 0.85, 1.2, 1.7, 3.0};
  double prev = 1e9;
  for (double eps_fraction : {0.1, 0.01, 0.001}) {
    double worst = 0.0;
    for (double a : mags) {
      const double hard = a > level ? a : 0.0;
      const double smooth = a * detail::ht_gate(a, level, eps_fraction * level);
      worst = std::max(worst, std::abs(smooth - hard));
    }
    REQUIRE(worst < prev);
    prev = worst;
  }
  REQUIRE(prev < 1e-6);
}

TEST_CASE("ht batched jacobian sum equals the per-row sum") {
  Rng rng(43);
  HtDenoiser denoiser(6, 2.0, 0.1, true);
  const Eigen::Index n = 12;
  CMat inputs(n, 6);
  for (Eigen::Index i = 0; i < n; ++i) inputs.row(i) = rng.cnormal_vector(6).transpose();
  const double level = 0.4;
  CMat direct = CMat::Zero(6, 6);
  for (Eigen::Index i = 0; i < n; ++i)
    direct += denoiser.jacobian(inputs.row(i).transpose(), level);
  REQUIRE((denoiser.jacobian_sum(inputs, level) - direct).cwiseAbs().maxCoeff() <
          1e-10 * std::max(1.0, direct.norm()));
}
