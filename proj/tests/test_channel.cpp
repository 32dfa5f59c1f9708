#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "semsat/channel.hpp"
#include "semsat/rng.hpp"

using namespace semsat;

namespace {

// mixed tolerance: relative away from zeros, absolute near them
void check_j0(double x, double ref, double tol) {
  const double err = std::abs(bessel_j0(x) - ref);
  CHECK_MESSAGE(err <= tol * std::max(1.0, std::abs(ref)),
                "x=", x, " err=", err);
}

}  // namespace

TEST_CASE("J0 against an independently computed table") {
  // 40-digit arbitrary precision reference values
  check_j0(0.0, 1.0, 1e-15);
  check_j0(0.5, 0.9384698072408129042284, 1e-10);
  check_j0(1.0, 0.7651976865579665514497, 1e-10);
  check_j0(2.0, 0.2238907791412356680518, 1e-10);
  check_j0(2.4048255576957727, 3.562474845007141885919e-17, 1e-10);  // first zero
  check_j0(3.8317, -0.4027593956953751157284, 1e-10);
  check_j0(5.0, -0.1775967713143383043474, 1e-10);
  check_j0(7.5, 0.266339657880378396866, 1e-10);
  check_j0(8.0, 0.1716508071375539060909, 1e-10);
  check_j0(10.0, -0.2459357644513483351978, 1e-10);
  check_j0(11.791534439014281614, 5.973173644211582206238e-20, 1e-10);  // fourth zero
  check_j0(12.0, 0.04768931079683353662381, 1e-10);
  check_j0(13.5, 0.2149891658804008152586, 1e-10);
  check_j0(15.0, -0.01422447282678077323386, 1e-10);
  check_j0(16.7, -0.1913435295251891399245, 1e-10);
  check_j0(18.0, -0.01335580572198411088489, 1e-10);
  check_j0(19.5, 0.1788538270401728929681, 1e-10);
  check_j0(20.0, 0.1670246643405831547273, 1e-10);
  // far tail, the regime of LEO Doppler x delay products
  check_j0(8168.14, 0.006236858507797436938195, 1e-9);
}

TEST_CASE("J0 matches the standard library on random draws") {
  RandomSource rng(7);
  for (int i = 0; i < 300; ++i) {
    const double x = rng.uniform(0.0, 20.0);
    check_j0(x, std::cyl_bessel_j(0.0, x), 1e-10);
  }
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(20.0, 2000.0);
    check_j0(x, std::cyl_bessel_j(0.0, x), 1e-9);
  }
  SUBCASE("even function") {
    CHECK(bessel_j0(-3.25) == bessel_j0(3.25));
  }
}

TEST_CASE("CSI correlation is J0 of the Doppler-delay product") {
  CHECK(csi_correlation(0.0, 0.5) == 1.0);
  CHECK(csi_correlation(123.0, 0.0) == 1.0);
  CHECK(csi_correlation(1.0, 0.01) == doctest::Approx(0.9990132830559150410165).epsilon(1e-12));
  CHECK(csi_correlation(0.05, 1.0) == doctest::Approx(0.9754777740752495011874).epsilon(1e-12));
  CHECK(csi_correlation(10.0, 0.01) == doctest::Approx(0.903712642092466312163).epsilon(1e-12));
}

TEST_CASE("free-space satellite channel magnitude and phase") {
  SatLinkParams p;  // 42 dB gain, 15 mm wavelength
  const Complex h = sat_channel(750e3, p);
  CHECK(std::abs(h) == doctest::Approx(2.003642022710415835323e-7).epsilon(1e-12));
  CHECK(h.imag() == 0.0);

  p.phase_rad = 0.7;
  const Complex hp = sat_channel(750e3, p);
  CHECK(std::arg(hp) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(std::abs(hp) == doctest::Approx(std::abs(h)).epsilon(1e-15));

  CHECK_THROWS_AS(sat_channel(0.0, p), NonPositiveDistance);
}

TEST_CASE("Shannon capacity oracle and basic shape") {
  SatLinkParams p;
  const Complex h = sat_channel(750e3, p);
  CHECK(capacity_bps(h, 1.0, 20e6, 1e-16) ==
        doctest::Approx(173053898.1769046625836).epsilon(1e-12));
  CHECK(capacity_bps(h, 0.0, 20e6, 1e-16) == 0.0);
  // strictly increasing in power, linear in bandwidth
  CHECK(capacity_bps(h, 2.0, 20e6, 1e-16) > capacity_bps(h, 1.0, 20e6, 1e-16));
  CHECK(capacity_bps(h, 1.0, 40e6, 1e-16) ==
        doctest::Approx(2.0 * capacity_bps(h, 1.0, 20e6, 1e-16)).epsilon(1e-15));
}

TEST_CASE("inter-satellite link capacity oracle") {
  IslParams p;
  CHECK(isl_capacity_bps(400e3, 1.0, p) ==
        doctest::Approx(18832465.7587217519622).epsilon(1e-12));
  // free-space spreading: rate falls with distance
  CHECK(isl_capacity_bps(800e3, 1.0, p) < isl_capacity_bps(400e3, 1.0, p));
  CHECK_THROWS_AS(isl_capacity_bps(-1.0, 1.0, p), NonPositiveDistance);
}

TEST_CASE("outdated CSI is exact at full correlation") {
  SatLinkParams p;
  p.correlation = 1.0;
  RandomSource rng(11);
  const Complex h = sat_channel(900e3, p);
  const Complex hbar = apply_outdated_csi(h, p, rng);
  CHECK(hbar.real() == h.real());
  CHECK(hbar.imag() == h.imag());
}

TEST_CASE("outdated CSI consumes one draw regardless of correlation") {
  SatLinkParams exact_p;
  exact_p.correlation = 1.0;
  SatLinkParams stale_p;
  stale_p.correlation = 0.4;
  const Complex h = sat_channel(900e3, exact_p);

  RandomSource a(123), b(123), c(123);
  apply_outdated_csi(h, exact_p, a);
  apply_outdated_csi(h, stale_p, b);
  c.cgauss_unit();
  const double ua = a.uniform(), ub = b.uniform(), uc = c.uniform();
  CHECK(ua == ub);
  CHECK(ub == uc);
}

TEST_CASE("outdated CSI preserves ensemble power") {
  SatLinkParams p;
  p.correlation = 0.6;
  const Complex h = sat_channel(750e3, p);
  const double target = std::norm(h);
  RandomSource rng(2024);
  const int n = 200000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += std::norm(apply_outdated_csi(h, p, rng));
  }
  CHECK(acc / n == doctest::Approx(target).epsilon(0.02));
}

TEST_CASE("outdated CSI estimate decorrelates as xi drops") {
  SatLinkParams p;
  const Complex h = sat_channel(750e3, p);
  RandomSource rng(5);
  for (double xi : {0.9, 0.5, 0.1}) {
    p.correlation = xi;
    // empirical correlation Re E[hbar conj(h)] / |h|^2 should track xi
    double acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      acc += (apply_outdated_csi(h, p, rng) * std::conj(h)).real();
    }
    CHECK(acc / (n * std::norm(h)) == doctest::Approx(xi).epsilon(0.05));
  }
}

TEST_CASE("Rician fading mean power splits along the two exponents") {
  FadingParams p;  // kappa 10, exponents 2.2 / 2.5
  const double d = 400.0;
  RandomSource rng(31);
  const int n = 200000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += std::norm(sample_uav_user_channel(d, p, rng));
  }
  const double expected = (p.rician_kappa / (p.rician_kappa + 1.0)) *
                              std::pow(d, -p.los_exponent) +
                          (1.0 / (p.rician_kappa + 1.0)) * std::pow(d, -p.nlos_exponent);
  CHECK(acc / n == doctest::Approx(expected).epsilon(0.02));
  CHECK_THROWS_AS(sample_uav_user_channel(0.0, p, rng), NonPositiveDistance);
}

TEST_CASE("pure line of sight at infinite kappa is deterministic") {
  FadingParams p;
  p.rician_kappa = std::numeric_limits<double>::infinity();
  p.los_phase_rad = 0.3;
  RandomSource rng(1);
  const Complex h1 = sample_uav_user_channel(250.0, p, rng);
  const Complex h2 = sample_uav_user_channel(250.0, p, rng);
  CHECK(h1 == h2);
  CHECK(std::abs(h1) == doctest::Approx(std::pow(250.0, -1.1)).epsilon(1e-12));
  CHECK(std::arg(h1) == doctest::Approx(0.3).epsilon(1e-12));
}
