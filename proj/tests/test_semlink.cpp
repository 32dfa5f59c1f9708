#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "semsat/semlink.hpp"

using namespace semsat;

namespace {

ModeChoice choice(Mode m, int layer, int steps) {
  ModeChoice c;
  c.mode = m;
  c.layer = layer;
  c.denoise_steps = steps;
  return c;
}

}  // namespace

TEST_CASE("choice validation") {
  ModeProfile p;
  CHECK_NOTHROW(validate_choice(choice(Mode::BIT, 1, 0), p));
  CHECK_THROWS_AS(validate_choice(choice(Mode::BIT, 1, 1), p), InvalidChoice);
  CHECK_THROWS_AS(validate_choice(choice(Mode::BIT, 2, 0), p), InvalidChoice);
  CHECK_NOTHROW(validate_choice(choice(Mode::TEXT, 1, 1), p));
  CHECK_THROWS_AS(validate_choice(choice(Mode::TEXT, 1, 0), p), InvalidChoice);
  CHECK_THROWS_AS(validate_choice(choice(Mode::TEXT, 2, 4), p), InvalidChoice);
  CHECK_NOTHROW(validate_choice(choice(Mode::TEXT_IMAGE, 3, 32), p));
  CHECK_THROWS_AS(validate_choice(choice(Mode::TEXT_IMAGE, 0, 4), p), InvalidChoice);
  CHECK_THROWS_AS(validate_choice(choice(Mode::TEXT_IMAGE, 4, 4), p), InvalidChoice);
  CHECK_THROWS_AS(validate_choice(choice(Mode::TEXT_IMAGE, 2, 33), p), InvalidChoice);
}

TEST_CASE("payload table") {
  ModeProfile p;
  CHECK(payload_bits(choice(Mode::BIT, 1, 0), p) == 3.5e6);
  CHECK(payload_bits(choice(Mode::TEXT, 1, 8), p) == 8e3);
  CHECK(payload_bits(choice(Mode::TEXT_IMAGE, 1, 4), p) == 512e3);
  CHECK(payload_bits(choice(Mode::TEXT_IMAGE, 2, 4), p) == 256e3);
  CHECK(payload_bits(choice(Mode::TEXT_IMAGE, 3, 4), p) == 128e3);
}

TEST_CASE("delivered quality saturates toward the ceiling") {
  ModeProfile p;
  CHECK(quality_db(choice(Mode::BIT, 1, 0), p) == 40.0);
  // floor + (ceiling - floor)(1 - exp(-steps/tau)), independently computed
  CHECK(quality_db(choice(Mode::TEXT, 1, 8), p) ==
        doctest::Approx(13.79272335297134607043).epsilon(1e-12));
  CHECK(quality_db(choice(Mode::TEXT_IMAGE, 1, 4), p) ==
        doctest::Approx(16.29550944459786522234).epsilon(1e-12));

  // strictly rising in steps, never reaching the ceiling
  double prev = 0.0;
  for (int e = 1; e <= 32; ++e) {
    const double q = quality_db(choice(Mode::TEXT_IMAGE, 2, e), p);
    CHECK(q > prev);
    CHECK(q < p.ti_ceiling_db[1]);
    prev = q;
  }
}

TEST_CASE("compute cost is linear in denoising steps and zero for BIT") {
  ModeProfile p;
  const ComputeCost none = compute_cost(choice(Mode::BIT, 1, 0), p);
  CHECK(none.tx_gflop == 0.0);
  CHECK(none.rx_gflop == 0.0);
  for (int e : {1, 4, 16, 32}) {
    const ComputeCost c = compute_cost(choice(Mode::TEXT_IMAGE, 1, e), p);
    CHECK(c.tx_gflop == 810.0);
    CHECK(c.rx_gflop == e * 686.0);
    CHECK(c.total() == 810.0 + e * 686.0);
  }
  CHECK(p.reference_gflop() == 810.0 + 32 * 686.0);  // 22762
}

TEST_CASE("task delay composes compute, serialization, and propagation") {
  // 3.5 Mb at 173 Mb/s plus 2.5 ms of propagation, no compute
  const std::vector<HopSpec> one_hop = {{173e6, 0.0025}};
  CHECK(task_delay_s(3.5e6, one_hop, 0.0, 0.0, 0.0, 0.0) ==
        doctest::Approx(0.0227312138728323699422).epsilon(1e-12));

  // two hops accumulate, compute terms divide by the throughputs
  const std::vector<HopSpec> two_hops = {{1e6, 0.001}, {2e6, 0.002}};
  CHECK(task_delay_s(1e6, two_hops, 810.0, 10000.0, 2744.0, 5000.0) ==
        doctest::Approx(0.081 + (1.0 + 0.001) + (0.5 + 0.002) + 0.5488).epsilon(1e-12));

  CHECK_THROWS_AS(task_delay_s(1e6, {{0.0, 0.0}}, 0, 0, 0, 0), ZeroRateHop);
  CHECK_THROWS_AS(task_delay_s(1e6, one_hop, 810.0, 0.0, 0, 0), ZeroRateHop);
  CHECK_THROWS_AS(task_delay_s(1e6, one_hop, 0, 0, 686.0, 0.0), ZeroRateHop);
}

TEST_CASE("weight validation accepts the simplex only") {
  CHECK_NOTHROW(validate_weights({0.2, 0.5, 0.3}));
  CHECK_NOTHROW(validate_weights({1.0, 0.0, 0.0}));
  CHECK_THROWS_AS(validate_weights({0.5, 0.5, 0.5}), BadWeights);
  CHECK_THROWS_AS(validate_weights({-0.1, 0.6, 0.5}), BadWeights);
  CHECK_THROWS_AS(validate_weights({1.1, -0.05, -0.05}), BadWeights);
}

TEST_CASE("metric terms, frozen reference row") {
  // TEXT_IMAGE layer 2 with 8 steps over an 80 kb/s link with 750 km of
  // propagation; references D_max=10 s, theta_min=12 dB, theta_ref=40 dB,
  // F_ref=22762 GFLOP. All digits computed independently.
  ModeProfile p;
  const ModeChoice c = choice(Mode::TEXT_IMAGE, 2, 8);
  const std::vector<HopSpec> hop = {{80e3, 750e3 / 299792458.0}};
  const ComputeCost cc = compute_cost(c, p);

  TaskOutcome o;
  o.delay_s = task_delay_s(payload_bits(c, p), hop, cc.tx_gflop, 10000.0, cc.rx_gflop, 5000.0);
  o.quality_db = quality_db(c, p);
  o.compute_gflop = cc.total();
  o.completed = true;
  CHECK(o.delay_s == doctest::Approx(4.381101730713986140372).epsilon(1e-12));
  CHECK(o.quality_db == doctest::Approx(18.95332614711413446245).epsilon(1e-12));
  CHECK(o.compute_gflop == 6298.0);

  NormRefs refs;
  refs.d_max_s = 10.0;
  refs.theta_min_db = 12.0;
  const SemTerms t = sem_terms(o, refs);
  CHECK(t.latency == doctest::Approx(0.5618898269286013859628).epsilon(1e-12));
  CHECK(t.quality == doctest::Approx(0.2483330766826476593732).epsilon(1e-12));
  CHECK(t.compute == doctest::Approx(0.2766892188735611984887).epsilon(1e-12));

  const SemWeights equal = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  CHECK(sem_value(o, equal, refs) ==
        doctest::Approx(0.1778445615792292822824).epsilon(1e-12));
}

TEST_CASE("metric terms clamp at the extremes") {
  NormRefs refs;
  refs.d_max_s = 10.0;
  refs.theta_min_db = 12.0;

  TaskOutcome late;
  late.delay_s = 25.0;  // far past the deadline
  late.quality_db = 45.0;  // above the bit reference
  late.compute_gflop = 50000.0;  // above F_ref
  const SemTerms t = sem_terms(late, refs);
  CHECK(t.latency == 0.0);
  CHECK(t.quality == 1.0);
  CHECK(t.compute == 1.0);

  TaskOutcome poor;
  poor.delay_s = 0.0;
  poor.quality_db = 5.0;  // below theta_min
  poor.compute_gflop = 0.0;
  const SemTerms u = sem_terms(poor, refs);
  CHECK(u.latency == 1.0);
  CHECK(u.quality == 0.0);
  CHECK(u.compute == 0.0);

  NormRefs bad;
  bad.d_max_s = 0.0;
  CHECK_THROWS_AS(sem_terms(poor, bad), BadConfig);
}

TEST_CASE("the metric is affine in the weights for a fixed outcome") {
  ModeProfile p;
  NormRefs refs;
  refs.d_max_s = 8.0;
  refs.theta_min_db = 14.0;
  TaskOutcome o;
  o.delay_s = 2.5;
  o.quality_db = 19.0;
  o.compute_gflop = 4000.0;
  for (double td : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const SemWeights w = {td, (1.0 - td) / 2.0, (1.0 - td) / 2.0};
    const SemTerms t = sem_terms(o, refs);
    const double expect = td * t.latency + (1.0 - td) / 2.0 * (t.quality - t.compute);
    CHECK(sem_value(o, w, refs) == doctest::Approx(expect).epsilon(1e-15));
  }
}
