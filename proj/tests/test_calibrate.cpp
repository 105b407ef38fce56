#include <cmath>
#include <random>

#include "doctest.h"
#include "fuseplan/calibrate.hpp"
#include "helpers.hpp"

using namespace fuseplan;
using namespace fuseplan::test;

namespace {

std::vector<Measurement> varied_rows() {
  // Varied tiles, halos and kernel counts so the design matrix has rank 4.
  std::vector<Measurement> rows;
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> tile_pick(1, 16);
  std::uniform_int_distribution<int> halo_pick(0, 3);
  std::uniform_int_distribution<int> n_pick(1, 6);
  std::uniform_int_distribution<int> blocks_pick(1, 64);
  for (int i = 0; i < 24; ++i) {
    Measurement m;
    m.n_kernels = n_pick(rng);
    m.blocks = blocks_pick(rng);
    m.tile = TileShape{tile_pick(rng), tile_pick(rng), tile_pick(rng)};
    m.halo = Halo::symmetric(halo_pick(rng), halo_pick(rng), halo_pick(rng));
    rows.push_back(m);
  }
  return rows;
}

}  // namespace

TEST_CASE("features line up with the cost-model terms") {
  Measurement m;
  m.n_kernels = 2;
  m.blocks = 3;
  m.tile = TileShape{4, 4, 2};
  m.halo = Halo{1, 1, 1, 1, 0, 1};
  auto f = cost_features(m);
  double out = 3.0 * 32.0;
  double in = 3.0 * (6.0 * 6.0 * 3.0);
  CHECK(f[0] == doctest::Approx(in + out));
  CHECK(f[1] == doctest::Approx(2.0 * out * (3.0 * 3.0 * 2.0 + 1.0)));
  CHECK(f[2] == doctest::Approx(2.0 * out));
  CHECK(f[3] == doctest::Approx(1.0));

  CostParams p{100.0, 1.0, 1.0, 10000.0};
  CHECK(cost_model_time(m, p) ==
        doctest::Approx(100.0 * f[0] + f[1] + f[2] + 10000.0));
  m.n_kernels = 0;
  CHECK_THROWS_AS(cost_features(m), Error);
}

TEST_CASE("calibration recovers exact synthetic parameters") {
  CostParams truth{73.5, 2.25, 0.4, 12345.0};
  std::vector<Measurement> rows = varied_rows();
  for (Measurement& m : rows) m.measured_time = cost_model_time(m, truth);
  CalibrationResult r = calibrate(rows);
  CHECK(r.params.gmem_cost_per_elem ==
        doctest::Approx(truth.gmem_cost_per_elem).epsilon(1e-9));
  CHECK(r.params.smem_cost_per_elem ==
        doctest::Approx(truth.smem_cost_per_elem).epsilon(1e-9));
  CHECK(r.params.compute_cost_unit ==
        doctest::Approx(truth.compute_cost_unit).epsilon(1e-9));
  CHECK(r.params.launch_overhead ==
        doctest::Approx(truth.launch_overhead).epsilon(1e-9));
  CHECK(r.residual_rms < 1e-6);
}

TEST_CASE("noisy timings keep parameters near truth, residual reported") {
  CostParams truth{100.0, 1.0, 1.0, 10000.0};
  std::vector<Measurement> rows = varied_rows();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> rel_noise(0.0, 0.01);
  for (Measurement& m : rows) {
    double t = cost_model_time(m, truth);
    m.measured_time = t * (1.0 + rel_noise(rng));
  }
  CalibrationResult r = calibrate(rows);
  CHECK(r.params.gmem_cost_per_elem ==
        doctest::Approx(truth.gmem_cost_per_elem).epsilon(0.1));
  CHECK(r.residual_rms > 0.0);
}

TEST_CASE("calibration input validation") {
  std::vector<Measurement> rows = varied_rows();
  rows.resize(3);
  CHECK_THROWS_AS(calibrate(rows), Error);

  // 24 copies of one configuration: rank 1, not 4.
  Measurement m;
  m.n_kernels = 2;
  m.blocks = 8;
  m.tile = TileShape{8, 8, 2};
  m.halo = Halo::symmetric(1, 1, 0);
  m.measured_time = 123.0;
  std::vector<Measurement> dup(24, m);
  try {
    calibrate(dup);
    FAIL("expected rank-deficiency rejection");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Input);
    CHECK(std::string(e.what()).find("rank deficient") != std::string::npos);
  }
}

TEST_CASE("measurements CSV parsing") {
  std::string csv =
      "n_kernels,blocks,tile_x,tile_y,tile_t,halo_x_lo,halo_x_hi,halo_y_lo,"
      "halo_y_hi,halo_t_lo,halo_t_hi,measured_time\n"
      "# a comment\n"
      "2,16,4,4,2,1,1,1,1,0,1,51234.5\n"
      "\n"
      "1,1,32,32,1,0,0,0,0,0,0,220000\n";
  auto rows = parse_measurements_csv(csv);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].n_kernels == 2);
  CHECK(rows[0].blocks == 16);
  CHECK(rows[0].tile == TileShape{4, 4, 2});
  CHECK(rows[0].halo == Halo{1, 1, 1, 1, 0, 1});
  CHECK(rows[0].measured_time == doctest::Approx(51234.5));
  CHECK(rows[1].tile == TileShape{32, 32, 1});

  CHECK_THROWS_AS(parse_measurements_csv(""), Error);
  CHECK_THROWS_AS(parse_measurements_csv("1,2,3\n"), Error);
  try {
    parse_measurements_csv("2,16,4,4,2,1,1,1,1,0,1,oops\n");
    FAIL("expected bad-number diagnostics");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    CHECK(std::string(e.what()).find("oops") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_measurements_csv("2,16,0,4,2,1,1,1,1,0,1,5\n"), Error);
}
