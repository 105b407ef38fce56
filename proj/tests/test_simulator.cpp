#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "fuseplan/simulator.hpp"
#include "helpers.hpp"

using namespace fuseplan;
using namespace fuseplan::test;

namespace {

VideoData constant_video(const VideoDims& dims, float value) {
  VideoData v = VideoData::zeros(dims);
  for (float& f : v.data) f = value;
  return v;
}

}  // namespace

TEST_CASE("per-element operator semantics") {
  VideoDims d;
  d.width = d.height = 8;
  d.frames = 2;

  SUBCASE("threshold splits at the cutoff") {
    VideoData in = constant_video(d, 100.0f);
    in.at(3, 3, 0, 0) = 200.0f;
    KernelDesc k = make_kernel(1, "threshold", {{"th", 128.0}});
    VideoData out = apply_stencil(k, in);
    CHECK(out.at(3, 3, 0, 0) == 255.0f);
    CHECK(out.at(2, 3, 0, 0) == 0.0f);
  }

  SUBCASE("gaussian preserves a constant field") {
    VideoData in = constant_video(d, 37.0f);
    KernelDesc k = make_kernel(1, "gaussian", {{"radius", 2}, {"sigma", 1.0}});
    VideoData out = apply_stencil(k, in);
    for (float f : out.data) CHECK(f == doctest::Approx(37.0f).epsilon(1e-5));
  }

  SUBCASE("gradient of a constant field is zero") {
    VideoData in = constant_video(d, 42.0f);
    KernelDesc k = make_kernel(1, "gradient");
    VideoData out = apply_stencil(k, in);
    for (float f : out.data) CHECK(f == 0.0f);
  }

  SUBCASE("luma conversion on white") {
    VideoDims d4 = d;
    d4.channels = 4;
    VideoData in = constant_video(d4, 255.0f);
    KernelDesc k = make_kernel(1, "rgba2gray");
    VideoData out = apply_stencil(k, in);
    CHECK(out.dims.channels == 1);
    CHECK(out.at(0, 0, 0, 0) == doctest::Approx(255.0f).epsilon(1e-4));
  }

  SUBCASE("iir recurrence against a hand-rolled scan") {
    VideoData in = random_video(d, 99);
    KernelDesc k = make_kernel(1, "iir_temporal", {{"alpha", 0.25}});
    VideoData out = apply_stencil(k, in);
    for (int y = 0; y < d.height; ++y)
      for (int x = 0; x < d.width; ++x) {
        float prev = in.at(x, y, 0, 0);
        CHECK(out.at(x, y, 0, 0) == prev);
        for (int t = 1; t < d.frames; ++t) {
          prev = 0.25f * in.at(x, y, t, 0) + 0.75f * prev;
          CHECK(out.at(x, y, t, 0) == prev);
        }
      }
  }

  SUBCASE("box mean uses clamp-to-edge at the border") {
    VideoData in = random_video(d, 5);
    KernelDesc k = make_kernel(
        1, "box_mean", {{"radius_x", 1}, {"radius_y", 1}, {"radius_t", 0}});
    VideoData out = apply_stencil(k, in);
    double acc = 0.0;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) acc += in.sample(dx, dy, 0, 0);
    CHECK(out.at(0, 0, 0, 0) == doctest::Approx(acc / 9.0));
  }
}

TEST_CASE("gaussian conserves mass away from the border") {
  VideoDims d;
  d.width = d.height = 16;
  d.frames = 1;
  VideoData in = VideoData::zeros(d);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> dist(0.0f, 10.0f);
  // Nonzero only in the interior so edge clamping never replicates mass.
  for (int y = 4; y < 12; ++y)
    for (int x = 4; x < 12; ++x) in.at(x, y, 0, 0) = dist(rng);
  KernelDesc k = make_kernel(1, "gaussian", {{"radius", 2}, {"sigma", 1.0}});
  VideoData out = apply_stencil(k, in);
  double in_sum = std::accumulate(in.data.begin(), in.data.end(), 0.0);
  double out_sum = std::accumulate(out.data.begin(), out.data.end(), 0.0);
  CHECK(out_sum == doctest::Approx(in_sum).epsilon(1e-4));
}

TEST_CASE("sequential execution counts whole-frame traffic per kernel") {
  VideoDims v;
  v.width = v.height = 16;
  v.frames = 4;
  Pipeline p = make_pipeline(v, {{"identity", {}},
                                 {"identity", {}},
                                 {"identity", {}}});
  VideoData in = random_video(v, 17);
  SequentialResult r = run_sequential(p, in);
  std::int64_t pixels = v.pixel_volume();
  CHECK(r.executed_kernels == 3);
  CHECK(r.traffic.gmem_reads == 3 * pixels);
  CHECK(r.traffic.gmem_writes == 3 * pixels);
  CHECK(r.stage_outputs.size() == 3);
  for (std::size_t i = 0; i < in.data.size(); ++i)
    CHECK(r.final_output.data[i] == in.data[i]);

  // Aggregation stages are skipped (passthrough mask semantics).
  Pipeline pk = make_pipeline(v, {{"identity", {}}, {"kalman_track", {}}});
  SequentialResult rk = run_sequential(pk, in);
  CHECK(rk.executed_kernels == 1);
}

TEST_CASE("video codec round-trips both element types") {
  VideoDims d;
  d.width = 7;
  d.height = 5;
  d.frames = 3;
  d.channels = 3;
  VideoData v = random_video(d, 123);

  SUBCASE("f32") {
    VideoData back = decode_video(encode_video(v));
    CHECK(back.dims.width == 7);
    CHECK(back.dims.channels == 3);
    CHECK(back.elem_type == ElemType::F32);
    REQUIRE(back.data.size() == v.data.size());
    for (std::size_t i = 0; i < v.data.size(); ++i)
      CHECK(back.data[i] == v.data[i]);
  }

  SUBCASE("u8") {
    v.elem_type = ElemType::U8;
    for (float& f : v.data) f = float(int(f) & 0xff);
    VideoData back = decode_video(encode_video(v));
    CHECK(back.elem_type == ElemType::U8);
    for (std::size_t i = 0; i < v.data.size(); ++i)
      CHECK(back.data[i] == v.data[i]);
  }

  SUBCASE("decode rejects garbage") {
    std::string bytes = encode_video(v);
    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_video(bad_magic), Error);
    CHECK_THROWS_AS(decode_video(bytes.substr(0, bytes.size() / 2)), Error);
    CHECK_THROWS_AS(decode_video(""), Error);
  }
}

TEST_CASE("output comparison classifies diffs against the tile grid") {
  VideoDims d;
  d.width = d.height = 8;
  d.frames = 1;
  VideoData a = constant_video(d, 1.0f);
  VideoData b = a;
  b.at(0, 0, 0, 0) = 2.0f;  // on a tile edge
  b.at(1, 1, 0, 0) = 3.5f;  // interior of tile (0,0)
  b.at(3, 2, 0, 0) = 1.5f;  // x touches the tile's right edge band

  TileShape grid{4, 4, 1};
  Halo erode = Halo::symmetric(1, 1, 0);
  DiffReport r = compare_outputs(a, b, erode, &grid);
  CHECK(r.diff_count == 3);
  CHECK(r.max_abs_diff == doctest::Approx(2.5f));
  CHECK(r.interior_diffs == 1);
  CHECK(r.boundary_diffs == 2);

  // Zero erode, whole-video grid: everything is interior.
  r = compare_outputs(a, b, Halo{});
  CHECK(r.interior_diffs == 3);
  CHECK_THROWS_AS(compare_outputs(a, random_video(VideoDims{4, 4, 1, 1, 1}, 1),
                                  Halo{}),
                  Error);
}

TEST_CASE("tiled fused traffic matches the analytic transfer counts") {
  VideoDims v;
  v.width = v.height = 16;
  v.frames = 4;
  Pipeline p = make_pipeline(
      v, {{"scale_offset", StencilParams{{"scale", 2.0}, {"offset", 1.0}}},
          {"gaussian", StencilParams{{"radius", 1}, {"sigma", 1.0}}}});
  Device d = make_device();
  VideoData in = random_video(v, 7);

  SUBCASE("fused group with divisible tile") {
    PlanOptions opt;
    opt.forced_partition = {{1, 2}};
    opt.forced_tile = TileShape{4, 4, 2};
    FusionPlan fp = plan(p, d, opt);
    REQUIRE(fp.groups.size() == 1);
    CHECK(fp.groups[0].tiled);
    TiledResult r = run_tiled(fp, p, in);
    CHECK(r.traffic.gmem_total() == fp.groups[0].transfer_exact);
    CHECK(r.traffic.gmem_total() ==
          transfer_fused(fp.groups[0].blocks, TileShape{4, 4, 2},
                         fp.groups[0].halo, TransferVariant::ExactVolume));
  }

  SUBCASE("all singletons reproduce the serial count") {
    PlanOptions opt;
    opt.forced_partition = {{1, 1}, {2, 2}};
    FusionPlan fp = plan(p, d, opt);
    TiledResult r = run_tiled(fp, p, in);
    CHECK(r.traffic.gmem_total() ==
          transfer_serial(2, 1, TileShape{v.width, v.height, v.frames}));
    // Singleton execution is the sequential oracle itself.
    SequentialResult s = run_sequential(p, in);
    for (std::size_t i = 0; i < s.final_output.data.size(); ++i)
      CHECK(r.final_output.data[i] == s.final_output.data[i]);
  }
}

TEST_CASE("cumulative-halo tiled execution is bit-exact on random chains") {
  std::mt19937_64 rng(2024);
  Device d = make_device();
  for (int trial = 0; trial < 25; ++trial) {
    Pipeline p = random_chain(rng);
    VideoData in = random_video(p.video, 1000 + trial);
    SequentialResult s = run_sequential(p, in);
    FusionPlan fp = plan(p, d);  // defaults: cumulative, exact
    TiledResult r = run_tiled(fp, p, in);
    REQUIRE(r.final_output.data.size() == s.final_output.data.size());
    std::int64_t mismatches = 0;
    for (std::size_t i = 0; i < s.final_output.data.size(); ++i)
      if (r.final_output.data[i] != s.final_output.data[i]) ++mismatches;
    CHECK(mismatches == 0);
  }
}

TEST_CASE("paper-max halo composition diverges only near tile boundaries") {
  VideoDims v;
  v.width = v.height = 32;
  v.frames = 4;
  Pipeline p = make_pipeline(
      v, {{"gaussian", StencilParams{{"radius", 1}, {"sigma", 1.0}}},
          {"gradient", {}}});
  Device d = make_device();
  VideoData in = random_video(v, 55);
  SequentialResult s = run_sequential(p, in);

  PlanOptions opt;
  opt.halo_mode = HaloMode::PaperMax;
  opt.forced_partition = {{1, 2}};
  opt.forced_tile = TileShape{8, 8, 4};  // internal boundaries in x and y
  FusionPlan fp = plan(p, d, opt);
  REQUIRE(fp.groups.size() == 1);
  CHECK(fp.groups[0].halo == Halo::symmetric(1, 1, 0));  // max, not sum
  TiledResult r = run_tiled(fp, p, in);

  // Erode by the per-side deficit (cumulative minus paper-max).
  Halo cum = fused_halo(p.kernels, HaloMode::Cumulative);
  Halo erode{cum.x_lo - fp.groups[0].halo.x_lo,
             cum.x_hi - fp.groups[0].halo.x_hi,
             cum.y_lo - fp.groups[0].halo.y_lo,
             cum.y_hi - fp.groups[0].halo.y_hi,
             cum.t_lo - fp.groups[0].halo.t_lo,
             cum.t_hi - fp.groups[0].halo.t_hi};
  DiffReport diff =
      compare_outputs(s.final_output, r.final_output, erode, &fp.groups[0].tile);
  CHECK(diff.interior_diffs == 0);
  CHECK(diff.diff_count > 0);  // the under-staged band really does diverge
}
