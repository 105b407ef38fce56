#include <cmath>

#include "doctest.h"
#include "fuseplan/simulator.hpp"
#include "fuseplan/tracking.hpp"
#include "helpers.hpp"

using namespace fuseplan;
using namespace fuseplan::test;

namespace {

SyntheticSceneSpec basic_spec() {
  SyntheticSceneSpec spec;
  spec.dims.width = 64;
  spec.dims.height = 64;
  spec.dims.frames = 8;
  spec.dims.channels = 1;
  return spec;
}

VideoData mask_of(const VideoData& video) {
  KernelDesc th = make_kernel(1, "threshold", {{"th", 128.0}});
  return apply_stencil(th, video);
}

// Determinant of the leading k x k minor of a row-major 4x4 matrix.
double leading_minor_det(const std::array<double, 16>& m, int k) {
  double a[4][4];
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) a[i][j] = m[std::size_t(i) * 4 + j];
  double det = 1.0;
  for (int col = 0; col < k; ++col) {
    int piv = col;
    for (int r = col + 1; r < k; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (a[piv][col] == 0.0) return 0.0;
    if (piv != col) {
      for (int j = 0; j < k; ++j) std::swap(a[piv][j], a[col][j]);
      det = -det;
    }
    det *= a[col][col];
    for (int r = col + 1; r < k; ++r) {
      double f = a[r][col] / a[col][col];
      for (int j = col; j < k; ++j) a[r][j] -= f * a[col][j];
    }
  }
  return det;
}

}  // namespace

TEST_CASE("synthetic scenes are deterministic in the seed") {
  SyntheticSceneSpec spec = basic_spec();
  spec.markers.push_back(MarkerSpec{20.0, 20.0, 0.5, 0.25, 3.0, 255.0});
  spec.noise_sigma = 8.0;
  spec.seed = 42;
  SyntheticScene a = synth_video(spec);
  SyntheticScene b = synth_video(spec);
  CHECK(a.video.data == b.video.data);
  spec.seed = 43;
  SyntheticScene c = synth_video(spec);
  CHECK(a.video.data != c.video.data);
  CHECK(a.video.elem_type == ElemType::U8);
  REQUIRE(a.truth.centers.size() == 1);
  CHECK(a.truth.centers[0].size() == 8);
  CHECK(a.truth.centers[0][4].first == doctest::Approx(22.0));
  CHECK(a.truth.centers[0][4].second == doctest::Approx(21.0));
}

TEST_CASE("marker discs render as filled blobs with soft rims") {
  SyntheticSceneSpec spec = basic_spec();
  spec.dims.frames = 1;
  spec.markers.push_back(MarkerSpec{10.0, 10.0, 0.0, 0.0, 3.0, 255.0});
  SyntheticScene s = synth_video(spec);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      double dist = std::hypot(x - 10.0, y - 10.0);
      float v = s.video.at(x, y, 0, 0);
      if (dist <= 2.0) CHECK(v == 255.0f);   // fully covered
      if (dist >= 4.5) CHECK(v == 0.0f);     // fully outside
    }
}

TEST_CASE("markers reflect at the frame borders") {
  SyntheticSceneSpec spec = basic_spec();
  spec.dims.frames = 200;
  spec.markers.push_back(MarkerSpec{10.0, 10.0, 1.0, 0.0, 3.0, 255.0});
  SyntheticScene s = synth_video(spec);
  for (int t = 0; t < 200; ++t) {
    auto [cx, cy] = s.truth.centers[0][std::size_t(t)];
    CHECK(cx >= 0.0);
    CHECK(cx <= 63.0);
    CHECK(cy == doctest::Approx(10.0));
  }
  // 10 + 1*60 = 70 -> reflected to 2*63 - 70 = 56.
  CHECK(s.truth.centers[0][60].first == doctest::Approx(56.0));
}

TEST_CASE("synthesis rejects bad marker specs") {
  SyntheticSceneSpec spec = basic_spec();
  spec.markers.push_back(MarkerSpec{100.0, 10.0, 0.0, 0.0, 3.0, 255.0});
  CHECK_THROWS_AS(synth_video(spec), Error);
  spec.markers[0] = MarkerSpec{10.0, 10.0, 0.0, 0.0, 0.0, 255.0};
  CHECK_THROWS_AS(synth_video(spec), Error);
}

TEST_CASE("tracking a static marker converges onto its center") {
  SyntheticSceneSpec spec = basic_spec();
  spec.dims.frames = 30;
  spec.markers.push_back(MarkerSpec{31.0, 24.0, 0.0, 0.0, 3.0, 255.0});
  VideoData mask = mask_of(synth_video(spec).video);
  // ROI deliberately off-center; the first measurement snaps it on.
  auto trajs = track_features(mask, {Rect{25, 18, 15, 15}});
  REQUIRE(trajs.size() == 1);
  const TrajectoryPoint& last = trajs[0].points.back();
  CHECK(last.measured);
  CHECK(std::abs(last.est_x - 31.0) < 0.5);
  CHECK(std::abs(last.est_y - 24.0) < 0.5);
  CHECK(std::abs(last.est_vx) < 0.1);
  CHECK(std::abs(last.est_vy) < 0.1);
}

TEST_CASE("constant-velocity marker: velocity estimate locks in") {
  SyntheticSceneSpec spec = basic_spec();
  spec.dims.frames = 55;
  spec.markers.push_back(MarkerSpec{5.0, 32.0, 1.0, 0.0, 3.0, 255.0});
  VideoData mask = mask_of(synth_video(spec).video);
  auto trajs = track_features(mask, {Rect{0, 26, 13, 13}});
  const auto& pts = trajs[0].points;
  REQUIRE(pts.size() == 55);
  CHECK(std::abs(pts[50].est_vx - 1.0) < 0.1);
  CHECK(std::abs(pts[50].est_vy) < 0.1);
  CHECK(std::abs(pts[50].est_x - 55.0) < 1.0);
}

TEST_CASE("missing measurements coast on the prediction") {
  VideoDims d;
  d.width = d.height = 32;
  d.frames = 10;
  VideoData mask = VideoData::zeros(d);
  auto paint = [&](int t) {
    for (int y = 14; y <= 16; ++y)
      for (int x = 14; x <= 16; ++x) mask.at(x, y, t, 0) = 255.0f;
  };
  for (int t = 0; t < 10; ++t)
    if (t < 4 || t > 6) paint(t);

  auto trajs = track_features(mask, {Rect{10, 10, 11, 11}});
  const auto& pts = trajs[0].points;
  CHECK(pts[3].measured);
  CHECK_FALSE(pts[4].measured);
  CHECK_FALSE(pts[6].measured);
  CHECK(pts[7].measured);
  // Prediction holds the position (static target) while covariance grows.
  CHECK(std::abs(pts[6].est_x - 15.0) < 0.5);
  auto trace = [](const std::array<double, 16>& c) {
    return c[0] + c[5] + c[10] + c[15];
  };
  CHECK(trace(pts[5].covariance) > trace(pts[4].covariance));
  CHECK(trace(pts[6].covariance) > trace(pts[5].covariance));
  CHECK(trace(pts[7].covariance) < trace(pts[6].covariance));
}

TEST_CASE("covariance stays symmetric positive semidefinite") {
  SyntheticSceneSpec spec = basic_spec();
  spec.dims.frames = 120;
  spec.markers.push_back(MarkerSpec{8.0, 40.0, 0.7, -0.3, 3.0, 255.0});
  VideoData mask = mask_of(synth_video(spec).video);
  auto trajs = track_features(mask, {Rect{2, 34, 13, 13}});
  for (const TrajectoryPoint& p : trajs[0].points) {
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        CHECK(p.covariance[std::size_t(i) * 4 + j] ==
              doctest::Approx(p.covariance[std::size_t(j) * 4 + i])
                  .epsilon(1e-9));
    for (int k = 1; k <= 4; ++k)
      CHECK(leading_minor_det(p.covariance, k) >= -1e-9);
  }
}

TEST_CASE("trajectory CSV layout") {
  VideoDims d;
  d.width = d.height = 16;
  d.frames = 2;
  VideoData mask = VideoData::zeros(d);
  mask.at(8, 8, 0, 0) = 255.0f;  // measured only at frame 0
  auto trajs = track_features(mask, {Rect{5, 5, 7, 7}});
  std::string csv = trajectories_to_csv(trajs);
  CHECK(csv.rfind("frame,marker_id,meas_x,meas_y,est_x,est_y,est_vx,est_vy\n",
                  0) == 0);
  CHECK(csv.find("0,1,8,8,8,8,0,0\n") != std::string::npos);
  CHECK(csv.find("1,1,,,") != std::string::npos);  // empty measurement fields
}

TEST_CASE("tracker input validation") {
  VideoDims d;
  d.width = d.height = 8;
  d.frames = 1;
  d.channels = 3;
  VideoData three_ch = VideoData::zeros(d);
  CHECK_THROWS_AS(track_features(three_ch, {Rect{0, 0, 4, 4}}), Error);
  d.channels = 1;
  VideoData ok = VideoData::zeros(d);
  CHECK_THROWS_AS(track_features(ok, {}), Error);
  CHECK_THROWS_AS(track_features(ok, {Rect{0, 0, 0, 4}}), Error);
}
