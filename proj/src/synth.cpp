#include <algorithm>
#include <cmath>
#include <random>

#include "fuseplan/tracking.hpp"

namespace fuseplan {

namespace {

// Triangle-wave reflection of u into [0, limit].
double reflect(double u, double limit) {
  if (limit <= 0.0) return 0.0;
  double period = 2.0 * limit;
  double m = std::fmod(u, period);
  if (m < 0.0) m += period;
  return m <= limit ? m : period - m;
}

// 4x4 supersampled disc coverage of the pixel centered at (px, py).
double disc_coverage(int px, int py, double cx, double cy, double radius) {
  int hit = 0;
  for (int sy = 0; sy < 4; ++sy)
    for (int sx = 0; sx < 4; ++sx) {
      double x = px + (sx + 0.5) / 4.0 - 0.5;
      double y = py + (sy + 0.5) / 4.0 - 0.5;
      double dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy <= radius * radius) ++hit;
    }
  return hit / 16.0;
}

}  // namespace

SyntheticScene synth_video(const SyntheticSceneSpec& spec) {
  spec.dims.validate();
  for (const MarkerSpec& m : spec.markers) {
    require(m.start_x >= 0 && m.start_x <= spec.dims.width - 1 &&
                m.start_y >= 0 && m.start_y <= spec.dims.height - 1,
            ErrorKind::Input, "marker start position outside the frame");
    require(m.radius > 0, ErrorKind::Input, "marker radius must be > 0");
  }

  SyntheticScene scene;
  scene.video = VideoData::zeros(spec.dims, ElemType::U8);
  scene.truth.centers.assign(spec.markers.size(), {});
  for (auto& c : scene.truth.centers) c.resize(std::size_t(spec.dims.frames));

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);

  for (int t = 0; t < spec.dims.frames; ++t) {
    std::vector<std::pair<double, double>> centers(spec.markers.size());
    for (std::size_t i = 0; i < spec.markers.size(); ++i) {
      const MarkerSpec& m = spec.markers[i];
      centers[i] = {reflect(m.start_x + m.vx * t, spec.dims.width - 1.0),
                    reflect(m.start_y + m.vy * t, spec.dims.height - 1.0)};
      scene.truth.centers[i][std::size_t(t)] = centers[i];
    }
    for (int y = 0; y < spec.dims.height; ++y)
      for (int x = 0; x < spec.dims.width; ++x) {
        double v = spec.background;
        for (std::size_t i = 0; i < spec.markers.size(); ++i) {
          double cov = disc_coverage(x, y, centers[i].first, centers[i].second,
                                     spec.markers[i].radius);
          v = std::max(v, spec.background +
                              cov * (spec.markers[i].intensity -
                                     spec.background));
        }
        for (int c = 0; c < spec.dims.channels; ++c) {
          double out = v;
          if (spec.noise_sigma > 0.0) out += noise(rng);
          scene.video.at(x, y, t, c) = float(std::clamp(out, 0.0, 255.0));
        }
      }
  }
  return scene;
}

}  // namespace fuseplan
