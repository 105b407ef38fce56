// Synthetic marker scenes and the constant-velocity Kalman tracking stage.
#pragma once

#include <array>
#include <optional>

#include "fuseplan/video.hpp"

namespace fuseplan {

struct MarkerSpec {
  double start_x = 0.0, start_y = 0.0;
  double vx = 0.0, vy = 0.0;  // px/frame; markers reflect at frame borders
  double radius = 3.0;
  double intensity = 255.0;
};

struct SyntheticSceneSpec {
  VideoDims dims;
  std::vector<MarkerSpec> markers;
  double noise_sigma = 0.0;  // on the 0..255 scale
  double background = 0.0;
  std::uint64_t seed = 0;
};

struct GroundTruth {
  // [marker][frame] -> exact center
  std::vector<std::vector<std::pair<double, double>>> centers;
};

struct SyntheticScene {
  VideoData video;
  GroundTruth truth;
};

SyntheticScene synth_video(const SyntheticSceneSpec& spec);

struct KalmanParams {
  double q = 0.01;      // process noise
  double r = 0.25;      // measurement noise (px^2)
  double p0 = 10.0;     // initial covariance scale
};

struct Rect {
  int x = 0, y = 0, w = 0, h = 0;
};

struct TrajectoryPoint {
  int frame = 0;
  bool measured = false;
  double meas_x = 0.0, meas_y = 0.0;
  double est_x = 0.0, est_y = 0.0;
  double est_vx = 0.0, est_vy = 0.0;
  std::array<double, 16> covariance{};  // row-major 4x4
};

struct Trajectory {
  int marker_id = 0;
  std::vector<TrajectoryPoint> points;
};

// Centroid-in-ROI measurement with the ROI recentred at each frame's
// Kalman prediction; missing measurements fall back to prediction-only.
std::vector<Trajectory> track_features(const VideoData& binary_mask,
                                       const std::vector<Rect>& rois,
                                       const KalmanParams& params = {});

std::string trajectories_to_csv(const std::vector<Trajectory>& trajectories);

}  // namespace fuseplan
