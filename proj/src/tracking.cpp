#include <algorithm>
#include <iomanip>
#include <sstream>

#include <Eigen/Dense>

#include "fuseplan/tracking.hpp"

namespace fuseplan {

namespace {

using Eigen::Matrix4d;
using Eigen::Vector4d;
using Mat24 = Eigen::Matrix<double, 2, 4>;
using Eigen::Matrix2d;
using Eigen::Vector2d;

// State layout: [x, y, vx, vy], frame step dt = 1.
Matrix4d transition() {
  Matrix4d f = Matrix4d::Identity();
  f(0, 2) = 1.0;
  f(1, 3) = 1.0;
  return f;
}

// Discrete white-noise acceleration per axis.
Matrix4d process_noise(double q) {
  Matrix4d m = Matrix4d::Zero();
  for (int axis = 0; axis < 2; ++axis) {
    int p = axis, v = axis + 2;
    m(p, p) = 0.25 * q;
    m(p, v) = 0.5 * q;
    m(v, p) = 0.5 * q;
    m(v, v) = q;
  }
  return m;
}

std::optional<Vector2d> centroid(const VideoData& mask, const Rect& roi,
                                 int frame) {
  int x0 = std::max(roi.x, 0);
  int y0 = std::max(roi.y, 0);
  int x1 = std::min(roi.x + roi.w, mask.dims.width);
  int y1 = std::min(roi.y + roi.h, mask.dims.height);
  double sx = 0.0, sy = 0.0;
  std::int64_t n = 0;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      if (mask.at(x, y, frame, 0) > 127.0f) {
        sx += x;
        sy += y;
        ++n;
      }
  if (n == 0) return std::nullopt;
  return Vector2d(sx / double(n), sy / double(n));
}

Rect recenter(const Rect& roi, double cx, double cy) {
  Rect r = roi;
  r.x = int(std::lround(cx)) - roi.w / 2;
  r.y = int(std::lround(cy)) - roi.h / 2;
  return r;
}

}  // namespace

std::vector<Trajectory> track_features(const VideoData& binary_mask,
                                       const std::vector<Rect>& rois,
                                       const KalmanParams& params) {
  require(binary_mask.dims.channels == 1, ErrorKind::Input,
          "track_features expects a single-channel mask");
  require(!rois.empty(), ErrorKind::Input, "track_features needs >= 1 ROI");
  for (const Rect& r : rois)
    require(r.w >= 1 && r.h >= 1, ErrorKind::Input, "ROI extents must be >= 1");

  const Matrix4d f = transition();
  const Matrix4d q = process_noise(params.q);
  Mat24 h = Mat24::Zero();
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  const Matrix2d r_cov = params.r * Matrix2d::Identity();

  std::vector<Trajectory> out;
  for (std::size_t i = 0; i < rois.size(); ++i) {
    Trajectory traj;
    traj.marker_id = int(i) + 1;
    Rect roi = rois[i];
    Vector4d state(roi.x + roi.w / 2.0, roi.y + roi.h / 2.0, 0.0, 0.0);
    Matrix4d cov = params.p0 * Matrix4d::Identity();

    for (int t = 0; t < binary_mask.dims.frames; ++t) {
      if (t > 0) {
        state = f * state;
        cov = f * cov * f.transpose() + q;
      }
      roi = recenter(roi, state(0), state(1));
      std::optional<Vector2d> z = centroid(binary_mask, roi, t);
      TrajectoryPoint pt;
      pt.frame = t;
      if (z) {
        if (t == 0) {
          // Initialize position from the first measurement.
          state(0) = (*z)(0);
          state(1) = (*z)(1);
        } else {
          Matrix2d s = h * cov * h.transpose() + r_cov;
          Eigen::Matrix<double, 4, 2> k = cov * h.transpose() * s.inverse();
          state += k * (*z - h * state);
          cov = (Matrix4d::Identity() - k * h) * cov;
        }
        pt.measured = true;
        pt.meas_x = (*z)(0);
        pt.meas_y = (*z)(1);
      }
      pt.est_x = state(0);
      pt.est_y = state(1);
      pt.est_vx = state(2);
      pt.est_vy = state(3);
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          pt.covariance[std::size_t(a) * 4 + b] = cov(a, b);
      traj.points.push_back(pt);
    }
    out.push_back(std::move(traj));
  }
  return out;
}

std::string trajectories_to_csv(const std::vector<Trajectory>& trajectories) {
  std::ostringstream ss;
  ss << "frame,marker_id,meas_x,meas_y,est_x,est_y,est_vx,est_vy\n";
  ss << std::setprecision(9);
  for (const Trajectory& traj : trajectories)
    for (const TrajectoryPoint& p : traj.points) {
      ss << p.frame << ',' << traj.marker_id << ',';
      if (p.measured)
        ss << p.meas_x << ',' << p.meas_y;
      else
        ss << ',';
      ss << ',' << p.est_x << ',' << p.est_y << ',' << p.est_vx << ','
         << p.est_vy << '\n';
    }
  return ss.str();
}

}  // namespace fuseplan
