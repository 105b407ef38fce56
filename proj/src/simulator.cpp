#include "fuseplan/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fuseplan/stencil_catalog.hpp"

namespace fuseplan {

TrafficCounters& TrafficCounters::operator+=(const TrafficCounters& o) {
  gmem_reads += o.gmem_reads;
  gmem_writes += o.gmem_writes;
  smem_reads += o.smem_reads;
  smem_writes += o.smem_writes;
  return *this;
}

namespace {

double param(const KernelDesc& k, const std::string& key, double dflt) {
  auto it = k.params.find(key);
  return it == k.params.end() ? dflt : it->second;
}

// Normalized 2D gaussian taps, cached per (radius, sigma).
const std::vector<float>& gaussian_weights(int radius, double sigma) {
  thread_local std::map<std::pair<int, double>, std::vector<float>> cache;
  auto key = std::make_pair(radius, sigma);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  int d = 2 * radius + 1;
  std::vector<double> w(std::size_t(d) * d);
  double sum = 0.0;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      w[std::size_t(dy + radius) * d + (dx + radius)] = v;
      sum += v;
    }
  std::vector<float> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = float(w[i] / sum);
  return cache.emplace(key, std::move(out)).first->second;
}

}  // namespace

float apply_stencil_at(const KernelDesc& kernel, const SampleFn& src, int x,
                       int y, int t, int c, const float* prev_out) {
  const std::string& op = kernel.stencil_op;
  if (op == "rgba2gray") {
    float wr = float(param(kernel, "wr", 0.299));
    float wg = float(param(kernel, "wg", 0.587));
    float wb = float(param(kernel, "wb", 0.114));
    return wr * src(x, y, t, 0) + wg * src(x, y, t, 1) + wb * src(x, y, t, 2);
  }
  if (op == "iir_temporal") {
    float alpha = float(param(kernel, "alpha", 0.5));
    float in = src(x, y, t, c);
    if (prev_out == nullptr) return in;
    return alpha * in + (1.0f - alpha) * *prev_out;
  }
  if (op == "gaussian") {
    int radius = int(param(kernel, "radius", 2));
    double sigma = param(kernel, "sigma", 1.0);
    const std::vector<float>& w = gaussian_weights(radius, sigma);
    int d = 2 * radius + 1;
    double acc = 0.0;
    for (int dy = -radius; dy <= radius; ++dy)
      for (int dx = -radius; dx <= radius; ++dx)
        acc += double(w[std::size_t(dy + radius) * d + (dx + radius)]) *
               src(x + dx, y + dy, t, c);
    return float(acc);
  }
  if (op == "gradient") {
    // 3x3 Sobel magnitude.
    auto s = [&](int dx, int dy) { return src(x + dx, y + dy, t, c); };
    float gx = (s(1, -1) + 2.0f * s(1, 0) + s(1, 1)) -
               (s(-1, -1) + 2.0f * s(-1, 0) + s(-1, 1));
    float gy = (s(-1, 1) + 2.0f * s(0, 1) + s(1, 1)) -
               (s(-1, -1) + 2.0f * s(0, -1) + s(1, -1));
    return std::sqrt(gx * gx + gy * gy);
  }
  if (op == "threshold") {
    float th = float(param(kernel, "th", 128.0));
    float white = float(param(kernel, "white", 255.0));
    float black = float(param(kernel, "black", 0.0));
    return src(x, y, t, c) >= th ? white : black;
  }
  if (op == "identity" || op == "kalman_track") return src(x, y, t, c);
  if (op == "scale_offset") {
    float scale = float(param(kernel, "scale", 1.0));
    float offset = float(param(kernel, "offset", 0.0));
    return scale * src(x, y, t, c) + offset;
  }
  if (op == "box_mean") {
    int rx = int(param(kernel, "radius_x", 1));
    int ry = int(param(kernel, "radius_y", 1));
    int rt = int(param(kernel, "radius_t", 0));
    double acc = 0.0;
    for (int dt = -rt; dt <= rt; ++dt)
      for (int dy = -ry; dy <= ry; ++dy)
        for (int dx = -rx; dx <= rx; ++dx)
          acc += src(x + dx, y + dy, t + dt, c);
    return float(acc / ((2 * rx + 1) * (2 * ry + 1) * (2 * rt + 1)));
  }
  throw Error(ErrorKind::Input, "unknown stencil_op: " + op);
}

namespace {

class VideoSampler : public SampleFn {
 public:
  explicit VideoSampler(const VideoData& v) : v_(v) {}
  float operator()(int x, int y, int t, int c) const override {
    return v_.sample(x, y, t, c);
  }

 private:
  const VideoData& v_;
};

bool is_recurrence(const KernelDesc& k) {
  return stencil_op_info(k.stencil_op).causal_recurrence;
}

}  // namespace

VideoData apply_stencil(const KernelDesc& kernel, const VideoData& input) {
  require(kernel.in_channels == input.dims.channels, ErrorKind::Input,
          "kernel " + std::to_string(kernel.id) + ": input channel mismatch");
  VideoDims out_dims = input.dims;
  out_dims.channels = kernel.out_channels;
  VideoData out = VideoData::zeros(out_dims);
  VideoSampler src(input);
  if (is_recurrence(kernel)) {
    for (int c = 0; c < out_dims.channels; ++c)
      for (int y = 0; y < out_dims.height; ++y)
        for (int x = 0; x < out_dims.width; ++x) {
          float prev = 0.0f;
          for (int t = 0; t < out_dims.frames; ++t) {
            prev = apply_stencil_at(kernel, src, x, y, t, c,
                                    t == 0 ? nullptr : &prev);
            out.at(x, y, t, c) = prev;
          }
        }
    return out;
  }
  for (int t = 0; t < out_dims.frames; ++t)
    for (int c = 0; c < out_dims.channels; ++c)
      for (int y = 0; y < out_dims.height; ++y)
        for (int x = 0; x < out_dims.width; ++x)
          out.at(x, y, t, c) = apply_stencil_at(kernel, src, x, y, t, c,
                                                nullptr);
  return out;
}

SequentialResult run_sequential(const Pipeline& pipeline,
                                const VideoData& video) {
  require(video.dims.width == pipeline.video.width &&
              video.dims.height == pipeline.video.height &&
              video.dims.channels == pipeline.video.channels,
          ErrorKind::Input, "video does not match pipeline dimensions");
  SequentialResult r;
  VideoData cur = video;
  std::int64_t pixels = video.dims.pixel_volume();
  for (const KernelDesc& k : pipeline.kernels) {
    if (k.scope == KernelScope::GlobalAggregation) continue;  // tracking stage
    cur = apply_stencil(k, cur);
    r.traffic.gmem_reads += pixels;
    r.traffic.gmem_writes += pixels;
    r.stage_outputs.push_back(cur);
    ++r.executed_kernels;
  }
  r.final_output = std::move(cur);
  return r;
}

namespace {

// A staged (SHMEM) box. Coordinates are global; reads clamp to the video
// first (the border policy) and then to the staged extent (which only
// bites when the staged halo under-covers, e.g. PaperMax).
struct StagedBox {
  int x0, y0, t0;  // global coord of staged element (0,0,0); may be < 0
  int ex, ey, et;
  int channels;
  VideoDims video;
  std::vector<float> data;

  StagedBox(int x0_, int y0_, int t0_, int ex_, int ey_, int et_, int ch,
            const VideoDims& vd)
      : x0(x0_), y0(y0_), t0(t0_), ex(ex_), ey(ey_), et(et_), channels(ch),
        video(vd), data(std::size_t(ex_) * ey_ * et_ * ch, 0.0f) {}

  std::size_t index(int ix, int iy, int it, int c) const {
    return ((std::size_t(it) * channels + c) * ey + iy) * ex + ix;
  }
  float& at_local(int ix, int iy, int it, int c) {
    return data[index(ix, iy, it, c)];
  }
  float read_global(int gx, int gy, int gt, int c) const {
    gx = std::clamp(gx, 0, video.width - 1);
    gy = std::clamp(gy, 0, video.height - 1);
    gt = std::clamp(gt, 0, video.frames - 1);
    int ix = std::clamp(gx - x0, 0, ex - 1);
    int iy = std::clamp(gy - y0, 0, ey - 1);
    int it = std::clamp(gt - t0, 0, et - 1);
    return data[index(ix, iy, it, c)];
  }
  std::int64_t pixel_volume() const { return std::int64_t(ex) * ey * et; }
};

class StagedSampler : public SampleFn {
 public:
  explicit StagedSampler(const StagedBox& box) : box_(box) {}
  float operator()(int x, int y, int t, int c) const override {
    return box_.read_global(x, y, t, c);
  }

 private:
  const StagedBox& box_;
};

std::int64_t window_volume(const KernelDesc& k) {
  return std::int64_t(k.halo.dx() + 1) * (k.halo.dy() + 1) * (k.halo.dt() + 1);
}

void run_group_box(std::span<const KernelDesc> members, const Halo& halo,
                   const VideoData& in, VideoData& out, int bx0, int by0,
                   int bt0, int ox, int oy, int ot, TrafficCounters& traffic) {
  const VideoDims& vd = in.dims;
  StagedBox staged(bx0 - halo.x_lo, by0 - halo.y_lo, bt0 - halo.t_lo,
                   ox + halo.dx(), oy + halo.dy(), ot + halo.dt(),
                   members.front().in_channels, vd);
  // Stage the haloed input box. Out-of-video positions hold the clamped
  // edge element; each staged element is one GMEM read.
  for (int it = 0; it < staged.et; ++it)
    for (int c = 0; c < staged.channels; ++c)
      for (int iy = 0; iy < staged.ey; ++iy)
        for (int ix = 0; ix < staged.ex; ++ix)
          staged.at_local(ix, iy, it, c) =
              in.sample(staged.x0 + ix, staged.y0 + iy, staged.t0 + it, c);
  traffic.gmem_reads += staged.pixel_volume();
  traffic.smem_writes += staged.pixel_volume();

  for (const KernelDesc& k : members) {
    StagedBox next(staged.x0, staged.y0, staged.t0, staged.ex, staged.ey,
                   staged.et, k.out_channels, vd);
    StagedSampler src(staged);
    if (is_recurrence(k)) {
      // Each thread owns an (x, y) site and scans the staged t extent.
      // The recurrence starts no earlier than global frame 0 so restart
      // semantics agree with the sequential path whenever the staged
      // extent reaches back to the first frame.
      int i0 = std::max(0, -staged.t0);
      for (int c = 0; c < next.channels; ++c)
        for (int iy = 0; iy < next.ey; ++iy)
          for (int ix = 0; ix < next.ex; ++ix) {
            float prev = 0.0f;
            for (int it = 0; it < next.et; ++it) {
              int gx = staged.x0 + ix, gy = staged.y0 + iy,
                  gt = staged.t0 + it;
              if (it <= i0) {
                prev = apply_stencil_at(k, src, gx, gy, gt, c, nullptr);
              } else {
                prev = apply_stencil_at(k, src, gx, gy, gt, c, &prev);
              }
              next.at_local(ix, iy, it, c) = prev;
            }
          }
    } else {
      for (int it = 0; it < next.et; ++it)
        for (int c = 0; c < next.channels; ++c)
          for (int iy = 0; iy < next.ey; ++iy)
            for (int ix = 0; ix < next.ex; ++ix)
              next.at_local(ix, iy, it, c) = apply_stencil_at(
                  k, src, staged.x0 + ix, staged.y0 + iy, staged.t0 + it, c,
                  nullptr);
    }
    traffic.smem_reads += staged.pixel_volume() * window_volume(k);
    traffic.smem_writes += staged.pixel_volume();
    staged = std::move(next);
  }

  // Write-back of the output box.
  for (int t = bt0; t < bt0 + ot; ++t)
    for (int c = 0; c < out.dims.channels; ++c)
      for (int y = by0; y < by0 + oy; ++y)
        for (int x = bx0; x < bx0 + ox; ++x)
          out.at(x, y, t, c) = staged.read_global(x, y, t, c);
  traffic.gmem_writes += std::int64_t(ox) * oy * ot;
  traffic.smem_reads += std::int64_t(ox) * oy * ot;
}

}  // namespace

TiledResult run_tiled(const FusionPlan& plan, const Pipeline& pipeline,
                      const VideoData& video) {
  TiledResult r;
  VideoData cur = video;
  std::int64_t pixels = video.dims.pixel_volume();
  for (const PlanGroup& g : plan.groups) {
    if (g.global_aggregation) continue;  // tracking stage runs separately
    std::span<const KernelDesc> members(pipeline.kernels.data() + (g.first - 1),
                                        std::size_t(g.last - g.first + 1));
    if (!g.tiled) {
      // Whole-frame GMEM regime, one launch per kernel.
      for (const KernelDesc& k : members) {
        cur = apply_stencil(k, cur);
        r.traffic.gmem_reads += pixels;
        r.traffic.gmem_writes += pixels;
      }
      continue;
    }
    VideoDims out_dims = video.dims;
    out_dims.channels = members.back().out_channels;
    VideoData out = VideoData::zeros(out_dims);
    const TileShape& tile = g.tile;
    for (int bt0 = 0; bt0 < video.dims.frames; bt0 += tile.t)
      for (int by0 = 0; by0 < video.dims.height; by0 += tile.y)
        for (int bx0 = 0; bx0 < video.dims.width; bx0 += tile.x) {
          int ox = std::min(tile.x, video.dims.width - bx0);
          int oy = std::min(tile.y, video.dims.height - by0);
          int ot = std::min(tile.t, video.dims.frames - bt0);
          run_group_box(members, g.halo, cur, out, bx0, by0, bt0, ox, oy, ot,
                        r.traffic);
        }
    cur = std::move(out);
  }
  r.final_output = std::move(cur);
  return r;
}

DiffReport compare_outputs(const VideoData& a, const VideoData& b,
                           const Halo& erode, const TileShape* tile_grid) {
  require(a.dims.width == b.dims.width && a.dims.height == b.dims.height &&
              a.dims.frames == b.dims.frames &&
              a.dims.channels == b.dims.channels,
          ErrorKind::Input, "compare_outputs: dimension mismatch");
  TileShape grid = tile_grid
                       ? *tile_grid
                       : TileShape{a.dims.width, a.dims.height, a.dims.frames};
  DiffReport r;
  auto interior_1d = [](int v, int extent, int step, int lo, int hi) {
    int start = (v / step) * step;
    int end = std::min(start + step, extent);
    return (v - start) >= lo && (end - 1 - v) >= hi;
  };
  for (int t = 0; t < a.dims.frames; ++t)
    for (int c = 0; c < a.dims.channels; ++c)
      for (int y = 0; y < a.dims.height; ++y)
        for (int x = 0; x < a.dims.width; ++x) {
          float d = std::abs(a.at(x, y, t, c) - b.at(x, y, t, c));
          if (d == 0.0f) continue;
          r.max_abs_diff = std::max(r.max_abs_diff, d);
          ++r.diff_count;
          bool interior =
              interior_1d(x, a.dims.width, grid.x, erode.x_lo, erode.x_hi) &&
              interior_1d(y, a.dims.height, grid.y, erode.y_lo, erode.y_hi) &&
              interior_1d(t, a.dims.frames, grid.t, erode.t_lo, erode.t_hi);
          if (interior)
            ++r.interior_diffs;
          else
            ++r.boundary_diffs;
        }
  return r;
}

}  // namespace fuseplan
