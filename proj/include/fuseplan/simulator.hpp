// CPU reference semantics: whole-frame sequential execution (the oracle)
// and tiled-fused execution per a FusionPlan, with element-traffic tallies.
#pragma once

#include "fuseplan/planner.hpp"
#include "fuseplan/video.hpp"

namespace fuseplan {

struct TrafficCounters {
  std::int64_t gmem_reads = 0;
  std::int64_t gmem_writes = 0;
  std::int64_t smem_reads = 0;
  std::int64_t smem_writes = 0;

  std::int64_t gmem_total() const { return gmem_reads + gmem_writes; }
  TrafficCounters& operator+=(const TrafficCounters& o);
};

// One output element of `kernel` at (x, y, t, c), sampling the input
// through `src` with clamp-to-edge. `prev_t` carries recurrence state for
// the temporal IIR (its own output at t-1; pass nullptr at the start of a
// column). Both execution paths share this function, which is what makes
// bit-exact agreement possible.
class SampleFn {
 public:
  virtual ~SampleFn() = default;
  virtual float operator()(int x, int y, int t, int c) const = 0;
};

float apply_stencil_at(const KernelDesc& kernel, const SampleFn& src, int x,
                       int y, int t, int c, const float* prev_out);

// Whole-frame application over an output region of one kernel.
VideoData apply_stencil(const KernelDesc& kernel, const VideoData& input);

struct SequentialResult {
  std::vector<VideoData> stage_outputs;  // one per executed kernel
  VideoData final_output;
  TrafficCounters traffic;
  int executed_kernels = 0;  // tile-local kernels only
};

SequentialResult run_sequential(const Pipeline& pipeline,
                                const VideoData& video);

struct TiledResult {
  VideoData final_output;
  TrafficCounters traffic;
};

TiledResult run_tiled(const FusionPlan& plan, const Pipeline& pipeline,
                      const VideoData& video);

struct DiffReport {
  float max_abs_diff = 0.0f;
  std::int64_t diff_count = 0;
  std::int64_t interior_diffs = 0;
  std::int64_t boundary_diffs = 0;
};

// Interior = elements farther than `erode` from every tile boundary of the
// given grid (video boundary when no tile is supplied).
DiffReport compare_outputs(const VideoData& a, const VideoData& b,
                           const Halo& erode,
                           const TileShape* tile_grid = nullptr);

}  // namespace fuseplan
