// Candidate enumeration, cost prediction, and the set-partitioning solve
// that picks the optimal fusion of each fusible segment.
#pragma once

#include <optional>

#include "fuseplan/dependency.hpp"
#include "fuseplan/tiling.hpp"

namespace fuseplan {

struct CostBreakdown {
  double t_access = 0.0;
  double t_compute = 0.0;
  double t_write = 0.0;
  double launch = 0.0;
  double total() const { return t_access + t_compute + t_write + launch; }
};

struct CandidateFusedKernel {
  int first = 0, last = 0;       // 1-based kernel ids, inclusive
  std::vector<int> selector;     // membership over the segment's kernels
  Halo halo;
  TileSearchResult tile;
  CostBreakdown breakdown;
  double cost = 0.0;             // +inf sentinel when infeasible
  bool feasible = false;
};

struct PlanOptions {
  HaloMode halo_mode = HaloMode::Cumulative;
  TransferVariant transfer_variant = TransferVariant::ExactVolume;
  std::optional<std::vector<std::pair<int, int>>> forced_partition;
  std::optional<TileShape> forced_tile;
};

struct LaunchConfig {
  int th_x = 1, th_y = 1, th_t = 1;
  std::int64_t blocks = 0;
  int blocks_per_sm = 0;
  double occupancy = 0.0;
};

struct PlanGroup {
  int first = 0, last = 0;
  std::vector<std::string> kernel_names;
  Halo halo;
  TileShape tile;
  bool tiled = false;  // size >= 2 and all members tile-local
  bool global_aggregation = false;
  std::int64_t smem_bytes_used = 0;
  double du = 1.0;
  LaunchConfig launch;
  CostBreakdown cost;
  std::int64_t blocks = 0;
  std::int64_t transfer_paper = 0;
  std::int64_t transfer_exact = 0;
};

struct FusionPlan {
  HaloMode halo_mode = HaloMode::Cumulative;
  TransferVariant transfer_variant = TransferVariant::ExactVolume;
  VideoDims video;
  std::string device_name;
  std::vector<FusibleSegment> segments;
  std::vector<PlanGroup> groups;
  double total_cost = 0.0;
  BufferReport buffers;

  std::vector<std::pair<int, int>> partition() const;
};

// Widest element in flight across a group; sizes the staging buffer.
int group_elem_bytes(std::span<const KernelDesc> kernels);

// All n(n+1)/2 contiguous intervals, each populated with fused halo,
// tile, feasibility, and predicted cost.
std::vector<CandidateFusedKernel> enumerate_candidates(
    const FusibleSegment& segment, const Device& device,
    const VideoDims& video, const PlanOptions& options = {});

CostBreakdown predict_cost(std::span<const KernelDesc> kernels,
                           const TileShape& tile, const Halo& halo,
                           const Device& device, const VideoDims& video);

// Minimum-cost exact cover by contiguous intervals. Solved by a DP over
// cut positions and cross-checked against a branch-and-bound over the 0/1
// candidate selection; disagreement is reported as an internal error.
std::vector<std::pair<int, int>> optimal_partition(
    const FusibleSegment& segment, const Device& device,
    const VideoDims& video, const PlanOptions& options = {});

// Solver internals, exposed for the cross-check tests. cost[a-1][b-1] is
// the interval cost for 1 <= a <= b <= n (segment-relative).
double partition_dp(int n, const std::vector<std::vector<double>>& cost,
                    std::vector<std::pair<int, int>>* out_intervals);
double partition_branch_and_bound(
    int n, const std::vector<std::vector<double>>& cost,
    std::vector<std::pair<int, int>>* out_intervals);

FusionPlan plan(const Pipeline& pipeline, const Device& device,
                const PlanOptions& options = {});

std::string render_plan(const FusionPlan& plan);  // schema-versioned JSON

}  // namespace fuseplan
