#include "fuseplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fuseplan/stencil_catalog.hpp"
#include "json.hpp"

namespace fuseplan {

namespace {

constexpr double kInfeasible = std::numeric_limits<double>::infinity();

bool has_recurrence(std::span<const KernelDesc> kernels) {
  for (const auto& k : kernels)
    if (stencil_op_info(k.stencil_op).causal_recurrence) return true;
  return false;
}

bool has_global_aggregation(std::span<const KernelDesc> kernels) {
  for (const auto& k : kernels)
    if (k.scope == KernelScope::GlobalAggregation) return true;
  return false;
}

// Thread folding: one thread per output pixel up to the device limit, then
// PixelPerThread serial loops.
void fold_threads(const TileShape& tile, const Device& device, int& th_x,
                  int& th_y, int& ppt_x, int& ppt_y) {
  th_x = tile.x;
  th_y = tile.y;
  ppt_x = ppt_y = 1;
  while (std::int64_t(th_x) * th_y > device.max_threads_per_block) {
    if (th_x >= th_y) {
      th_x = (th_x + 1) / 2;
      ppt_x *= 2;
    } else {
      th_y = (th_y + 1) / 2;
      ppt_y *= 2;
    }
  }
}

struct GroupTile {
  TileShape tile;
  Halo halo;
  std::int64_t smem_bytes = 0;
  bool feasible = false;
};

// Tile selection for a (candidate) fused group. Groups containing a causal
// recurrence pin t to the full temporal extent so tiled execution cannot
// split the recurrence.
GroupTile select_group_tile(std::span<const KernelDesc> kernels,
                            const Device& device, const VideoDims& video,
                            const PlanOptions& options) {
  GroupTile g;
  g.halo = fused_halo(kernels, options.halo_mode);
  int elem_bytes = group_elem_bytes(kernels);
  std::int64_t budget = device.smem_bytes / elem_bytes;
  if (options.forced_tile) {
    g.tile = *options.forced_tile;
    g.smem_bytes = input_box(g.tile, g.halo).volume() * elem_bytes;
    g.feasible = g.smem_bytes <= device.smem_bytes;
    return g;
  }
  LaunchLimits limits;
  limits.constrain_input_box = true;
  limits.max_x = std::max(video.width, video.height);
  limits.max_t = video.frames;
  if (has_recurrence(kernels)) limits.min_t = video.frames;
  try {
    TileSearchResult r = optimal_tile(g.halo, budget, limits, elem_bytes);
    g.tile = r.tile;
    g.smem_bytes = r.smem_bytes_used;
    g.feasible = r.feasible;
  } catch (const Error&) {
    g.feasible = false;
    g.tile = TileShape{1, 1, 1};
    g.smem_bytes = input_box(g.tile, g.halo).volume() * elem_bytes;
  }
  return g;
}

}  // namespace

int group_elem_bytes(std::span<const KernelDesc> kernels) {
  int w = 1;
  for (const auto& k : kernels)
    w = std::max({w, k.in_bytes_per_elem, k.out_bytes_per_elem});
  return w;
}

CostBreakdown predict_cost(std::span<const KernelDesc> kernels,
                           const TileShape& tile, const Halo& halo,
                           const Device& device, const VideoDims& video) {
  CostBreakdown c;
  const CostParams& p = device.cost;
  std::int64_t blocks = block_count(video, tile);
  std::int64_t out_elems = blocks * tile.volume();
  std::int64_t in_elems = blocks * input_box(tile, halo).volume();
  c.t_access = p.gmem_cost_per_elem * double(in_elems);
  c.t_write = p.gmem_cost_per_elem * double(out_elems);
  for (const auto& k : kernels) {
    // Per-kernel SHMEM touches: one window read per output element plus
    // the write of that element.
    double window = double(k.halo.dx() + 1) * (k.halo.dy() + 1) *
                    (k.halo.dt() + 1);
    c.t_compute += p.compute_cost_unit * k.compute_weight * double(out_elems);
    c.t_compute += p.smem_cost_per_elem * double(out_elems) * (window + 1.0);
  }
  c.launch = p.launch_overhead;
  return c;
}

std::vector<CandidateFusedKernel> enumerate_candidates(
    const FusibleSegment& segment, const Device& device,
    const VideoDims& video, const PlanOptions& options) {
  int n = segment.size();
  std::vector<CandidateFusedKernel> out;
  out.reserve(std::size_t(n) * (n + 1) / 2);
  for (int a = 1; a <= n; ++a) {
    for (int b = a; b <= n; ++b) {
      CandidateFusedKernel c;
      c.first = segment.first_id + a - 1;
      c.last = segment.first_id + b - 1;
      c.selector.assign(n, 0);
      for (int j = a; j <= b; ++j) c.selector[j - 1] = 1;
      std::span<const KernelDesc> members(segment.kernels.data() + (a - 1),
                                          std::size_t(b - a + 1));
      // A tracking-style aggregation kernel never fuses with neighbours.
      bool mixes_aggregation =
          has_global_aggregation(members) && members.size() > 1;
      GroupTile g = select_group_tile(members, device, video, options);
      c.halo = g.halo;
      c.tile.tile = g.tile;
      c.tile.smem_bytes_used = g.smem_bytes;
      c.tile.feasible = g.feasible && !mixes_aggregation;
      if (c.tile.feasible) {
        c.tile.du = data_utilization(g.tile, g.halo);
        c.tile.objective_v = objective_v(g.tile, g.halo);
        c.breakdown = predict_cost(members, g.tile, g.halo, device, video);
        c.cost = c.breakdown.total();
        c.feasible = true;
      } else {
        c.cost = kInfeasible;
        c.feasible = false;
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

namespace {

// Cut sets are compared as bitstrings over the n-1 boundaries: at equal
// cost the partition that leaves the earliest differing boundary unfused
// loses. Bit for boundary i carries weight 2^(62-i), so a plain integer
// compare is the bitstring compare and the order composes left to right
// (the property the DP needs).
std::uint64_t cut_bit(int boundary) { return 1ULL << (62 - boundary); }

std::vector<std::pair<int, int>> mask_to_intervals(std::uint64_t mask, int n) {
  std::vector<std::pair<int, int>> intervals;
  int start = 1;
  for (int i = 1; i < n; ++i) {
    if (mask & cut_bit(i)) {
      intervals.emplace_back(start, i);
      start = i + 1;
    }
  }
  intervals.emplace_back(start, n);
  return intervals;
}

}  // namespace

double partition_dp(int n, const std::vector<std::vector<double>>& cost,
                    std::vector<std::pair<int, int>>* out_intervals) {
  require(n >= 1 && n < 62, ErrorKind::Input, "segment too long");
  std::vector<double> best(n + 1, kInfeasible);
  std::vector<std::uint64_t> cuts(n + 1, 0);
  best[0] = 0.0;
  for (int j = 1; j <= n; ++j) {
    for (int i = 0; i < j; ++i) {
      if (std::isinf(best[i])) continue;
      double c = best[i] + cost[i][j - 1];  // group is [i+1 .. j]
      if (std::isinf(c)) continue;
      std::uint64_t cand = cuts[i] | (i > 0 ? cut_bit(i) : 0);
      if (c < best[j] || (c == best[j] && cand < cuts[j])) {
        best[j] = c;
        cuts[j] = cand;
      }
    }
  }
  if (out_intervals) {
    *out_intervals = std::isinf(best[n])
                         ? std::vector<std::pair<int, int>>{}
                         : mask_to_intervals(cuts[n], n);
  }
  return best[n];
}

double partition_branch_and_bound(
    int n, const std::vector<std::vector<double>>& cost,
    std::vector<std::pair<int, int>>* out_intervals) {
  require(n >= 1 && n < 62, ErrorKind::Input, "segment too long");
  double best_cost = kInfeasible;
  std::uint64_t best_cuts = ~0ULL;
  bool found = false;

  // DFS over the 0/1 interval selection: at position p pick the interval
  // [p+1 .. b] covering the next uncovered kernel (exact cover of a
  // chain). Prune strictly-worse prefixes; ties survive for the cut-set
  // order.
  auto dfs = [&](auto&& self, int p, double acc, std::uint64_t mask) -> void {
    if (acc > best_cost) return;
    if (p == n) {
      if (!found || acc < best_cost ||
          (acc == best_cost && mask < best_cuts)) {
        best_cost = acc;
        best_cuts = mask;
        found = true;
      }
      return;
    }
    for (int b = p + 1; b <= n; ++b) {
      double c = cost[p][b - 1];
      if (std::isinf(c)) continue;
      self(self, b, acc + c, b < n ? (mask | cut_bit(b)) : mask);
    }
  };
  dfs(dfs, 0, 0.0, 0);
  if (out_intervals) {
    *out_intervals = found ? mask_to_intervals(best_cuts, n)
                           : std::vector<std::pair<int, int>>{};
  }
  return found ? best_cost : kInfeasible;
}

std::vector<std::pair<int, int>> optimal_partition(
    const FusibleSegment& segment, const Device& device,
    const VideoDims& video, const PlanOptions& options) {
  int n = segment.size();
  auto candidates = enumerate_candidates(segment, device, video, options);
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, kInfeasible));
  std::size_t idx = 0;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) cost[a][b] = candidates[idx++].cost;

  std::vector<std::pair<int, int>> dp_intervals, bb_intervals;
  double dp_cost = partition_dp(n, cost, &dp_intervals);
  double bb_cost = partition_branch_and_bound(n, cost, &bb_intervals);
  require(!std::isinf(dp_cost), ErrorKind::Infeasible,
          "no feasible partition for segment");
  require(dp_cost == bb_cost && dp_intervals == bb_intervals,
          ErrorKind::Internal, "partition solvers disagree");

  // Shift segment-relative ids to pipeline ids.
  for (auto& [a, b] : dp_intervals) {
    a += segment.first_id - 1;
    b += segment.first_id - 1;
  }
  return dp_intervals;
}

namespace {

PlanGroup build_group(std::span<const KernelDesc> members, int first, int last,
                      const Device& device, const VideoDims& video,
                      const PlanOptions& options) {
  PlanGroup g;
  g.first = first;
  g.last = last;
  for (const auto& k : members) g.kernel_names.push_back(k.name);
  g.global_aggregation = has_global_aggregation(members);
  g.tiled = members.size() > 1 && !g.global_aggregation;

  GroupTile gt = select_group_tile(members, device, video, options);
  require(gt.feasible, ErrorKind::Infeasible,
          "group " + std::to_string(first) + "-" + std::to_string(last) +
              " does not fit SHMEM at any tile");
  g.halo = gt.halo;
  g.tile = gt.tile;
  g.smem_bytes_used = gt.smem_bytes;
  g.du = data_utilization(g.tile, g.halo);
  g.cost = predict_cost(members, g.tile, g.halo, device, video);
  g.blocks = block_count(video, g.tile);

  int ppt_x, ppt_y;
  fold_threads(g.tile, device, g.launch.th_x, g.launch.th_y, ppt_x, ppt_y);
  g.launch.th_t = 1;
  g.launch.blocks = g.blocks;
  OccupancyResult occ = occupancy(device, g.launch.th_x * g.launch.th_y,
                                  g.tiled ? g.smem_bytes_used : 0);
  g.launch.blocks_per_sm = occ.blocks_per_sm;
  g.launch.occupancy = occ.occupancy;

  if (g.tiled) {
    g.transfer_paper =
        transfer_fused(g.blocks, g.tile, g.halo, TransferVariant::PaperFormula);
    g.transfer_exact =
        transfer_fused(g.blocks, g.tile, g.halo, TransferVariant::ExactVolume);
  } else if (!g.global_aggregation) {
    // Whole-frame GMEM regime, one kernel at a time.
    g.transfer_paper = g.transfer_exact =
        transfer_serial(int(members.size()), g.blocks, g.tile);
  }
  return g;
}

void validate_forced_partition(
    const std::vector<std::pair<int, int>>& forced, const Pipeline& pipeline,
    const std::vector<FusibleSegment>& segments) {
  int prev_end = 0;
  for (auto [a, b] : forced) {
    require(a >= 1 && b >= a && b <= pipeline.size(), ErrorKind::Input,
            "invalid interval " + std::to_string(a) + "-" + std::to_string(b));
    require(a > prev_end, ErrorKind::Input,
            "forced intervals overlap or are out of order");
    prev_end = b;
    bool inside = false;
    for (const auto& s : segments)
      if (a >= s.first_id && b <= s.last_id) inside = true;
    require(inside, ErrorKind::Infeasible,
            "forced interval " + std::to_string(a) + "-" + std::to_string(b) +
                " crosses a KK boundary");
  }
}

}  // namespace

std::vector<std::pair<int, int>> FusionPlan::partition() const {
  std::vector<std::pair<int, int>> p;
  for (const auto& g : groups) p.emplace_back(g.first, g.last);
  return p;
}

FusionPlan plan(const Pipeline& pipeline, const Device& device,
                const PlanOptions& options) {
  pipeline.validate();
  device.validate();
  FusionPlan fp;
  fp.halo_mode = options.halo_mode;
  fp.transfer_variant = options.transfer_variant;
  fp.video = pipeline.video;
  fp.device_name = device.name;
  fp.segments = fusible_segments(pipeline);
  if (options.forced_partition)
    validate_forced_partition(*options.forced_partition, pipeline, fp.segments);

  std::vector<std::pair<int, int>> intervals;
  for (const auto& seg : fp.segments) {
    // Forced intervals inside this segment, with uncovered runs planned
    // optimally.
    std::vector<std::pair<int, int>> seg_forced;
    if (options.forced_partition)
      for (auto [a, b] : *options.forced_partition)
        if (a >= seg.first_id && b <= seg.last_id) seg_forced.emplace_back(a, b);
    int cursor = seg.first_id;
    auto plan_run = [&](int run_first, int run_last) {
      if (run_first > run_last) return;
      FusibleSegment sub;
      sub.first_id = run_first;
      sub.last_id = run_last;
      sub.kernels.assign(
          pipeline.kernels.begin() + (run_first - 1),
          pipeline.kernels.begin() + run_last);
      auto part = optimal_partition(sub, device, pipeline.video, options);
      intervals.insert(intervals.end(), part.begin(), part.end());
    };
    for (auto [a, b] : seg_forced) {
      plan_run(cursor, a - 1);
      intervals.emplace_back(a, b);
      cursor = b + 1;
    }
    plan_run(cursor, seg.last_id);
  }

  for (auto [a, b] : intervals) {
    std::span<const KernelDesc> members(pipeline.kernels.data() + (a - 1),
                                        std::size_t(b - a + 1));
    fp.groups.push_back(
        build_group(members, a, b, device, pipeline.video, options));
  }
  fp.total_cost = 0.0;
  for (const auto& g : fp.groups) fp.total_cost += g.cost.total();
  fp.buffers = gmem_buffers(pipeline, fp.partition());
  return fp;
}

std::string render_plan(const FusionPlan& plan) {
  using ordered_json = nlohmann::ordered_json;
  ordered_json j;
  j["schema_version"] = 1;
  j["halo_mode"] = to_string(plan.halo_mode);
  j["transfer_variant"] = to_string(plan.transfer_variant);
  j["device"] = plan.device_name;
  j["video"] = {{"width", plan.video.width},
                {"height", plan.video.height},
                {"frames", plan.video.frames},
                {"channels", plan.video.channels}};
  j["segments"] = ordered_json::array();
  for (const auto& s : plan.segments)
    j["segments"].push_back({{"first", s.first_id}, {"last", s.last_id}});
  j["groups"] = ordered_json::array();
  for (const auto& g : plan.groups) {
    ordered_json jg;
    jg["interval"] = {{"first", g.first}, {"last", g.last}};
    jg["kernels"] = g.kernel_names;
    jg["tiled"] = g.tiled;
    jg["global_aggregation"] = g.global_aggregation;
    jg["halo"] = {{"x_lo", g.halo.x_lo}, {"x_hi", g.halo.x_hi},
                  {"y_lo", g.halo.y_lo}, {"y_hi", g.halo.y_hi},
                  {"t_lo", g.halo.t_lo}, {"t_hi", g.halo.t_hi}};
    jg["tile"] = {{"x", g.tile.x}, {"y", g.tile.y}, {"t", g.tile.t}};
    jg["smem_bytes"] = g.smem_bytes_used;
    jg["data_utilization"] = g.du;
    jg["blocks"] = g.blocks;
    jg["launch"] = {{"th_x", g.launch.th_x},
                    {"th_y", g.launch.th_y},
                    {"th_t", g.launch.th_t},
                    {"blocks_per_sm", g.launch.blocks_per_sm},
                    {"occupancy", g.launch.occupancy}};
    jg["cost"] = {{"t_access", g.cost.t_access},
                  {"t_compute", g.cost.t_compute},
                  {"t_write", g.cost.t_write},
                  {"launch", g.cost.launch},
                  {"total", g.cost.total()}};
    jg["transfer_paper"] = g.transfer_paper;
    jg["transfer_exact"] = g.transfer_exact;
    j["groups"].push_back(std::move(jg));
  }
  j["total_cost"] = plan.total_cost;
  j["gmem_buffers"] = {{"count", plan.buffers.buffers},
                       {"bytes", plan.buffers.bytes},
                       {"policy", "one input buffer plus one output buffer per group"}};
  return j.dump(2) + "\n";
}

}  // namespace fuseplan
