#include "fuseplan/tiling.hpp"

#include <algorithm>
#include <cmath>

namespace fuseplan {

const char* to_string(HaloMode m) {
  return m == HaloMode::PaperMax ? "paper-max" : "cumulative";
}

const char* to_string(TransferVariant v) {
  return v == TransferVariant::PaperFormula ? "paper" : "exact";
}

HaloMode halo_mode_from_string(const std::string& s) {
  if (s == "paper-max") return HaloMode::PaperMax;
  if (s == "cumulative") return HaloMode::Cumulative;
  throw Error(ErrorKind::Input, "unknown halo mode: " + s);
}

TransferVariant transfer_variant_from_string(const std::string& s) {
  if (s == "paper") return TransferVariant::PaperFormula;
  if (s == "exact") return TransferVariant::ExactVolume;
  throw Error(ErrorKind::Input, "unknown transfer variant: " + s);
}

Halo fused_halo(std::span<const KernelDesc> kernels, HaloMode mode) {
  require(!kernels.empty(), ErrorKind::Input, "fused_halo: empty kernel list");
  Halo acc = kernels.front().halo;
  for (std::size_t i = 1; i < kernels.size(); ++i) {
    const Halo& h = kernels[i].halo;
    if (mode == HaloMode::PaperMax) {
      acc.x_lo = std::max(acc.x_lo, h.x_lo);
      acc.x_hi = std::max(acc.x_hi, h.x_hi);
      acc.y_lo = std::max(acc.y_lo, h.y_lo);
      acc.y_hi = std::max(acc.y_hi, h.y_hi);
      acc.t_lo = std::max(acc.t_lo, h.t_lo);
      acc.t_hi = std::max(acc.t_hi, h.t_hi);
    } else {
      acc.x_lo += h.x_lo;
      acc.x_hi += h.x_hi;
      acc.y_lo += h.y_lo;
      acc.y_hi += h.y_hi;
      acc.t_lo += h.t_lo;
      acc.t_hi += h.t_hi;
    }
  }
  return acc;
}

Halo fused_halo(const std::vector<KernelDesc>& kernels, HaloMode mode) {
  return fused_halo(std::span<const KernelDesc>(kernels), mode);
}

TileShape input_box(const TileShape& tile, const Halo& halo) {
  return TileShape{tile.x + halo.dx(), tile.y + halo.dy(), tile.t + halo.dt()};
}

std::int64_t block_count(const VideoDims& video, const TileShape& tile) {
  require(tile.x >= 1 && tile.y >= 1 && tile.t >= 1, ErrorKind::Input,
          "tile dimensions must be >= 1");
  auto ceil_div = [](std::int64_t a, std::int64_t b) { return (a + b - 1) / b; };
  return ceil_div(video.width, tile.x) * ceil_div(video.height, tile.y) *
         ceil_div(video.frames, tile.t);
}

double data_utilization(const TileShape& tile, const Halo& halo) {
  TileShape in = input_box(tile, halo);
  return double(tile.volume()) / double(in.volume());
}

double objective_v(const TileShape& tile, const Halo& halo) {
  return double(tile.x + halo.dx()) * (tile.x + halo.dx()) *
         (tile.t + halo.dt());
}

double continuous_seed_x(const Halo& halo, std::int64_t budget_elems) {
  if (halo.dt() == 0)
    return std::sqrt(double(budget_elems));  // V monotone decreasing in x
  if (halo.dx() == 0) return 1.0;            // DU independent of x
  return std::cbrt(double(budget_elems) * halo.dx() / halo.dt());
}

namespace {

// Exact DU comparison via cross multiplication: DU = out/in.
struct DuRatio {
  std::int64_t out = 0, in = 1;
};

bool du_less(const DuRatio& a, const DuRatio& b) {
  return (__int128)a.out * b.in < (__int128)b.out * a.in;
}

}  // namespace

TileSearchResult optimal_tile(const Halo& halo, std::int64_t budget_elems,
                              const LaunchLimits& limits, int elem_bytes) {
  require(budget_elems >= 1, ErrorKind::Infeasible,
          "SHMEM budget below one element");
  TileSearchResult best;
  DuRatio best_du;
  // Bounded integer sweep over x (seeded analytically the continuous
  // stationary point sits inside this range; the sweep is cheap enough to
  // cover it whole and stay exact in the degenerate dt == 0 / dx == 0
  // cases).
  std::int64_t x_max = std::min<std::int64_t>(
      limits.max_x, std::int64_t(std::sqrt(double(budget_elems))) + 2);
  for (std::int64_t x = 1; x <= x_max; ++x) {
    std::int64_t t;
    if (limits.constrain_input_box) {
      std::int64_t in_spatial =
          (x + halo.dx()) * (x + halo.dy());
      t = budget_elems / in_spatial - halo.dt();
    } else {
      t = budget_elems / (x * x);
    }
    t = std::min<std::int64_t>(t, limits.max_t);
    if (t < limits.min_t) continue;
    TileShape tile{int(x), int(x), int(t)};
    TileShape in = input_box(tile, halo);
    std::int64_t used = limits.constrain_input_box ? in.volume()
                                                   : tile.volume();
    if (used > budget_elems) continue;
    DuRatio du{tile.volume(), in.volume()};
    // Ties broken by larger t, then larger x.
    bool better = !best.feasible || du_less(best_du, du) ||
                  (!du_less(du, best_du) &&
                   (tile.t > best.tile.t ||
                    (tile.t == best.tile.t && tile.x > best.tile.x)));
    if (better) {
      best.feasible = true;
      best.tile = tile;
      best_du = du;
    }
  }
  require(best.feasible, ErrorKind::Infeasible,
          "no feasible tile under SHMEM budget");
  best.du = data_utilization(best.tile, halo);
  best.objective_v = objective_v(best.tile, halo);
  best.smem_bytes_used =
      input_box(best.tile, halo).volume() * std::int64_t(elem_bytes);
  return best;
}

std::int64_t transfer_serial(int n_kernels, std::int64_t blocks,
                             const TileShape& tile) {
  require(n_kernels >= 1 && blocks >= 1, ErrorKind::Input,
          "transfer_serial: counts must be >= 1");
  return 2 * std::int64_t(n_kernels) * blocks * tile.volume();
}

std::int64_t transfer_fused(std::int64_t blocks, const TileShape& tile,
                            const Halo& halo, TransferVariant variant) {
  require(blocks >= 1, ErrorKind::Input, "transfer_fused: blocks must be >= 1");
  if (variant == TransferVariant::PaperFormula) {
    // Printed formula, kept verbatim: the halo term carries no per-block
    // factor and no temporal halo face.
    std::int64_t halo_term =
        (std::int64_t(tile.x) * halo.dy() + std::int64_t(tile.y) * halo.dx() +
         std::int64_t(halo.dx()) * halo.dy()) *
        (tile.t + halo.dt());
    return 2 * blocks * tile.volume() + halo_term;
  }
  TileShape in = input_box(tile, halo);
  return blocks * (in.volume() + tile.volume());
}

OccupancyResult occupancy(const Device& device, int threads_per_block,
                          std::int64_t smem_per_block) {
  require(threads_per_block >= 1 &&
              threads_per_block <= device.max_threads_per_block,
          ErrorKind::Input, "threads_per_block out of range");
  require(smem_per_block <= device.smem_bytes, ErrorKind::Infeasible,
          "block SHMEM request exceeds device capacity");
  std::int64_t by_smem = smem_per_block > 0
                             ? device.smem_bytes / smem_per_block
                             : device.max_blocks_per_sm;
  std::int64_t by_threads =
      std::int64_t(device.max_warps_per_sm) * device.warp_size /
      threads_per_block;
  OccupancyResult r;
  r.blocks_per_sm = int(std::min<std::int64_t>(
      {by_smem, device.max_blocks_per_sm, by_threads}));
  std::int64_t warps_per_block =
      (threads_per_block + device.warp_size - 1) / device.warp_size;
  r.occupancy = std::clamp(
      double(r.blocks_per_sm * warps_per_block) / device.max_warps_per_sm,
      0.0, 1.0);
  return r;
}

BufferReport gmem_buffers(const Pipeline& pipeline,
                          const std::vector<std::pair<int, int>>& partition) {
  require(!partition.empty(), ErrorKind::Input, "empty partition");
  int expect = 1;
  for (auto [a, b] : partition) {
    require(a == expect && b >= a && b <= pipeline.size(), ErrorKind::Input,
            "partition does not cover 1..n");
    expect = b + 1;
  }
  require(expect == pipeline.size() + 1, ErrorKind::Input,
          "partition does not cover 1..n");
  BufferReport r;
  std::int64_t pixels = pipeline.video.pixel_volume();
  r.buffers = int(partition.size()) + 1;
  r.bytes = pixels * pipeline.kernels.front().in_bytes_per_elem;
  for (auto [a, b] : partition)
    r.bytes += pixels * pipeline.kernels[b - 1].out_bytes_per_elem;
  return r;
}

}  // namespace fuseplan
