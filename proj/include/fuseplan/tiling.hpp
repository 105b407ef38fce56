// Halo composition, box arithmetic, data utilization, tile optimization,
// analytic transfer counts, occupancy, and GMEM buffer accounting.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fuseplan/types.hpp"

namespace fuseplan {

enum class HaloMode { PaperMax, Cumulative };
enum class TransferVariant { PaperFormula, ExactVolume };

const char* to_string(HaloMode m);
const char* to_string(TransferVariant v);
HaloMode halo_mode_from_string(const std::string& s);
TransferVariant transfer_variant_from_string(const std::string& s);

struct TileShape {
  int x = 1, y = 1, t = 1;
  std::int64_t volume() const { return std::int64_t(x) * y * t; }
  bool operator==(const TileShape&) const = default;
};

// PaperMax: per-side component-wise maximum (Alg-2 style update rule).
// Cumulative: per-side sums, the exact composed-stencil footprint.
Halo fused_halo(std::span<const KernelDesc> kernels, HaloMode mode);
Halo fused_halo(const std::vector<KernelDesc>& kernels, HaloMode mode);

TileShape input_box(const TileShape& tile, const Halo& halo);

// Ceiling cover of the video by tiles.
std::int64_t block_count(const VideoDims& video, const TileShape& tile);

// x*y*t / ((x+dx)(y+dy)(t+dt)), in (0, 1].
double data_utilization(const TileShape& tile, const Halo& halo);

// (x+dx)^2 (t+dt): the quantity minimized when maximizing DU at x == y.
double objective_v(const TileShape& tile, const Halo& halo);

struct TileSearchResult {
  TileShape tile;
  double du = 0.0;
  double objective_v = 0.0;
  bool feasible = false;
  std::int64_t smem_bytes_used = 0;
};

struct LaunchLimits {
  int max_x = 1 << 20;
  int max_t = 1 << 20;
  int min_t = 1;
  // When set, the budget constrains the haloed input box rather than the
  // output box (the staging buffer is what actually occupies SHMEM).
  bool constrain_input_box = false;
};

// Maximizes DU over integer (x, y = x, t) with x*x*t <= budget_elems (or
// the input-box variant). Ties broken by larger t, then larger x.
TileSearchResult optimal_tile(const Halo& halo, std::int64_t budget_elems,
                              const LaunchLimits& limits = {},
                              int elem_bytes = 4);

// Continuous stationary point of the DU objective: x*^3 * dt = budget * dx.
double continuous_seed_x(const Halo& halo, std::int64_t budget_elems);

// 2 n B x y t.
std::int64_t transfer_serial(int n_kernels, std::int64_t blocks,
                             const TileShape& tile);

// PaperFormula: 2 B x y t + (x dy + y dx + dx dy)(t + dt), verbatim.
// ExactVolume: B * (input-box volume + output-box volume).
std::int64_t transfer_fused(std::int64_t blocks, const TileShape& tile,
                            const Halo& halo, TransferVariant variant);

struct OccupancyResult {
  int blocks_per_sm = 0;
  double occupancy = 0.0;
};

OccupancyResult occupancy(const Device& device, int threads_per_block,
                          std::int64_t smem_per_block);

struct BufferReport {
  int buffers = 0;
  std::int64_t bytes = 0;
};

// Policy: one input buffer plus one output buffer per partition group.
BufferReport gmem_buffers(const Pipeline& pipeline,
                          const std::vector<std::pair<int, int>>& partition);

}  // namespace fuseplan
