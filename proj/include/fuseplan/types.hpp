// Core domain types: videos, halos, kernels, pipelines, devices.
#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace fuseplan {

// Error kinds map onto the CLI exit-code contract: Input -> 2, Infeasible -> 1.
enum class ErrorKind { Input, Infeasible, Internal };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) throw Error(kind, msg);
}

struct VideoDims {
  int width = 0;    // d_x = N
  int height = 0;   // d_y = M
  int frames = 0;   // F
  int fps = 1;      // R
  int channels = 1;

  std::int64_t pixel_volume() const {
    return std::int64_t(width) * height * frames;
  }
  std::int64_t element_count() const { return pixel_volume() * channels; }
  void validate() const;
};

// F = T x R.
std::int64_t frame_count(std::int64_t duration_seconds, std::int64_t fps);

// Per-side pads. Totals (lo + hi) feed the DU / transfer formulas.
struct Halo {
  int x_lo = 0, x_hi = 0;
  int y_lo = 0, y_hi = 0;
  int t_lo = 0, t_hi = 0;

  int dx() const { return x_lo + x_hi; }
  int dy() const { return y_lo + y_hi; }
  int dt() const { return t_lo + t_hi; }
  bool zero() const { return dx() == 0 && dy() == 0 && dt() == 0; }

  static Halo symmetric(int rx, int ry, int rt = 0) {
    return Halo{rx, rx, ry, ry, rt, rt};
  }
  void validate() const;
  bool operator==(const Halo&) const = default;
};

enum class OperationType {
  SinglePoint,
  Rectangular,
  SingleFrame,
  MultiFrame,
  SpatioTemporal,
};

enum class DependencyType { TT, TMT, KK };

enum class KernelScope { TileLocal, GlobalAggregation };

using StencilParams = std::map<std::string, double>;

struct KernelDesc {
  int id = 0;  // 1-based position in the pipeline
  std::string name;
  OperationType op_type = OperationType::SinglePoint;
  bool multi_frame = false;
  Halo halo;
  KernelScope scope = KernelScope::TileLocal;
  std::string stencil_op;
  StencilParams params;
  int in_channels = 1;
  int out_channels = 1;
  int in_bytes_per_elem = 4;
  int out_bytes_per_elem = 4;
  double compute_weight = 1.0;
};

struct Pipeline {
  VideoDims video;
  std::vector<KernelDesc> kernels;

  int size() const { return int(kernels.size()); }
  void validate() const;
};

struct CostParams {
  double gmem_cost_per_elem = 100.0;
  double smem_cost_per_elem = 1.0;
  double compute_cost_unit = 1.0;
  double launch_overhead = 10000.0;
  void validate() const;
};

struct Device {
  std::string name;
  std::int64_t smem_bytes = 0;  // beta_shared
  int sm_count = 0;
  int warp_size = 32;
  int max_threads_per_block = 1024;
  int max_blocks_per_sm = 16;
  int max_warps_per_sm = 64;
  CostParams cost;
  void validate() const;
};

const char* to_string(OperationType t);
const char* to_string(DependencyType t);
const char* to_string(KernelScope s);
OperationType operation_type_from_string(const std::string& s);
KernelScope scope_from_string(const std::string& s);

}  // namespace fuseplan
