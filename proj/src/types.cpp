#include "fuseplan/types.hpp"

namespace fuseplan {

void VideoDims::validate() const {
  require(width >= 1, ErrorKind::Input, "video.width must be >= 1");
  require(height >= 1, ErrorKind::Input, "video.height must be >= 1");
  require(frames >= 1, ErrorKind::Input, "video.frames must be >= 1");
  require(fps >= 1, ErrorKind::Input, "video.fps must be >= 1");
  require(channels == 1 || channels == 3 || channels == 4, ErrorKind::Input,
          "video.channels must be 1, 3 or 4");
}

std::int64_t frame_count(std::int64_t duration_seconds, std::int64_t fps) {
  require(duration_seconds >= 0, ErrorKind::Input, "duration must be >= 0");
  require(fps >= 1, ErrorKind::Input, "fps must be >= 1");
  return duration_seconds * fps;
}

void Halo::validate() const {
  require(x_lo >= 0 && x_hi >= 0 && y_lo >= 0 && y_hi >= 0 && t_lo >= 0 &&
              t_hi >= 0,
          ErrorKind::Input, "negative halo");
}

void CostParams::validate() const {
  require(gmem_cost_per_elem >= 0 && smem_cost_per_elem >= 0 &&
              compute_cost_unit >= 0 && launch_overhead >= 0,
          ErrorKind::Input, "cost parameters must be >= 0");
}

void Device::validate() const {
  require(!name.empty(), ErrorKind::Input, "device.name missing");
  require(smem_bytes > 0, ErrorKind::Input, "device.smem_bytes must be > 0");
  require(sm_count >= 1, ErrorKind::Input, "device.sm_count must be >= 1");
  require(warp_size >= 1, ErrorKind::Input, "device.warp_size must be >= 1");
  require(max_threads_per_block >= 1, ErrorKind::Input,
          "device.max_threads_per_block must be >= 1");
  require(max_blocks_per_sm >= 1, ErrorKind::Input,
          "device.max_blocks_per_sm must be >= 1");
  require(max_warps_per_sm >= 1, ErrorKind::Input,
          "device.max_warps_per_sm must be >= 1");
  cost.validate();
}

const char* to_string(OperationType t) {
  switch (t) {
    case OperationType::SinglePoint: return "single_point";
    case OperationType::Rectangular: return "rectangular";
    case OperationType::SingleFrame: return "single_frame";
    case OperationType::MultiFrame: return "multi_frame";
    case OperationType::SpatioTemporal: return "spatio_temporal";
  }
  return "?";
}

const char* to_string(DependencyType t) {
  switch (t) {
    case DependencyType::TT: return "TT";
    case DependencyType::TMT: return "TMT";
    case DependencyType::KK: return "KK";
  }
  return "?";
}

const char* to_string(KernelScope s) {
  return s == KernelScope::TileLocal ? "tile_local" : "global_aggregation";
}

OperationType operation_type_from_string(const std::string& s) {
  if (s == "single_point") return OperationType::SinglePoint;
  if (s == "rectangular") return OperationType::Rectangular;
  if (s == "single_frame") return OperationType::SingleFrame;
  if (s == "multi_frame") return OperationType::MultiFrame;
  if (s == "spatio_temporal") return OperationType::SpatioTemporal;
  throw Error(ErrorKind::Input, "unknown op_type: " + s);
}

KernelScope scope_from_string(const std::string& s) {
  if (s == "tile_local") return KernelScope::TileLocal;
  if (s == "global_aggregation") return KernelScope::GlobalAggregation;
  throw Error(ErrorKind::Input, "unknown scope: " + s);
}

}  // namespace fuseplan
