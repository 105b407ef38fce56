// Fused-kernel source emission: staging prologue, access-rewritten member
// bodies with barriers at TMT boundaries, write-back epilogue.
#pragma once

#include "fuseplan/planner.hpp"

namespace fuseplan {

struct EmittedKernel {
  std::string name;
  std::string source_text;
  std::vector<int> sync_points;   // member index each barrier follows (-1 = staging)
  std::int64_t staged_buffer_elems = 0;
  int staged_arrays = 1;          // 2 when ping-pong staging was needed
  int threads_x = 1, threads_y = 1;
  int pixels_per_thread_x = 1, pixels_per_thread_y = 1;
};

EmittedKernel generate_fused_source(std::span<const KernelDesc> group,
                                    const TileShape& tile, const Halo& halo,
                                    const Device& device,
                                    const std::string& name);

// Rewrites a canonical global access "base[i+ii(+c), j+jj(+c)(, k+kk(+c))]"
// into a staged access with the block offset dropped and the halo low pad
// folded into the constant displacement.
std::string rewrite_access(const std::string& access, const Halo& halo,
                           const std::string& staged_name = "staged");

struct CodegenOutput {
  std::vector<std::pair<std::string, EmittedKernel>> files;  // filename, kernel
  std::string manifest_json;
};

CodegenOutput generate_plan_sources(const FusionPlan& plan,
                                    const Pipeline& pipeline,
                                    const Device& device,
                                    const std::string& pipeline_name);

}  // namespace fuseplan
