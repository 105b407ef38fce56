// Shared fixtures for the test suites.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "fuseplan/config.hpp"
#include "fuseplan/dependency.hpp"
#include "fuseplan/stencil_catalog.hpp"
#include "fuseplan/video.hpp"

namespace fuseplan::test {

inline std::string data_path(const std::string& file) {
  return std::string(FUSEPLAN_DATA_DIR) + "/" + file;
}

inline std::string golden_path(const std::string& file) {
  return std::string(FUSEPLAN_GOLDEN_DIR) + "/" + file;
}

inline KernelDesc make_kernel(int id, const std::string& op,
                              StencilParams params = {}) {
  const StencilOpInfo& info = stencil_op_info(op);
  KernelDesc k;
  k.id = id;
  k.name = op + "_" + std::to_string(id);
  k.stencil_op = op;
  k.params = std::move(params);
  k.halo = stencil_op_halo(op, k.params);
  k.multi_frame = info.causal_recurrence || info.global_aggregation;
  k.op_type = classify_operation(k.halo, k.multi_frame).primary;
  k.scope = info.global_aggregation ? KernelScope::GlobalAggregation
                                    : KernelScope::TileLocal;
  k.in_channels = info.in_channels;
  k.out_channels = info.out_channels;
  k.compute_weight = stencil_op_default_weight(op, k.params);
  return k;
}

inline Pipeline make_pipeline(
    VideoDims video,
    const std::vector<std::pair<std::string, StencilParams>>& ops) {
  Pipeline p;
  p.video = video;
  int id = 0;
  for (const auto& [op, params] : ops)
    p.kernels.push_back(make_kernel(++id, op, params));
  p.validate();
  return p;
}

inline Device make_device(std::int64_t smem_bytes = 49152) {
  Device d;
  d.name = "test_device";
  d.smem_bytes = smem_bytes;
  d.sm_count = 13;
  return d;
}

inline Pipeline bundled_pipeline() {
  return load_pipeline_file(data_path("vision_pipeline.json"));
}

// Random single-channel tile-local chain for the randomized suites.
inline Pipeline random_chain(std::mt19937_64& rng, int max_len = 5,
                             bool allow_recurrence = true) {
  std::uniform_int_distribution<int> dim_pick(0, 3);
  const int sizes[4] = {8, 16, 24, 32};
  VideoDims v;
  v.width = sizes[dim_pick(rng)];
  v.height = sizes[dim_pick(rng)];
  v.frames = sizes[dim_pick(rng)] / 2;
  v.channels = 1;
  std::vector<std::pair<std::string, StencilParams>> ops;
  std::uniform_int_distribution<int> len_pick(2, max_len);
  std::uniform_int_distribution<int> op_pick(0, 6);
  int len = len_pick(rng);
  for (int i = 0; i < len; ++i) {
    switch (op_pick(rng)) {
      case 0:
        ops.emplace_back("identity", StencilParams{});
        break;
      case 1:
        ops.emplace_back("scale_offset",
                         StencilParams{{"scale", 1.5}, {"offset", 3.0}});
        break;
      case 2:
        ops.emplace_back("gaussian", StencilParams{{"radius", 1}, {"sigma", 1.0}});
        break;
      case 3:
        ops.emplace_back("gradient", StencilParams{});
        break;
      case 4:
        ops.emplace_back("threshold", StencilParams{{"th", 32.0}});
        break;
      case 5:
        ops.emplace_back("box_mean", StencilParams{{"radius_x", 1},
                                                   {"radius_y", 1},
                                                   {"radius_t", 1}});
        break;
      default:
        if (allow_recurrence)
          ops.emplace_back("iir_temporal", StencilParams{{"alpha", 0.25}});
        else
          ops.emplace_back("identity", StencilParams{});
        break;
    }
  }
  return make_pipeline(v, ops);
}

inline VideoData random_video(const VideoDims& dims, std::uint64_t seed) {
  VideoData v = VideoData::zeros(dims);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(0.0f, 255.0f);
  for (float& f : v.data) f = dist(rng);
  return v;
}

}  // namespace fuseplan::test
