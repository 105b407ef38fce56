#include "fuseplan/stencil_catalog.hpp"

#include <cmath>
#include <unordered_map>

namespace fuseplan {

namespace {

const std::unordered_map<std::string, StencilOpInfo>& catalog() {
  static const std::unordered_map<std::string, StencilOpInfo> ops = {
      {"rgba2gray", {"rgba2gray", 4, 1, false, false}},
      {"iir_temporal", {"iir_temporal", 1, 1, true, false}},
      {"gaussian", {"gaussian", 1, 1, false, false}},
      {"gradient", {"gradient", 1, 1, false, false}},
      {"threshold", {"threshold", 1, 1, false, false}},
      {"identity", {"identity", 1, 1, false, false}},
      {"scale_offset", {"scale_offset", 1, 1, false, false}},
      {"box_mean", {"box_mean", 1, 1, false, false}},
      {"kalman_track", {"kalman_track", 1, 1, false, true}},
  };
  return ops;
}

int int_param(const StencilParams& params, const std::string& key, int dflt) {
  auto it = params.find(key);
  return it == params.end() ? dflt : int(std::llround(it->second));
}

}  // namespace

bool stencil_op_known(const std::string& name) {
  return catalog().count(name) != 0;
}

const StencilOpInfo& stencil_op_info(const std::string& name) {
  auto it = catalog().find(name);
  require(it != catalog().end(), ErrorKind::Input,
          "unknown stencil_op: " + name);
  return it->second;
}

Halo stencil_op_halo(const std::string& name, const StencilParams& params) {
  const auto& info = stencil_op_info(name);
  if (name == "gaussian") {
    int r = int_param(params, "radius", 2);
    return Halo::symmetric(r, r);
  }
  if (name == "gradient") return Halo::symmetric(1, 1);
  if (name == "box_mean") {
    int rx = int_param(params, "radius_x", 1);
    int ry = int_param(params, "radius_y", 1);
    int rt = int_param(params, "radius_t", 0);
    return Halo::symmetric(rx, ry, rt);
  }
  (void)info;
  return Halo{};  // point ops, the IIR recurrence, and tracking
}

double stencil_op_default_weight(const std::string& name,
                                 const StencilParams& params) {
  if (name == "iir_temporal") return 2.0;
  Halo h = stencil_op_halo(name, params);
  if (h.zero()) return 1.0;
  return double(h.dx() + 1) * (h.dy() + 1) * (h.dt() + 1);
}

}  // namespace fuseplan
