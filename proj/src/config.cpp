#include "fuseplan/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fuseplan/dependency.hpp"
#include "fuseplan/stencil_catalog.hpp"
#include "json.hpp"

namespace fuseplan {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string kernel_ctx(int id) {
  return "kernel " + std::to_string(id) + ": ";
}

Halo parse_halo(const json& j, int id) {
  Halo h;
  h.x_lo = j.value("x_lo", 0);
  h.x_hi = j.value("x_hi", 0);
  h.y_lo = j.value("y_lo", 0);
  h.y_hi = j.value("y_hi", 0);
  h.t_lo = j.value("t_lo", 0);
  h.t_hi = j.value("t_hi", 0);
  try {
    h.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Input, kernel_ctx(id) + e.what());
  }
  return h;
}

// An explicit op_type must agree with the halo-derived classification. The
// IIR case (zero halo, recurrence on its own output) may keep a single-point
// type with the multi-frame flag set.
void check_op_type(const KernelDesc& k) {
  OperationClass expected = classify_operation(k.halo, k.multi_frame);
  if (k.op_type == expected.primary) return;
  if (k.op_type == OperationType::SinglePoint && k.halo.zero()) return;
  if (k.op_type == OperationType::SingleFrame && expected.single_frame)
    return;
  throw Error(ErrorKind::Input,
              kernel_ctx(k.id) + "op_type '" + to_string(k.op_type) +
                  "' does not match halo (expected '" +
                  to_string(expected.primary) + "')");
}

}  // namespace

void Pipeline::validate() const {
  video.validate();
  require(!kernels.empty(), ErrorKind::Input, "pipeline needs >= 1 kernel");
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    const KernelDesc& k = kernels[i];
    require(k.id == int(i) + 1, ErrorKind::Input,
            kernel_ctx(k.id) + "ids must be 1..n in order");
    k.halo.validate();
    require(k.compute_weight >= 0, ErrorKind::Input,
            kernel_ctx(k.id) + "compute_weight must be >= 0");
    require(k.in_bytes_per_elem >= 1 && k.out_bytes_per_elem >= 1,
            ErrorKind::Input, kernel_ctx(k.id) + "bytes_per_elem must be >= 1");
    const StencilOpInfo& info = stencil_op_info(k.stencil_op);
    require(k.in_channels == info.in_channels &&
                k.out_channels == info.out_channels,
            ErrorKind::Input,
            kernel_ctx(k.id) + "channels do not match stencil_op '" +
                k.stencil_op + "'");
    Halo natural = stencil_op_halo(k.stencil_op, k.params);
    require(k.halo == natural, ErrorKind::Input,
            kernel_ctx(k.id) + "halo does not match stencil_op '" +
                k.stencil_op + "'");
    require((k.scope == KernelScope::GlobalAggregation) ==
                info.global_aggregation,
            ErrorKind::Input,
            kernel_ctx(k.id) + "scope does not match stencil_op '" +
                k.stencil_op + "'");
    check_op_type(k);
    if (i == 0) {
      require(video.channels == k.in_channels, ErrorKind::Input,
              kernel_ctx(k.id) + "input channels (" +
                  std::to_string(k.in_channels) +
                  ") do not match video channels (" +
                  std::to_string(video.channels) + ")");
    } else {
      require(kernels[i - 1].out_channels == k.in_channels, ErrorKind::Input,
              kernel_ctx(k.id) + "input channels do not match kernel " +
                  std::to_string(k.id - 1) + " output channels");
    }
  }
}

Pipeline parse_pipeline(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Input, std::string("pipeline: bad JSON: ") +
                                      e.what());
  }
  Pipeline p;
  try {
    const json& v = j.at("video");
    p.video.width = v.at("width").get<int>();
    p.video.height = v.at("height").get<int>();
    p.video.fps = v.value("fps", 1);
    if (v.contains("frames")) {
      p.video.frames = v.at("frames").get<int>();
    } else if (v.contains("duration_seconds")) {
      p.video.frames =
          int(frame_count(v.at("duration_seconds").get<int>(), p.video.fps));
    } else {
      throw Error(ErrorKind::Input, "video: frames or duration_seconds required");
    }
    p.video.channels = v.value("channels", 1);

    int id = 0;
    for (const json& jk : j.at("kernels")) {
      KernelDesc k;
      k.id = ++id;
      k.name = jk.value("name", "K" + std::to_string(id));
      k.stencil_op = jk.at("stencil_op").get<std::string>();
      const StencilOpInfo& info = stencil_op_info(k.stencil_op);
      if (jk.contains("params"))
        for (auto& [key, val] : jk.at("params").items())
          k.params[key] = val.get<double>();
      k.halo = jk.contains("halo") ? parse_halo(jk.at("halo"), id)
                                   : stencil_op_halo(k.stencil_op, k.params);
      k.multi_frame = jk.value("multi_frame", info.causal_recurrence ||
                                                  info.global_aggregation);
      k.op_type =
          jk.contains("op_type")
              ? operation_type_from_string(jk.at("op_type").get<std::string>())
              : classify_operation(k.halo, k.multi_frame).primary;
      k.scope = jk.contains("scope")
                    ? scope_from_string(jk.at("scope").get<std::string>())
                    : (info.global_aggregation
                           ? KernelScope::GlobalAggregation
                           : KernelScope::TileLocal);
      k.in_channels = info.in_channels;
      k.out_channels = info.out_channels;
      k.in_bytes_per_elem = jk.value("in_bytes_per_elem", 4);
      k.out_bytes_per_elem = jk.value("out_bytes_per_elem", 4);
      k.compute_weight = jk.value(
          "compute_weight", stencil_op_default_weight(k.stencil_op, k.params));
      p.kernels.push_back(std::move(k));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Input,
                std::string("pipeline: schema violation: ") + e.what());
  }
  p.validate();
  return p;
}

Device parse_device(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Input, std::string("device: bad JSON: ") + e.what());
  }
  Device d;
  try {
    d.name = j.at("name").get<std::string>();
    d.smem_bytes = j.at("smem_bytes").get<std::int64_t>();
    d.sm_count = j.at("sm_count").get<int>();
    d.warp_size = j.value("warp_size", 32);
    d.max_threads_per_block = j.value("max_threads_per_block", 1024);
    d.max_blocks_per_sm = j.value("max_blocks_per_sm", 16);
    d.max_warps_per_sm = j.value("max_warps_per_sm", 64);
    if (j.contains("cost")) {
      const json& c = j.at("cost");
      d.cost.gmem_cost_per_elem = c.value("gmem_cost_per_elem", 100.0);
      d.cost.smem_cost_per_elem = c.value("smem_cost_per_elem", 1.0);
      d.cost.compute_cost_unit = c.value("compute_cost_unit", 1.0);
      d.cost.launch_overhead = c.value("launch_overhead", 10000.0);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Input,
                std::string("device: missing field: ") + e.what());
  }
  d.validate();
  return d;
}

std::string render_pipeline(const Pipeline& p) {
  ordered_json j;
  j["video"] = {{"width", p.video.width},
                {"height", p.video.height},
                {"frames", p.video.frames},
                {"fps", p.video.fps},
                {"channels", p.video.channels}};
  j["kernels"] = ordered_json::array();
  for (const KernelDesc& k : p.kernels) {
    ordered_json jk;
    jk["name"] = k.name;
    jk["op_type"] = to_string(k.op_type);
    jk["multi_frame"] = k.multi_frame;
    jk["halo"] = {{"x_lo", k.halo.x_lo}, {"x_hi", k.halo.x_hi},
                  {"y_lo", k.halo.y_lo}, {"y_hi", k.halo.y_hi},
                  {"t_lo", k.halo.t_lo}, {"t_hi", k.halo.t_hi}};
    jk["scope"] = to_string(k.scope);
    jk["stencil_op"] = k.stencil_op;
    jk["params"] = ordered_json::object();
    for (auto& [key, val] : k.params) jk["params"][key] = val;
    jk["in_bytes_per_elem"] = k.in_bytes_per_elem;
    jk["out_bytes_per_elem"] = k.out_bytes_per_elem;
    jk["compute_weight"] = k.compute_weight;
    j["kernels"].push_back(std::move(jk));
  }
  return j.dump(2) + "\n";
}

std::string render_device(const Device& d) {
  ordered_json j;
  j["name"] = d.name;
  j["smem_bytes"] = d.smem_bytes;
  j["sm_count"] = d.sm_count;
  j["warp_size"] = d.warp_size;
  j["max_threads_per_block"] = d.max_threads_per_block;
  j["max_blocks_per_sm"] = d.max_blocks_per_sm;
  j["max_warps_per_sm"] = d.max_warps_per_sm;
  j["cost"] = {{"gmem_cost_per_elem", d.cost.gmem_cost_per_elem},
               {"smem_cost_per_elem", d.cost.smem_cost_per_elem},
               {"compute_cost_unit", d.cost.compute_cost_unit},
               {"launch_overhead", d.cost.launch_overhead}};
  return j.dump(2) + "\n";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Input, "cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Input, "cannot write file: " + path);
  out << text;
}

Pipeline load_pipeline_file(const std::string& path) {
  return parse_pipeline(read_text_file(path));
}

Device load_device_file(const std::string& path_or_name) {
  namespace fs = std::filesystem;
  std::string path = path_or_name;
  if (!fs::exists(path)) {
    if (const char* dir = std::getenv("FUSEPLAN_DEVICE_DIR")) {
      fs::path candidate = fs::path(dir) / (path_or_name + ".json");
      if (fs::exists(candidate)) path = candidate.string();
    }
  }
  return parse_device(read_text_file(path));
}

}  // namespace fuseplan
