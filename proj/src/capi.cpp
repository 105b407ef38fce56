#include "fuseplan.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>

#include "fuseplan/calibrate.hpp"
#include "fuseplan/codegen.hpp"
#include "fuseplan/config.hpp"
#include "fuseplan/report.hpp"
#include "fuseplan/tracking.hpp"
#include "json.hpp"

using namespace fuseplan;
using ordered_json = nlohmann::ordered_json;

namespace {

thread_local std::string g_last_error;

fp_status to_status(const Error& e) {
  g_last_error = e.what();
  switch (e.kind()) {
    case ErrorKind::Input:
      return FP_ERR_INPUT;
    case ErrorKind::Infeasible:
      return FP_ERR_INFEASIBLE;
    case ErrorKind::Internal:
      return FP_ERR_INTERNAL;
  }
  return FP_ERR_INTERNAL;
}

template <typename Fn>
fp_status guarded(Fn&& fn) {
  try {
    fn();
    return FP_OK;
  } catch (const Error& e) {
    return to_status(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FP_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<std::pair<int, int>> parse_partition_string(const std::string& s) {
  std::vector<std::pair<int, int>> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    std::string item =
        s.substr(pos, comma == std::string::npos ? std::string::npos
                                                 : comma - pos);
    require(!item.empty(), ErrorKind::Input,
            "invalid interval '' in partition '" + s + "'");
    std::size_t dash = item.find('-');
    try {
      int a, b;
      if (dash == std::string::npos) {
        a = b = std::stoi(item);
      } else {
        a = std::stoi(item.substr(0, dash));
        b = std::stoi(item.substr(dash + 1));
      }
      require(a >= 1 && b >= a, ErrorKind::Input, "invalid interval " + item);
      out.emplace_back(a, b);
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      throw Error(ErrorKind::Input, "invalid interval " + item);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  require(!out.empty(), ErrorKind::Input, "empty partition");
  return out;
}

PlanOptions parse_plan_options(const char* options_json) {
  PlanOptions opts;
  if (options_json == nullptr || *options_json == '\0') return opts;
  ordered_json j;
  try {
    j = ordered_json::parse(options_json);
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorKind::Input, std::string("options: bad JSON: ") + e.what());
  }
  if (j.contains("halo_mode"))
    opts.halo_mode = halo_mode_from_string(j["halo_mode"].get<std::string>());
  if (j.contains("transfer_variant"))
    opts.transfer_variant =
        transfer_variant_from_string(j["transfer_variant"].get<std::string>());
  if (j.contains("force_partition"))
    opts.forced_partition =
        parse_partition_string(j["force_partition"].get<std::string>());
  if (j.contains("tile")) {
    const auto& t = j["tile"];
    opts.forced_tile = TileShape{t.value("x", 1), t.value("y", 1),
                                 t.value("t", 1)};
  }
  return opts;
}

ReportFormat parse_format(const char* format) {
  return report_format_from_string(format ? format : "text");
}

SyntheticSceneSpec parse_synth_spec(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorKind::Input, std::string("synth: bad JSON: ") + e.what());
  }
  SyntheticSceneSpec spec;
  spec.dims.width = j.value("width", 64);
  spec.dims.height = j.value("height", 64);
  spec.dims.frames = j.value("frames", 32);
  spec.dims.channels = j.value("channels", 4);
  spec.dims.fps = j.value("fps", 1);
  spec.noise_sigma = j.value("noise_sigma", 0.0);
  spec.background = j.value("background", 0.0);
  spec.seed = j.value("seed", std::uint64_t(0));
  if (j.contains("markers"))
    for (const auto& jm : j["markers"]) {
      MarkerSpec m;
      m.start_x = jm.value("x", 0.0);
      m.start_y = jm.value("y", 0.0);
      m.vx = jm.value("vx", 0.0);
      m.vy = jm.value("vy", 0.0);
      m.radius = jm.value("radius", 3.0);
      m.intensity = jm.value("intensity", 255.0);
      spec.markers.push_back(m);
    }
  return spec;
}

// The three §-style fusion options the run report compares: every kernel
// alone, the first two of each segment fused, and whole segments fused.
std::vector<std::pair<std::string, PlanOptions>> fusion_option_set(
    const Pipeline& pipeline, const PlanOptions& base) {
  auto segments = fusible_segments(pipeline);
  std::vector<std::pair<int, int>> none, two, full;
  for (const auto& s : segments) {
    for (int k = s.first_id; k <= s.last_id; ++k) none.emplace_back(k, k);
    if (s.size() >= 3) {
      two.emplace_back(s.first_id, s.first_id + 1);
      two.emplace_back(s.first_id + 2, s.last_id);
    } else {
      two.emplace_back(s.first_id, s.last_id);
    }
    full.emplace_back(s.first_id, s.last_id);
  }
  PlanOptions o_none = base, o_two = base, o_full = base;
  o_none.forced_partition = none;
  o_two.forced_partition = two;
  o_full.forced_partition = full;
  return {{"No Fusion", o_none}, {"Two Fusion", o_two}, {"Full Fusion", o_full}};
}

}  // namespace

struct fp_pipeline {
  Pipeline p;
};
struct fp_device {
  Device d;
};
struct fp_plan {
  FusionPlan plan;
};

extern "C" {

const char* fp_last_error(void) { return g_last_error.c_str(); }

void fp_string_free(char* s) { delete[] s; }

fp_status fp_pipeline_parse(const char* json_text, fp_pipeline** out) {
  return guarded([&] {
    require(json_text && out, ErrorKind::Input, "null argument");
    *out = new fp_pipeline{parse_pipeline(json_text)};
  });
}

fp_status fp_pipeline_load(const char* path, fp_pipeline** out) {
  return guarded([&] {
    require(path && out, ErrorKind::Input, "null argument");
    *out = new fp_pipeline{load_pipeline_file(path)};
  });
}

void fp_pipeline_free(fp_pipeline* p) { delete p; }

fp_status fp_device_parse(const char* json_text, fp_device** out) {
  return guarded([&] {
    require(json_text && out, ErrorKind::Input, "null argument");
    *out = new fp_device{parse_device(json_text)};
  });
}

fp_status fp_device_load(const char* path_or_name, fp_device** out) {
  return guarded([&] {
    require(path_or_name && out, ErrorKind::Input, "null argument");
    *out = new fp_device{load_device_file(path_or_name)};
  });
}

void fp_device_free(fp_device* d) { delete d; }

fp_status fp_plan_create(const fp_pipeline* p, const fp_device* d,
                         const char* options_json, fp_plan** out) {
  return guarded([&] {
    require(p && d && out, ErrorKind::Input, "null argument");
    *out = new fp_plan{plan(p->p, d->d, parse_plan_options(options_json))};
  });
}

void fp_plan_free(fp_plan* plan) { delete plan; }

fp_status fp_plan_render_json(const fp_plan* plan, char** out) {
  return guarded([&] {
    require(plan && out, ErrorKind::Input, "null argument");
    *out = dup_string(render_plan(plan->plan));
  });
}

fp_status fp_analyze_report(const fp_pipeline* p, const char* format,
                            int with_timestamp, char** out) {
  return guarded([&] {
    require(p && out, ErrorKind::Input, "null argument");
    ReportOptions ro{parse_format(format), with_timestamp != 0};
    *out = dup_string(analyze_report(p->p, ro));
  });
}

fp_status fp_plan_report(const fp_plan* plan, const char* format,
                         int with_timestamp, char** out) {
  return guarded([&] {
    require(plan && out, ErrorKind::Input, "null argument");
    ReportOptions ro{parse_format(format), with_timestamp != 0};
    *out = dup_string(plan_report(plan->plan, ro));
  });
}

fp_status fp_tile_sweep(const fp_device* d, const int halo[6], int max_x,
                        int max_t, const char* format, char** out) {
  return guarded([&] {
    require(d && halo && out, ErrorKind::Input, "null argument");
    Halo h{halo[0], halo[1], halo[2], halo[3], halo[4], halo[5]};
    h.validate();
    std::int64_t budget = d->d.smem_bytes / 4;  // float elements
    auto rows = tile_sweep(h, budget, max_x, max_t);
    ReportOptions ro{parse_format(format), false};
    *out = dup_string(tile_sweep_report(rows, ro));
  });
}

fp_status fp_codegen(const fp_pipeline* p, const fp_device* d,
                     const char* options_json, const char* name,
                     const char* out_dir, char** manifest_out) {
  return guarded([&] {
    require(p && d && name && out_dir && manifest_out, ErrorKind::Input,
            "null argument");
    FusionPlan fplan = plan(p->p, d->d, parse_plan_options(options_json));
    CodegenOutput cg = generate_plan_sources(fplan, p->p, d->d, name);
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    for (const auto& [file, kernel] : cg.files)
      write_text_file((fs::path(out_dir) / file).string(), kernel.source_text);
    write_text_file((fs::path(out_dir) / (std::string(name) + "_manifest.json"))
                        .string(),
                    cg.manifest_json);
    *manifest_out = dup_string(cg.manifest_json);
  });
}

fp_status fp_simulate(const fp_pipeline* p, const fp_device* d,
                      const char* options_json, const char* video_path,
                      const char* synth_json, const char* track_csv_path,
                      const char* format, int with_timestamp, char** out) {
  return guarded([&] {
    require(p && d && out, ErrorKind::Input, "null argument");
    require((video_path != nullptr) != (synth_json != nullptr),
            ErrorKind::Input, "exactly one of video file / synth spec needed");
    PlanOptions base = parse_plan_options(options_json);

    VideoData video;
    SyntheticScene scene;
    bool have_truth = false;
    if (video_path) {
      video = read_video_file(video_path);
    } else {
      SyntheticSceneSpec spec = parse_synth_spec(synth_json);
      scene = synth_video(spec);
      video = scene.video;
      have_truth = !spec.markers.empty();
    }
    require(video.dims.width == p->p.video.width &&
                video.dims.height == p->p.video.height &&
                video.dims.frames == p->p.video.frames &&
                video.dims.channels == p->p.video.channels,
            ErrorKind::Input, "video does not match pipeline dimensions");

    RunReport report;
    report.executed = plan(p->p, d->d, base);
    for (auto& [name, opts] : fusion_option_set(p->p, base)) {
      try {
        report.options.push_back(option_metrics(name, p->p, d->d, opts));
      } catch (const Error&) {
        // An infeasible comparison option is omitted, not fatal.
      }
    }

    SequentialResult seq = run_sequential(p->p, video);
    TiledResult tiled = run_tiled(report.executed, p->p, video);
    report.simulated = true;
    report.measured_serial = seq.traffic;
    report.measured_tiled = tiled.traffic;
    report.analytic_serial = transfer_serial(
        seq.executed_kernels, 1,
        TileShape{video.dims.width, video.dims.height, video.dims.frames});
    for (const auto& g : report.executed.groups)
      report.analytic_fused_exact += g.transfer_exact;

    // Erosion for the diff split: the per-side shortfall of the staged
    // halo against the exact cumulative requirement (nonzero only under
    // max-composition), measured on the first tiled group.
    Halo erode;
    const TileShape* grid = nullptr;
    TileShape grid_tile;
    for (const auto& g : report.executed.groups) {
      if (!g.tiled) continue;
      std::span<const KernelDesc> members(
          p->p.kernels.data() + (g.first - 1),
          std::size_t(g.last - g.first + 1));
      Halo cum = fused_halo(members, HaloMode::Cumulative);
      erode.x_lo = std::max(erode.x_lo, cum.x_lo - g.halo.x_lo);
      erode.x_hi = std::max(erode.x_hi, cum.x_hi - g.halo.x_hi);
      erode.y_lo = std::max(erode.y_lo, cum.y_lo - g.halo.y_lo);
      erode.y_hi = std::max(erode.y_hi, cum.y_hi - g.halo.y_hi);
      erode.t_lo = std::max(erode.t_lo, cum.t_lo - g.halo.t_lo);
      erode.t_hi = std::max(erode.t_hi, cum.t_hi - g.halo.t_hi);
      if (!grid) {
        grid_tile = g.tile;
        grid = &grid_tile;
      }
    }
    report.diff = compare_outputs(seq.final_output, tiled.final_output, erode,
                                  grid);
    report.outputs_identical = report.diff.diff_count == 0;
    if (report.measured_serial.gmem_total() > 0)
      report.traffic_reduction_pct =
          100.0 * (1.0 - double(report.measured_tiled.gmem_total()) /
                             double(report.measured_serial.gmem_total()));

    if (track_csv_path) {
      require(have_truth, ErrorKind::Input,
              "tracking output needs a synthetic scene with markers");
      require(tiled.final_output.dims.channels == 1, ErrorKind::Input,
              "tracking needs a single-channel mask output");
      std::vector<Rect> rois;
      SyntheticSceneSpec spec = parse_synth_spec(synth_json);
      for (const auto& m : spec.markers) {
        int side = 2 * int(std::ceil(m.radius)) + 9;
        rois.push_back(Rect{int(std::lround(m.start_x)) - side / 2,
                            int(std::lround(m.start_y)) - side / 2, side,
                            side});
      }
      auto trajectories = track_features(tiled.final_output, rois);
      write_text_file(track_csv_path, trajectories_to_csv(trajectories));
    }

    ReportOptions ro{parse_format(format), with_timestamp != 0};
    *out = dup_string(run_report_to_string(report, ro));
  });
}

fp_status fp_calibrate_csv(const char* measurements_csv, char** result_json) {
  return guarded([&] {
    require(measurements_csv && result_json, ErrorKind::Input, "null argument");
    CalibrationResult r = calibrate(parse_measurements_csv(measurements_csv));
    ordered_json j;
    j["params"] = {{"gmem_cost_per_elem", r.params.gmem_cost_per_elem},
                   {"smem_cost_per_elem", r.params.smem_cost_per_elem},
                   {"compute_cost_unit", r.params.compute_cost_unit},
                   {"launch_overhead", r.params.launch_overhead}};
    j["residual_rms"] = r.residual_rms;
    *result_json = dup_string(j.dump(2) + "\n");
  });
}

fp_status fp_device_render_with_cost(const fp_device* d,
                                     const char* params_json, char** out) {
  return guarded([&] {
    require(d && params_json && out, ErrorKind::Input, "null argument");
    ordered_json j;
    try {
      j = ordered_json::parse(params_json);
    } catch (const ordered_json::exception& e) {
      throw Error(ErrorKind::Input, std::string("params: bad JSON: ") +
                                        e.what());
    }
    if (j.contains("params")) j = j["params"];
    Device dev = d->d;
    dev.cost.gmem_cost_per_elem =
        j.value("gmem_cost_per_elem", dev.cost.gmem_cost_per_elem);
    dev.cost.smem_cost_per_elem =
        j.value("smem_cost_per_elem", dev.cost.smem_cost_per_elem);
    dev.cost.compute_cost_unit =
        j.value("compute_cost_unit", dev.cost.compute_cost_unit);
    dev.cost.launch_overhead =
        j.value("launch_overhead", dev.cost.launch_overhead);
    *out = dup_string(render_device(dev));
  });
}

}  // extern "C"
