// fuseplan: dependency analysis, fusion planning, tile sweeps, codegen,
// simulation, and cost-model calibration for stencil pipelines.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fuseplan.h"
#include "json.hpp"

namespace {

using nlohmann::ordered_json;

struct PipelineHandle {
  fp_pipeline* p = nullptr;
  ~PipelineHandle() { fp_pipeline_free(p); }
};
struct DeviceHandle {
  fp_device* d = nullptr;
  ~DeviceHandle() { fp_device_free(d); }
};
struct PlanHandle {
  fp_plan* plan = nullptr;
  ~PlanHandle() { fp_plan_free(plan); }
};

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { fp_string_free(s); }
  std::string str() const { return s ? s : ""; }
};

int fail(fp_status st) {
  std::cerr << "error: " << fp_last_error() << "\n";
  return int(st);
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out.good()) throw CLI::RuntimeError("cannot write " + out_path, 2);
  out << text;
}

struct CommonOpts {
  std::string format = "text";
  std::string halo_mode;
  std::string transfer_variant;
  std::string force_partition;
  std::string tile;
  bool no_timestamp = false;
  std::string out_path;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool plan_opts) {
  cmd->add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"text", "json", "csv"}));
  cmd->add_flag("--no-timestamp", o.no_timestamp,
                "Omit the generation timestamp (for reproducible output)");
  cmd->add_option("-o,--output", o.out_path, "Write output to a file");
  if (plan_opts) {
    cmd->add_option("--halo-mode", o.halo_mode, "Halo composition mode")
        ->check(CLI::IsMember({"paper-max", "cumulative"}));
    cmd->add_option("--transfer-variant", o.transfer_variant,
                    "Transfer accounting variant")
        ->check(CLI::IsMember({"paper", "exact"}));
    cmd->add_option("--force-partition", o.force_partition,
                    "Forced fusion partition, e.g. \"1-2,3-5\"");
    cmd->add_option("--tile", o.tile, "Forced tile shape \"x,y,t\"");
  }
}

std::string options_json(const CommonOpts& o) {
  ordered_json j = ordered_json::object();
  if (!o.halo_mode.empty()) j["halo_mode"] = o.halo_mode;
  if (!o.transfer_variant.empty()) j["transfer_variant"] = o.transfer_variant;
  if (!o.force_partition.empty()) j["force_partition"] = o.force_partition;
  if (!o.tile.empty()) {
    std::istringstream ss(o.tile);
    int x = 0, y = 0, t = 0;
    char c1 = 0, c2 = 0;
    if (!(ss >> x >> c1 >> y >> c2 >> t) || c1 != ',' || c2 != ',')
      throw CLI::ValidationError("--tile expects \"x,y,t\"");
    j["tile"] = {{"x", x}, {"y", y}, {"t", t}};
  }
  return j.dump();
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(std::stoi(item));
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw CLI::RuntimeError("cannot open " + path, 2);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel-fusion planning toolkit for stencil video pipelines"};
  app.require_subcommand(1);

  // analyze
  auto* analyze = app.add_subcommand(
      "analyze", "Classify inter-kernel dependencies and fusible segments");
  std::string an_pipeline;
  CommonOpts an_opts;
  analyze->add_option("pipeline", an_pipeline, "Pipeline JSON file")
      ->required();
  add_common(analyze, an_opts, false);

  // plan
  auto* plan_cmd =
      app.add_subcommand("plan", "Select the cost-optimal fusion partition");
  std::string pl_pipeline, pl_device;
  CommonOpts pl_opts;
  plan_cmd->add_option("pipeline", pl_pipeline, "Pipeline JSON file")
      ->required();
  plan_cmd->add_option("device", pl_device, "Device profile (path or name)")
      ->required();
  add_common(plan_cmd, pl_opts, true);

  // tile
  auto* tile_cmd = app.add_subcommand(
      "tile", "Sweep tile shapes against the device SHMEM budget");
  std::string ti_device, ti_halo = "0,0,0", ti_sweep = "32,32";
  CommonOpts ti_opts;
  tile_cmd->add_option("device", ti_device, "Device profile (path or name)")
      ->required();
  tile_cmd->add_option("--halo", ti_halo,
                       "Halo: \"rx,ry,rt\" (symmetric) or six per-side values");
  tile_cmd->add_option("--sweep", ti_sweep, "Sweep bounds \"max_x,max_t\"");
  add_common(tile_cmd, ti_opts, false);

  // codegen
  auto* cg_cmd = app.add_subcommand(
      "codegen", "Emit fused-kernel sources for the planned partition");
  std::string cg_pipeline, cg_device, cg_dir = ".", cg_name = "pipeline";
  CommonOpts cg_opts;
  cg_cmd->add_option("pipeline", cg_pipeline, "Pipeline JSON file")
      ->required();
  cg_cmd->add_option("device", cg_device, "Device profile (path or name)")
      ->required();
  cg_cmd->add_option("--out-dir", cg_dir, "Directory for .genkernel files");
  cg_cmd->add_option("--name", cg_name, "Base name for emitted files");
  add_common(cg_cmd, cg_opts, true);

  // simulate
  auto* sim_cmd = app.add_subcommand(
      "simulate",
      "Run the sequential oracle and the tiled plan; compare and report");
  std::string sm_pipeline, sm_device, sm_video, sm_synth, sm_track;
  std::uint64_t sm_seed = 0;
  CommonOpts sm_opts;
  sim_cmd->add_option("pipeline", sm_pipeline, "Pipeline JSON file")
      ->required();
  sim_cmd->add_option("device", sm_device, "Device profile (path or name)")
      ->required();
  sim_cmd->add_option("--video", sm_video, "Input video file (FPVD)");
  sim_cmd->add_option("--synth", sm_synth,
                      "Synthetic scene spec (JSON file or inline JSON)");
  sim_cmd->add_option("--track-csv", sm_track,
                      "Write tracking trajectories to this CSV file");
  sim_cmd->add_option("--seed", sm_seed, "Override the synthetic scene seed");
  add_common(sim_cmd, sm_opts, true);

  // calibrate
  auto* cal_cmd = app.add_subcommand(
      "calibrate", "Fit cost-model coefficients from measured timings");
  std::string cal_csv, cal_device, cal_out;
  CommonOpts cal_opts;
  cal_cmd->add_option("measurements", cal_csv, "Measurements CSV file")
      ->required();
  cal_cmd->add_option("--device", cal_device,
                      "Device profile to update with the fitted cost block");
  cal_cmd->add_option("--write-device", cal_out,
                      "Where to write the updated device profile");
  add_common(cal_cmd, cal_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (*analyze) {
      PipelineHandle p;
      if (auto st = fp_pipeline_load(an_pipeline.c_str(), &p.p)) return fail(st);
      OwnedString out;
      if (auto st = fp_analyze_report(p.p, an_opts.format.c_str(),
                                      an_opts.no_timestamp ? 0 : 1, &out.s))
        return fail(st);
      emit(out.str(), an_opts.out_path);
      return 0;
    }

    if (*plan_cmd) {
      PipelineHandle p;
      DeviceHandle d;
      if (auto st = fp_pipeline_load(pl_pipeline.c_str(), &p.p)) return fail(st);
      if (auto st = fp_device_load(pl_device.c_str(), &d.d)) return fail(st);
      PlanHandle plan;
      std::string opts = options_json(pl_opts);
      if (auto st = fp_plan_create(p.p, d.d, opts.c_str(), &plan.plan))
        return fail(st);
      OwnedString out;
      if (auto st = fp_plan_report(plan.plan, pl_opts.format.c_str(),
                                   pl_opts.no_timestamp ? 0 : 1, &out.s))
        return fail(st);
      emit(out.str(), pl_opts.out_path);
      return 0;
    }

    if (*tile_cmd) {
      DeviceHandle d;
      if (auto st = fp_device_load(ti_device.c_str(), &d.d)) return fail(st);
      std::vector<int> h = parse_int_list(ti_halo);
      int halo[6];
      if (h.size() == 3) {
        halo[0] = halo[1] = h[0];
        halo[2] = halo[3] = h[1];
        halo[4] = halo[5] = h[2];
      } else if (h.size() == 6) {
        for (int i = 0; i < 6; ++i) halo[i] = h[std::size_t(i)];
      } else {
        throw CLI::ValidationError("--halo expects 3 or 6 values");
      }
      std::vector<int> sweep = parse_int_list(ti_sweep);
      if (sweep.size() != 2)
        throw CLI::ValidationError("--sweep expects \"max_x,max_t\"");
      OwnedString out;
      if (auto st = fp_tile_sweep(d.d, halo, sweep[0], sweep[1],
                                  ti_opts.format.c_str(), &out.s))
        return fail(st);
      emit(out.str(), ti_opts.out_path);
      return 0;
    }

    if (*cg_cmd) {
      PipelineHandle p;
      DeviceHandle d;
      if (auto st = fp_pipeline_load(cg_pipeline.c_str(), &p.p)) return fail(st);
      if (auto st = fp_device_load(cg_device.c_str(), &d.d)) return fail(st);
      OwnedString manifest;
      std::string opts = options_json(cg_opts);
      if (auto st = fp_codegen(p.p, d.d, opts.c_str(), cg_name.c_str(),
                               cg_dir.c_str(), &manifest.s))
        return fail(st);
      emit(manifest.str(), cg_opts.out_path);
      return 0;
    }

    if (*sim_cmd) {
      PipelineHandle p;
      DeviceHandle d;
      if (auto st = fp_pipeline_load(sm_pipeline.c_str(), &p.p)) return fail(st);
      if (auto st = fp_device_load(sm_device.c_str(), &d.d)) return fail(st);
      if (sm_video.empty() == sm_synth.empty()) {
        std::cerr << "error: exactly one of --video / --synth is required\n";
        return 2;
      }
      std::string synth_text;
      if (!sm_synth.empty()) {
        synth_text = sm_synth.find('{') != std::string::npos
                         ? sm_synth
                         : read_file(sm_synth);
        if (sim_cmd->count("--seed") > 0) {
          ordered_json j = ordered_json::parse(synth_text, nullptr, false);
          if (j.is_discarded()) {
            std::cerr << "error: --synth is not valid JSON\n";
            return 2;
          }
          j["seed"] = sm_seed;
          synth_text = j.dump();
        }
      }
      std::string opts = options_json(sm_opts);
      OwnedString out;
      if (auto st = fp_simulate(
              p.p, d.d, opts.c_str(),
              sm_video.empty() ? nullptr : sm_video.c_str(),
              synth_text.empty() ? nullptr : synth_text.c_str(),
              sm_track.empty() ? nullptr : sm_track.c_str(),
              sm_opts.format.c_str(), sm_opts.no_timestamp ? 0 : 1, &out.s))
        return fail(st);
      emit(out.str(), sm_opts.out_path);
      return 0;
    }

    if (*cal_cmd) {
      std::string csv = read_file(cal_csv);
      OwnedString result;
      if (auto st = fp_calibrate_csv(csv.c_str(), &result.s)) return fail(st);
      emit(result.str(), cal_opts.out_path);
      if (!cal_device.empty() && !cal_out.empty()) {
        DeviceHandle d;
        if (auto st = fp_device_load(cal_device.c_str(), &d.d))
          return fail(st);
        OwnedString updated;
        if (auto st =
                fp_device_render_with_cost(d.d, result.s, &updated.s))
          return fail(st);
        std::ofstream out(cal_out, std::ios::binary);
        if (!out.good()) {
          std::cerr << "error: cannot write " << cal_out << "\n";
          return 2;
        }
        out << updated.str();
      }
      return 0;
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
