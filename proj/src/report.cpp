#include "fuseplan/report.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <sstream>

#include "fuseplan/dependency.hpp"
#include "json.hpp"

namespace fuseplan {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kBufferPolicy =
    "one input buffer plus one output buffer per group";

std::string timestamp_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string partition_string(const std::vector<std::pair<int, int>>& p) {
  std::string s;
  for (auto [a, b] : p) {
    if (!s.empty()) s += ",";
    s += std::to_string(a);
    if (b != a) s += "-" + std::to_string(b);
  }
  return s;
}

std::string dims_string(const VideoDims& v) {
  std::ostringstream ss;
  ss << v.width << "x" << v.height << "x" << v.frames << " (" << v.channels
     << " channel" << (v.channels == 1 ? "" : "s") << ")";
  return ss.str();
}

}  // namespace

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "text") return ReportFormat::Text;
  if (s == "json") return ReportFormat::Json;
  if (s == "csv") return ReportFormat::Csv;
  throw Error(ErrorKind::Input, "unknown format: " + s);
}

std::string analyze_report(const Pipeline& pipeline,
                           const ReportOptions& opts) {
  auto boundaries = classify_boundaries(pipeline);
  auto segments = fusible_segments(pipeline);

  if (opts.format == ReportFormat::Json) {
    ordered_json j;
    j["schema_version"] = 1;
    if (opts.timestamp) j["generated"] = timestamp_now();
    j["video"] = {{"width", pipeline.video.width},
                  {"height", pipeline.video.height},
                  {"frames", pipeline.video.frames},
                  {"channels", pipeline.video.channels}};
    j["kernels"] = ordered_json::array();
    for (const auto& k : pipeline.kernels)
      j["kernels"].push_back({{"id", k.id},
                              {"name", k.name},
                              {"op_type", to_string(k.op_type)},
                              {"scope", to_string(k.scope)}});
    j["boundaries"] = ordered_json::array();
    for (const auto& b : boundaries)
      j["boundaries"].push_back({{"consumer", b.consumer_id},
                                 {"dependency", to_string(b.dep_type)},
                                 {"reason", b.reason}});
    j["segments"] = ordered_json::array();
    for (const auto& s : segments)
      j["segments"].push_back({{"first", s.first_id}, {"last", s.last_id}});
    return j.dump(2) + "\n";
  }
  if (opts.format == ReportFormat::Csv) {
    std::ostringstream ss;
    ss << "boundary,producer,consumer,dependency,reason\n";
    for (std::size_t i = 0; i < boundaries.size(); ++i)
      ss << i + 1 << ',' << boundaries[i].consumer_id - 1 << ','
         << boundaries[i].consumer_id << ',' << to_string(boundaries[i].dep_type)
         << ",\"" << boundaries[i].reason << "\"\n";
    return ss.str();
  }
  std::ostringstream ss;
  ss << "dependency analysis\n";
  if (opts.timestamp) ss << "generated: " << timestamp_now() << "\n";
  ss << "video: " << dims_string(pipeline.video) << "\n";
  ss << "kernels:\n";
  for (const auto& k : pipeline.kernels)
    ss << "  K" << k.id << "  " << k.name << "  [" << to_string(k.op_type)
       << ", " << to_string(k.scope) << "]\n";
  ss << "boundaries:\n";
  for (const auto& b : boundaries)
    ss << "  K" << b.consumer_id - 1 << " -> K" << b.consumer_id << ": "
       << to_string(b.dep_type) << "  (" << b.reason << ")\n";
  ss << "fusible segments: ";
  std::vector<std::pair<int, int>> segs;
  for (const auto& s : segments) segs.emplace_back(s.first_id, s.last_id);
  ss << partition_string(segs) << "\n";
  return ss.str();
}

std::string plan_report(const FusionPlan& plan, const ReportOptions& opts) {
  if (opts.format == ReportFormat::Json) return render_plan(plan);
  if (opts.format == ReportFormat::Csv) {
    std::ostringstream ss;
    ss << "group,first,last,tiled,tile_x,tile_y,tile_t,smem_bytes,"
          "data_utilization,blocks,occupancy,cost,transfer_paper,"
          "transfer_exact\n";
    int i = 0;
    for (const auto& g : plan.groups)
      ss << ++i << ',' << g.first << ',' << g.last << ',' << (g.tiled ? 1 : 0)
         << ',' << g.tile.x << ',' << g.tile.y << ',' << g.tile.t << ','
         << g.smem_bytes_used << ',' << g.du << ',' << g.blocks << ','
         << g.launch.occupancy << ',' << g.cost.total() << ','
         << g.transfer_paper << ',' << g.transfer_exact << '\n';
    return ss.str();
  }
  std::ostringstream ss;
  ss << "fusion plan\n";
  if (opts.timestamp) ss << "generated: " << timestamp_now() << "\n";
  ss << "device: " << plan.device_name << "\n";
  ss << "video: " << dims_string(plan.video) << "\n";
  ss << "halo mode: " << to_string(plan.halo_mode)
     << ", transfer variant: " << to_string(plan.transfer_variant) << "\n";
  ss << "partition: " << partition_string(plan.partition()) << "\n";
  for (const auto& g : plan.groups) {
    ss << "  group K" << g.first << "-K" << g.last << ": ";
    if (g.global_aggregation) {
      ss << "global aggregation stage (runs whole-video)\n";
      continue;
    }
    if (!g.tiled) {
      ss << "whole-frame launch, transfer " << g.transfer_exact
         << " elems, cost " << g.cost.total() << "\n";
      continue;
    }
    ss << "tile " << g.tile.x << "x" << g.tile.y << "x" << g.tile.t
       << ", halo +" << g.halo.dx() << "/+" << g.halo.dy() << "/+"
       << g.halo.dt() << ", smem " << g.smem_bytes_used << " B, DU "
       << std::fixed << std::setprecision(4) << g.du << std::defaultfloat
       << ", occupancy " << g.launch.occupancy << ", cost " << g.cost.total()
       << "\n";
    ss << "    transfers: paper " << g.transfer_paper << ", exact "
       << g.transfer_exact << " elems; blocks " << g.blocks << "\n";
  }
  ss << "total predicted cost: " << plan.total_cost << "\n";
  ss << "gmem buffers: " << plan.buffers.buffers << " ("
     << plan.buffers.bytes << " bytes; policy: " << kBufferPolicy << ")\n";
  return ss.str();
}

std::vector<TileSweepRow> tile_sweep(const Halo& halo,
                                     std::int64_t budget_elems, int max_x,
                                     int max_t) {
  require(max_x >= 1 && max_t >= 1, ErrorKind::Input,
          "sweep bounds must be >= 1");
  std::vector<TileSweepRow> rows;
  for (int x = 1; x <= max_x; ++x)
    for (int t = 1; t <= max_t; ++t) {
      TileSweepRow r;
      r.tile = TileShape{x, x, t};
      r.feasible = input_box(r.tile, halo).volume() <= budget_elems;
      r.du = r.feasible ? data_utilization(r.tile, halo) : 0.0;
      r.v = objective_v(r.tile, halo);
      rows.push_back(r);
    }
  return rows;
}

std::string tile_sweep_report(const std::vector<TileSweepRow>& rows,
                              const ReportOptions& opts) {
  if (opts.format == ReportFormat::Json) {
    ordered_json j = ordered_json::array();
    for (const auto& r : rows)
      j.push_back({{"x", r.tile.x},
                   {"y", r.tile.y},
                   {"t", r.tile.t},
                   {"du", r.du},
                   {"v", r.v},
                   {"feasible", r.feasible}});
    return j.dump(2) + "\n";
  }
  // Fig 7-style plot data; text and CSV share the CSV layout.
  std::ostringstream ss;
  ss << "x,y,t,du,v,feasible\n";
  for (const auto& r : rows)
    ss << r.tile.x << ',' << r.tile.y << ',' << r.tile.t << ',' << r.du << ','
       << r.v << ',' << (r.feasible ? 1 : 0) << '\n';
  return ss.str();
}

RunReport::OptionMetrics option_metrics(const std::string& name,
                                        const Pipeline& pipeline,
                                        const Device& device,
                                        const PlanOptions& options) {
  FusionPlan p = plan(pipeline, device, options);
  RunReport::OptionMetrics m;
  m.name = name;
  m.partition = p.partition();
  m.predicted_cost = p.total_cost;
  m.buffers = p.buffers.buffers;
  m.buffer_bytes = p.buffers.bytes;
  for (const auto& g : p.groups) {
    m.transfer_paper += g.transfer_paper;
    m.transfer_exact += g.transfer_exact;
    m.min_du = std::min(m.min_du, g.du);
    if (!g.global_aggregation)
      m.min_occupancy = std::min(m.min_occupancy, g.launch.occupancy);
  }
  return m;
}

std::string run_report_to_string(const RunReport& report,
                                 const ReportOptions& opts) {
  if (opts.format == ReportFormat::Json) {
    ordered_json j;
    j["schema_version"] = 1;
    if (opts.timestamp) j["generated"] = timestamp_now();
    j["plan"] = ordered_json::parse(render_plan(report.executed));
    j["options"] = ordered_json::array();
    for (const auto& o : report.options)
      j["options"].push_back({{"name", o.name},
                              {"partition", partition_string(o.partition)},
                              {"predicted_cost", o.predicted_cost},
                              {"transfer_paper", o.transfer_paper},
                              {"transfer_exact", o.transfer_exact},
                              {"min_du", o.min_du},
                              {"buffers", o.buffers},
                              {"buffer_bytes", o.buffer_bytes},
                              {"min_occupancy", o.min_occupancy}});
    j["buffer_policy"] = kBufferPolicy;
    if (report.simulated) {
      j["simulation"] = {
          {"outputs_identical", report.outputs_identical},
          {"max_abs_diff", report.diff.max_abs_diff},
          {"diff_count", report.diff.diff_count},
          {"interior_diffs", report.diff.interior_diffs},
          {"boundary_diffs", report.diff.boundary_diffs},
          {"measured_serial_gmem", report.measured_serial.gmem_total()},
          {"analytic_serial_gmem", report.analytic_serial},
          {"measured_tiled_gmem", report.measured_tiled.gmem_total()},
          {"analytic_fused_exact_gmem", report.analytic_fused_exact},
          {"traffic_reduction_pct", report.traffic_reduction_pct}};
    }
    return j.dump(2) + "\n";
  }
  if (opts.format == ReportFormat::Csv) {
    std::ostringstream ss;
    ss << "option,partition,predicted_cost,transfer_paper,transfer_exact,"
          "min_du,buffers,buffer_bytes,min_occupancy\n";
    for (const auto& o : report.options)
      ss << o.name << ",\"" << partition_string(o.partition) << "\","
         << o.predicted_cost << ',' << o.transfer_paper << ','
         << o.transfer_exact << ',' << o.min_du << ',' << o.buffers << ','
         << o.buffer_bytes << ',' << o.min_occupancy << '\n';
    return ss.str();
  }
  std::ostringstream ss;
  ss << "run report\n";
  if (opts.timestamp) ss << "generated: " << timestamp_now() << "\n";
  ss << "device: " << report.executed.device_name << "\n";
  ss << "video: " << dims_string(report.executed.video) << "\n";
  ss << "fusion options:\n";
  for (const auto& o : report.options) {
    ss << "  " << o.name << " [" << partition_string(o.partition)
       << "]: cost " << o.predicted_cost << ", transfer paper "
       << o.transfer_paper << " / exact " << o.transfer_exact << ", min DU "
       << std::fixed << std::setprecision(4) << o.min_du << std::defaultfloat
       << ", buffers " << o.buffers << " (" << o.buffer_bytes
       << " bytes), min occupancy " << o.min_occupancy << "\n";
  }
  ss << "gmem buffer policy: " << kBufferPolicy << "\n";
  ss << "executed partition: "
     << partition_string(report.executed.partition()) << " (halo "
     << to_string(report.executed.halo_mode) << ")\n";
  if (report.simulated) {
    ss << "simulation:\n";
    ss << "  outputs identical: "
       << (report.outputs_identical ? "true" : "false") << "\n";
    ss << "  max abs diff: " << report.diff.max_abs_diff << " ("
       << report.diff.diff_count << " elements; interior "
       << report.diff.interior_diffs << ", boundary "
       << report.diff.boundary_diffs << ")\n";
    ss << "  serial gmem: measured " << report.measured_serial.gmem_total()
       << ", analytic " << report.analytic_serial << "\n";
    ss << "  tiled gmem: measured " << report.measured_tiled.gmem_total()
       << ", analytic exact " << report.analytic_fused_exact << "\n";
    ss << "  traffic reduction: " << std::fixed << std::setprecision(1)
       << report.traffic_reduction_pct << "%" << std::defaultfloat << "\n";
  }
  return ss.str();
}

}  // namespace fuseplan
