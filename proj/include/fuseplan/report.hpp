// Text / JSON / CSV rendering for the CLI surface.
#pragma once

#include <optional>

#include "fuseplan/planner.hpp"
#include "fuseplan/simulator.hpp"

namespace fuseplan {

enum class ReportFormat { Text, Json, Csv };
ReportFormat report_format_from_string(const std::string& s);

struct ReportOptions {
  ReportFormat format = ReportFormat::Text;
  bool timestamp = true;
};

std::string analyze_report(const Pipeline& pipeline,
                           const ReportOptions& opts);

std::string plan_report(const FusionPlan& plan, const ReportOptions& opts);

struct TileSweepRow {
  TileShape tile;
  double du = 0.0;
  double v = 0.0;
  bool feasible = false;
};

std::vector<TileSweepRow> tile_sweep(const Halo& halo,
                                     std::int64_t budget_elems,
                                     int max_x, int max_t);
std::string tile_sweep_report(const std::vector<TileSweepRow>& rows,
                              const ReportOptions& opts);

// Per-fusion-option metrics plus simulator measurements for the run plan.
struct RunReport {
  FusionPlan executed;
  // option name -> (partition, analytic totals)
  struct OptionMetrics {
    std::string name;
    std::vector<std::pair<int, int>> partition;
    double predicted_cost = 0.0;
    std::int64_t transfer_paper = 0;
    std::int64_t transfer_exact = 0;
    double min_du = 1.0;
    int buffers = 0;
    std::int64_t buffer_bytes = 0;
    double min_occupancy = 1.0;
  };
  std::vector<OptionMetrics> options;
  // Simulation results (when a simulation was run).
  bool simulated = false;
  TrafficCounters measured_serial;
  TrafficCounters measured_tiled;
  std::int64_t analytic_serial = 0;
  std::int64_t analytic_fused_exact = 0;
  DiffReport diff;
  bool outputs_identical = false;
  double traffic_reduction_pct = 0.0;
};

std::string run_report_to_string(const RunReport& report,
                                 const ReportOptions& opts);

RunReport::OptionMetrics option_metrics(
    const std::string& name, const Pipeline& pipeline, const Device& device,
    const PlanOptions& options);

}  // namespace fuseplan
