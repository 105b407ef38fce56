// Least-squares fit of the linear cost model from measured timings.
#pragma once

#include <array>

#include "fuseplan/tiling.hpp"

namespace fuseplan {

struct Measurement {
  int n_kernels = 1;
  std::int64_t blocks = 1;
  TileShape tile;
  Halo halo;
  double measured_time = 0.0;
};

// Feature vector the model is linear in: one entry per CostParams field.
std::array<double, 4> cost_features(const Measurement& m);

// Predicted time under given params (used to synthesize test rows).
double cost_model_time(const Measurement& m, const CostParams& params);

struct CalibrationResult {
  CostParams params;
  double residual_rms = 0.0;
};

// Requires >= 4 rows and a full-rank design matrix.
CalibrationResult calibrate(const std::vector<Measurement>& rows);

std::vector<Measurement> parse_measurements_csv(const std::string& text);

}  // namespace fuseplan
