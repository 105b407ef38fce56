#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "fuseplan/calibrate.hpp"

namespace fuseplan {

std::array<double, 4> cost_features(const Measurement& m) {
  require(m.n_kernels >= 1 && m.blocks >= 1, ErrorKind::Input,
          "measurement counts must be >= 1");
  double out_elems = double(m.blocks) * double(m.tile.volume());
  double in_elems = double(m.blocks) * double(input_box(m.tile, m.halo).volume());
  double window = double(m.halo.dx() + 1) * (m.halo.dy() + 1) *
                  (m.halo.dt() + 1);
  return {
      in_elems + out_elems,                        // gmem_cost_per_elem
      m.n_kernels * out_elems * (window + 1.0),    // smem_cost_per_elem
      m.n_kernels * out_elems,                     // compute_cost_unit
      1.0,                                         // launch_overhead
  };
}

double cost_model_time(const Measurement& m, const CostParams& params) {
  std::array<double, 4> f = cost_features(m);
  return params.gmem_cost_per_elem * f[0] + params.smem_cost_per_elem * f[1] +
         params.compute_cost_unit * f[2] + params.launch_overhead * f[3];
}

CalibrationResult calibrate(const std::vector<Measurement>& rows) {
  require(rows.size() >= 4, ErrorKind::Input,
          "calibration needs >= 4 measurements");
  Eigen::MatrixXd a(Eigen::Index(rows.size()), 4);
  Eigen::VectorXd y(Eigen::Index(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::array<double, 4> f = cost_features(rows[i]);
    for (int j = 0; j < 4; ++j) a(Eigen::Index(i), j) = f[std::size_t(j)];
    y(Eigen::Index(i)) = rows[i].measured_time;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  require(qr.rank() == 4, ErrorKind::Input,
          "calibration design matrix is rank deficient; vary tile, halo and "
          "kernel counts across measurements");
  Eigen::Vector4d x = qr.solve(y);
  CalibrationResult r;
  r.params.gmem_cost_per_elem = x(0);
  r.params.smem_cost_per_elem = x(1);
  r.params.compute_cost_unit = x(2);
  r.params.launch_overhead = x(3);
  double sq = (a * x - y).squaredNorm();
  r.residual_rms = std::sqrt(sq / double(rows.size()));
  return r;
}

std::vector<Measurement> parse_measurements_csv(const std::string& text) {
  // Columns: n_kernels,blocks,tile_x,tile_y,tile_t,
  //          halo_x_lo,halo_x_hi,halo_y_lo,halo_y_hi,halo_t_lo,halo_t_hi,
  //          measured_time
  std::vector<Measurement> rows;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line.find("n_kernels") != std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<double> fields;
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        fields.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorKind::Input, "measurements line " +
                                          std::to_string(lineno) +
                                          ": bad number '" + cell + "'");
      }
    }
    require(fields.size() == 12, ErrorKind::Input,
            "measurements line " + std::to_string(lineno) +
                ": expected 12 columns, got " +
                std::to_string(fields.size()));
    Measurement m;
    m.n_kernels = int(fields[0]);
    m.blocks = std::int64_t(fields[1]);
    m.tile = TileShape{int(fields[2]), int(fields[3]), int(fields[4])};
    m.halo = Halo{int(fields[5]), int(fields[6]), int(fields[7]),
                  int(fields[8]), int(fields[9]), int(fields[10])};
    m.measured_time = fields[11];
    m.halo.validate();
    require(m.tile.x >= 1 && m.tile.y >= 1 && m.tile.t >= 1, ErrorKind::Input,
            "measurements line " + std::to_string(lineno) +
                ": tile dims must be >= 1");
    rows.push_back(m);
  }
  require(!rows.empty(), ErrorKind::Input, "no measurement rows");
  return rows;
}

}  // namespace fuseplan
