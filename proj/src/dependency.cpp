#include "fuseplan/dependency.hpp"

namespace fuseplan {

OperationClass classify_operation(const Halo& halo, bool multi_frame) {
  OperationClass c;
  c.single_frame = halo.dt() == 0 && !multi_frame;
  if (halo.dx() > 0 && halo.dy() > 0 && halo.dt() > 0) {
    c.primary = OperationType::SpatioTemporal;
  } else if (halo.dt() > 0 || multi_frame) {
    c.primary = OperationType::MultiFrame;
  } else if (halo.dx() > 0 || halo.dy() > 0) {
    c.primary = OperationType::Rectangular;
  } else {
    c.primary = OperationType::SinglePoint;
  }
  return c;
}

DependencyType classify_dependency(const KernelDesc& consumer) {
  if (consumer.scope == KernelScope::GlobalAggregation)
    return DependencyType::KK;
  if (consumer.halo.zero()) return DependencyType::TT;
  return DependencyType::TMT;
}

std::vector<BoundaryClassification> classify_boundaries(const Pipeline& p) {
  std::vector<BoundaryClassification> out;
  for (std::size_t i = 1; i < p.kernels.size(); ++i) {
    const KernelDesc& consumer = p.kernels[i];
    BoundaryClassification b;
    b.consumer_id = consumer.id;
    b.dep_type = classify_dependency(consumer);
    switch (b.dep_type) {
      case DependencyType::KK:
        b.reason = "consumer aggregates across blocks";
        break;
      case DependencyType::TT:
        b.reason = "zero halo: element-wise on predecessor output";
        break;
      case DependencyType::TMT:
        b.reason = "nonzero halo: reads a neighborhood of predecessor output";
        break;
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<FusibleSegment> fusible_segments(const Pipeline& p) {
  std::vector<FusibleSegment> segments;
  if (p.kernels.empty()) return segments;
  FusibleSegment cur;
  cur.first_id = p.kernels.front().id;
  cur.kernels.push_back(p.kernels.front());
  for (std::size_t i = 1; i < p.kernels.size(); ++i) {
    const KernelDesc& k = p.kernels[i];
    if (classify_dependency(k) == DependencyType::KK) {
      cur.last_id = p.kernels[i - 1].id;
      segments.push_back(std::move(cur));
      cur = FusibleSegment{};
      cur.first_id = k.id;
    }
    cur.kernels.push_back(k);
  }
  cur.last_id = p.kernels.back().id;
  segments.push_back(std::move(cur));
  return segments;
}

}  // namespace fuseplan
