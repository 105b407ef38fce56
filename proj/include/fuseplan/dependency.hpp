// Boundary classification (TT / TMT / KK) and fusible-segment splitting.
#pragma once

#include <vector>

#include "fuseplan/types.hpp"

namespace fuseplan {

struct OperationClass {
  OperationType primary = OperationType::SinglePoint;
  bool single_frame = true;  // dt == 0 superclass, reported alongside
};

OperationClass classify_operation(const Halo& halo, bool multi_frame);

// Classification of the boundary feeding `consumer`. Pure in (halo, scope):
// GlobalAggregation -> KK, zero halo -> TT, otherwise TMT.
DependencyType classify_dependency(const KernelDesc& consumer);

struct BoundaryClassification {
  int consumer_id = 0;
  DependencyType dep_type = DependencyType::TT;
  std::string reason;
};

// One entry per boundary; length n-1.
std::vector<BoundaryClassification> classify_boundaries(const Pipeline& p);

struct FusibleSegment {
  int first_id = 0;  // inclusive, 1-based
  int last_id = 0;   // inclusive
  std::vector<KernelDesc> kernels;
  int size() const { return last_id - first_id + 1; }
};

// Maximal contiguous runs obtained by cutting at every KK boundary.
std::vector<FusibleSegment> fusible_segments(const Pipeline& p);

}  // namespace fuseplan
