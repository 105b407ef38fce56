// Catalog of the concrete per-element operators kernels may name.
// Shared by config validation, the reference simulator, and codegen.
#pragma once

#include "fuseplan/types.hpp"

namespace fuseplan {

struct StencilOpInfo {
  std::string name;
  int in_channels = 1;
  int out_channels = 1;
  // True for operators whose output recurs on their own previous-frame
  // output (the temporal IIR). Their inter-kernel halo is still zero, but
  // tiled execution must not split the time axis if exactness is wanted.
  bool causal_recurrence = false;
  bool global_aggregation = false;
};

// Throws Error(Input) for unknown names.
const StencilOpInfo& stencil_op_info(const std::string& name);
bool stencil_op_known(const std::string& name);

// The natural halo of an operator given its parameters (e.g. gaussian
// radius). Used to default and cross-check declared halos.
Halo stencil_op_halo(const std::string& name, const StencilParams& params);

// Default compute weight: 1 for point ops, window size for stencils,
// 2 for the IIR recurrence.
double stencil_op_default_weight(const std::string& name,
                                 const StencilParams& params);

}  // namespace fuseplan
