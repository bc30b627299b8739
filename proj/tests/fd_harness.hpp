#pragma once

// Finite-difference gradient checks for every differentiable layer type,
// shared by the unit tests and the acceptance suite.

#include <string>
#include <vector>

#include "oracles.hpp"

namespace fdh {

struct CheckResult {
    std::string name;
    double rel_err = 0.0;
};

/// One full sweep over the layer types (conv2d, strided conv2d, dilated
/// conv2d, conv3d, conv_transpose2d, residual block, upsample+conv, dense,
/// sigmoid, leaky_relu, mse, bce) with tensors drawn from `seed`.
std::vector<CheckResult> run_layer_checks(std::uint64_t seed);

}  // namespace fdh
