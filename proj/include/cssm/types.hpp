#pragma once

#include <Eigen/Dense>

namespace cssm {

/// Per-cell observation mask, true = observed.
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

}  // namespace cssm
