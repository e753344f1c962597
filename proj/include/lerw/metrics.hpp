#pragma once

#include <span>
#include <vector>

#include "lerw/point.hpp"

namespace lerw {

// Hausdorff distance between two finite point sets at a common scale;
// max-min search uses exact integer squared distances, one sqrt at the end.
// Errors: empty input or mixed scales.
double hausdorff_distance(std::span<const LatticePoint> a, std::span<const LatticePoint> b);

} // namespace lerw
