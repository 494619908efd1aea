#pragma once

#include <vector>

#include "volseg/grid.hpp"

namespace volseg {

// Exact Euclidean distance (mm) from every voxel centre to the nearest
// foreground voxel centre, honouring anisotropic spacing. Separable
// lower-envelope scan, linear per axis. Throws EmptyMaskError when the mask
// has no foreground.
std::vector<double> distance_transform_squared(const Mask& mask);
std::vector<double> distance_transform(const Mask& mask);

} // namespace volseg
