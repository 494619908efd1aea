#pragma once

#include <cstdint>

#include "volseg/grid.hpp"

namespace volseg {

// Axis-aligned box of voxel indices, corners inclusive.
struct VoxelBox {
    Index3 lo{0, 0, 0};
    Index3 hi{-1, -1, -1};

    bool contains(int i, int j, int k) const {
        return i >= lo[0] && i <= hi[0] && j >= lo[1] && j <= hi[1] && k >= lo[2] && k <= hi[2];
    }
    bool valid() const { return lo[0] <= hi[0] && lo[1] <= hi[1] && lo[2] <= hi[2]; }
    std::int64_t voxel_count() const {
        if (!valid()) return 0;
        return static_cast<std::int64_t>(hi[0] - lo[0] + 1)
             * (hi[1] - lo[1] + 1) * (hi[2] - lo[2] + 1);
    }
};

// The whole grid as a box.
VoxelBox full_box(const GridGeometry& geom);

// Tightest box containing all foreground voxels. Throws EmptyMaskError on an
// empty mask.
VoxelBox bounding_box(const Mask& mask);

// Grows the box by ceil(margin_mm / spacing_axis) voxels per axis per side,
// clipped to the grid bounds.
VoxelBox expand_box(const VoxelBox& box, double margin_mm, const Spacing3& spacing,
                    const Index3& grid_dims);

// Nearest-neighbour resampling of a binary mask onto a target grid. Each
// target voxel centre is mapped through both affines into source continuous
// index space and rounded half-away-from-zero; out-of-grid samples are
// background. Throws GeometryError when either affine is singular.
Mask resample_mask_nearest(const Mask& src, const GridGeometry& target);

} // namespace volseg
