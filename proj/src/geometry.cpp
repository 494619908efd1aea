#include "volseg/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace volseg {

bool GridGeometry::same_as(const GridGeometry& other, double tol) const {
    if (dims != other.dims) return false;
    for (int a = 0; a < 3; ++a)
        if (std::abs(spacing[a] - other.spacing[a]) > tol) return false;
    return affine.almost_equal(other.affine, tol);
}

std::size_t Mask::foreground_count() const {
    std::size_t n = 0;
    for (std::uint8_t v : voxels)
        n += (v != 0);
    return n;
}

VoxelBox full_box(const GridGeometry& geom) {
    return VoxelBox{{0, 0, 0}, {geom.dims[0] - 1, geom.dims[1] - 1, geom.dims[2] - 1}};
}

VoxelBox bounding_box(const Mask& mask) {
    VoxelBox box;
    box.lo = {mask.geom.dims[0], mask.geom.dims[1], mask.geom.dims[2]};
    box.hi = {-1, -1, -1};
    const auto& d = mask.geom.dims;
    std::size_t idx = 0;
    for (int k = 0; k < d[2]; ++k) {
        for (int j = 0; j < d[1]; ++j) {
            for (int i = 0; i < d[0]; ++i, ++idx) {
                if (!mask.voxels[idx]) continue;
                box.lo[0] = std::min(box.lo[0], i);
                box.lo[1] = std::min(box.lo[1], j);
                box.lo[2] = std::min(box.lo[2], k);
                box.hi[0] = std::max(box.hi[0], i);
                box.hi[1] = std::max(box.hi[1], j);
                box.hi[2] = std::max(box.hi[2], k);
            }
        }
    }
    if (!box.valid()) {
        throw EmptyMaskError("bounding_box: mask has no foreground voxels");
    }
    return box;
}

VoxelBox expand_box(const VoxelBox& box, double margin_mm, const Spacing3& spacing,
                    const Index3& grid_dims) {
    VoxelBox out = box;
    for (int a = 0; a < 3; ++a) {
        const int grow = static_cast<int>(std::ceil(margin_mm / spacing[a]));
        out.lo[a] = std::max(0, box.lo[a] - grow);
        out.hi[a] = std::min(grid_dims[a] - 1, box.hi[a] + grow);
    }
    return out;
}

namespace {

// round-half-away-from-zero, the contract for mask resampling
inline int round_index(double x) {
    return static_cast<int>(std::round(x));
}

} // namespace

Mask resample_mask_nearest(const Mask& src, const GridGeometry& target) {
    // target index -> world -> source continuous index, folded into one matrix
    const AffineTransform to_src = src.geom.affine.inverse().compose(target.affine);
    Mask out = Mask::zeros(target);
    const auto& d = target.dims;
    std::size_t idx = 0;
    for (int k = 0; k < d[2]; ++k) {
        for (int j = 0; j < d[1]; ++j) {
            for (int i = 0; i < d[0]; ++i, ++idx) {
                const Point3 s = to_src.apply({static_cast<double>(i),
                                               static_cast<double>(j),
                                               static_cast<double>(k)});
                const int si = round_index(s[0]);
                const int sj = round_index(s[1]);
                const int sk = round_index(s[2]);
                if (src.geom.contains(si, sj, sk) && src.at(si, sj, sk)) {
                    out.voxels[idx] = 1;
                }
            }
        }
    }
    return out;
}

} // namespace volseg
