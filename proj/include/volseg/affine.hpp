#pragma once

#include <array>

#include "volseg/errors.hpp"

namespace volseg {

using Index3 = std::array<int, 3>;
using Point3 = std::array<double, 3>;
using Spacing3 = std::array<double, 3>;

// 4x4 homogeneous map from voxel index (i,j,k,1) to world millimetres.
// The bottom row is always (0,0,0,1); the upper-left 3x3 block must be
// invertible for the transform to be usable as scan geometry.
class AffineTransform {
public:
    AffineTransform(); // identity

    static AffineTransform diagonal(const Spacing3& spacing);
    static AffineTransform diagonal(const Spacing3& spacing, const Point3& origin);

    double& at(int row, int col) { return m_[row][col]; }
    double at(int row, int col) const { return m_[row][col]; }

    // Maps a continuous voxel index to world mm.
    Point3 apply(const Point3& index) const;

    // Throws GeometryError when the 3x3 block is singular.
    AffineTransform inverse() const;

    // this * rhs, i.e. rhs is applied first.
    AffineTransform compose(const AffineTransform& rhs) const;

    // Translates the world frame by t (prepends a translation).
    AffineTransform translated(const Point3& t) const;

    bool invertible() const;
    bool almost_equal(const AffineTransform& other, double tol = 1e-9) const;

    Point3 origin() const { return {m_[0][3], m_[1][3], m_[2][3]}; }

private:
    std::array<std::array<double, 4>, 4> m_;
};

// affine * (i,j,k,1), truncated to 3 components.
Point3 voxel_to_world(const AffineTransform& affine, const Index3& index);

// Inverse map to a continuous index triple. Throws GeometryError when the
// affine is singular.
Point3 world_to_voxel(const AffineTransform& affine, const Point3& world_mm);

} // namespace volseg
