#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "volseg/affine.hpp"

namespace volseg {

// Shared geometry of one scan grid: axis sizes, voxel spacing in mm, and the
// voxel-index -> world-mm affine. Voxel data is stored x-fastest.
struct GridGeometry {
    Index3 dims{0, 0, 0};
    Spacing3 spacing{1.0, 1.0, 1.0};
    AffineTransform affine;

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }

    bool contains(int i, int j, int k) const {
        return i >= 0 && i < dims[0] && j >= 0 && j < dims[1] && k >= 0 && k < dims[2];
    }

    std::size_t linear(int i, int j, int k) const {
        return static_cast<std::size_t>(i)
             + static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(j)
             + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k));
    }

    double voxel_volume_mm3() const { return spacing[0] * spacing[1] * spacing[2]; }

    // Dims exact; spacing and affine within tol (header pixdims are float32).
    bool same_as(const GridGeometry& other, double tol = 1e-5) const;
};

// One MRI series. Intensities are 32-bit reals with any on-disk scaling
// already applied.
struct Volume {
    GridGeometry geom;
    std::vector<float> voxels;

    static Volume zeros(const GridGeometry& g) {
        Volume v;
        v.geom = g;
        v.voxels.assign(g.voxel_count(), 0.0f);
        return v;
    }

    float at(int i, int j, int k) const { return voxels[geom.linear(i, j, k)]; }
    float& at(int i, int j, int k) { return voxels[geom.linear(i, j, k)]; }
};

// Binary grid sharing a Volume's geometry (body or fat segmentation).
struct Mask {
    GridGeometry geom;
    std::vector<std::uint8_t> voxels; // 0 or 1

    static Mask zeros(const GridGeometry& g) {
        Mask m;
        m.geom = g;
        m.voxels.assign(g.voxel_count(), 0);
        return m;
    }

    bool at(int i, int j, int k) const { return voxels[geom.linear(i, j, k)] != 0; }
    void set(int i, int j, int k, bool v) { voxels[geom.linear(i, j, k)] = v ? 1 : 0; }

    std::size_t foreground_count() const;
    bool any() const { return foreground_count() > 0; }
};

} // namespace volseg
