#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "volseg/grid.hpp"

namespace volseg {

// Synthetic paired-scan test case: a solid ellipsoid "fetus" whose outer
// shell is fat, imaged on two grids whose affines differ by a world
// translation (the inter-scan motion).
struct PhantomSpec {
    std::array<double, 3> semi_axes_mm{60.0, 50.0, 70.0};
    double shell_thickness_mm = 8.0;
    Spacing3 trufi_spacing_mm{0.78, 0.78, 2.0};
    Spacing3 dixon_spacing_mm{1.25, 1.25, 2.0};
    Index3 dixon_dims{128, 128, 96};
    std::array<double, 3> translation_mm{3.0, -2.0, 2.0};
    double background_intensity = 0.0;
    double tissue_intensity = 20.0;
    double fat_intensity = 100.0;
    double noise_sigma = 0.0;
    int speckle_count = 0;
    int speckle_voxels = 10;
    bool maternal_slab = false;
    double slab_offset_mm = 15.0; // gap between body surface and slab, along +x
    std::uint64_t seed = 42;

    void validate() const;
    std::string to_json() const;
    static PhantomSpec from_json(const std::string& text);
    static PhantomSpec from_json_file(const std::filesystem::path& path);
};

struct PhantomCase {
    Volume trufi;
    Volume dixon_fat;
    Volume dixon_water;
    Mask gt_body_trufi;
    Mask gt_body_dixon;
    Mask gt_fat_dixon;
    Mask speckles_dixon; // injected artifact voxels, for assertions
    PhantomSpec spec;
};

PhantomCase generate(const PhantomSpec& spec);

// Writes the six fixed-name NIfTI files plus spec.json. Refuses to reuse a
// directory that already holds a spec.json unless force is set.
void write_case(const PhantomCase& pc, const std::filesystem::path& directory, bool force = false);

} // namespace volseg
