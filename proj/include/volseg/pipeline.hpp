#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "volseg/geometry.hpp"

namespace volseg {

// Intensity threshold: an explicit value, or Otsu computed inside the VOI.
struct ThresholdSpec {
    bool otsu = false;
    float value = 0.0f;

    static ThresholdSpec numeric(float v) { return {false, v}; }
    static ThresholdSpec auto_otsu() { return {true, 0.0f}; }
    static ThresholdSpec parse(const std::string& text); // "otsu" or a number
    std::string to_string() const;
};

enum class MorphOp { Open, Close };

struct MorphStep {
    MorphOp op = MorphOp::Open;
    double radius_mm = 0.0;

    static MorphStep parse(const std::string& text); // "open:2.5" / "close:1.25"
    std::string to_string() const;
};

// Parameters of the semi-automatic fat segmentation. Serialises to a plain
// key=value config file; CLI flags override individual keys.
struct PipelineParams {
    std::optional<ThresholdSpec> threshold; // required before running
    int min_component_voxels = 50;
    int connectivity = 26; // 6, 18 or 26
    double voi_margin_mm = 5.0;
    std::vector<MorphStep> morphology; // applied in order, default none
    bool apply_voi_box = true;         // restrict thresholding to bbox+margin
    bool apply_body_silhouette = true; // AND with the resampled body mask

    void validate() const; // throws InputError

    std::string to_config_text() const;
    static PipelineParams from_config_text(const std::string& text);
    static PipelineParams from_config_file(const std::filesystem::path& path);
};

// Result of connected-component labeling. Labels are 1..n in
// first-encountered x-fastest scan order; 0 is background.
struct LabeledComponents {
    Index3 dims{0, 0, 0};
    std::vector<std::int32_t> labels;
    std::vector<std::int64_t> sizes; // sizes[l-1] = voxel count of label l

    std::int32_t count() const { return static_cast<std::int32_t>(sizes.size()); }
};

// Foreground = voxels inside voi with intensity >= threshold.
Mask threshold_in_voi(const Volume& fat, const VoxelBox& voi, float threshold);

// 256-bin Otsu threshold over the VOI; ties broken toward the lower bin
// edge. Throws DegenerateHistogramError when the region is constant.
float otsu_threshold(const Volume& fat, const VoxelBox& voi);

LabeledComponents label_components(const Mask& mask, int connectivity);

// Keeps components of size >= min_voxels.
Mask filter_small_components(const Mask& mask, int min_voxels, int connectivity);

// Binary opening/closing with a spacing-aware ellipsoidal structuring
// element (world-space ball of radius_mm). Radius 0 is the identity.
Mask morph(const Mask& mask, MorphOp op, double radius_mm);

struct SemiAutoResult {
    Mask fat_mask;       // in the fat volume's geometry
    Mask body_resampled; // body mask mapped onto the fat grid
    VoxelBox voi;
    float threshold_used = 0.0f;
};

// The full semi-automatic flow: map the body mask onto the fat volume's
// grid, build the VOI, threshold (numeric or Otsu), AND with the body
// silhouette, run morphology in order, then drop small components.
SemiAutoResult run_semi_auto_detailed(const Volume& fat, const Mask& body_mask_src,
                                      const PipelineParams& params);
Mask run_semi_auto(const Volume& fat, const Mask& body_mask_src, const PipelineParams& params);

} // namespace volseg
