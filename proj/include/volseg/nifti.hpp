#pragma once

#include <cstdint>
#include <filesystem>

#include "volseg/grid.hpp"

namespace volseg {

// On-disk scalar types we read and write (NIfTI-1 datatype codes).
enum class Datatype : std::int16_t {
    UInt8 = 2,
    Int16 = 4,
    Float32 = 16,
    Float64 = 64,
};

// Cooked view of a parsed 348-byte NIfTI-1 header.
struct NiftiHeader {
    Index3 dims{1, 1, 1};
    Spacing3 spacing{1.0, 1.0, 1.0};
    std::int16_t datatype_code = 0;
    float scl_slope = 1.0f;
    float scl_inter = 0.0f;
    std::int16_t sform_code = 0;
    std::int16_t qform_code = 0;
    AffineTransform affine; // sform if sform_code > 0, else qform, else diagonal spacing
    std::int64_t vox_offset = 352;
    std::array<char, 4> magic{}; // "n+1" (single file) or "ni1" (paired)
    bool byte_swapped = false;   // file stored in the opposite byte order
};

// Parses a raw header block (>= 348 bytes). Used directly by fixtures; file
// reads go through read_nifti.
NiftiHeader parse_nifti_header(const std::uint8_t* bytes, std::size_t size);

// Reads a NIfTI-1 volume, plain or gzip-compressed (detected by signature).
// Intensities are returned with scl_slope/scl_inter applied (slope 0 acts as
// 1) and normalised to 32-bit float.
Volume read_nifti(const std::filesystem::path& path);
Volume read_nifti(const std::filesystem::path& path, NiftiHeader& header_out);

// Reads a volume and binarises it: any nonzero intensity is foreground.
Mask read_nifti_mask(const std::filesystem::path& path);

// Writes a single-file "n+1" NIfTI-1 volume with vox_offset 352 and the
// affine stored as sform (code 1). A ".gz" suffix selects gzip output.
// Throws PrecisionError when the datatype cannot represent the data exactly,
// unless allow_lossy is set (then values are rounded and clamped).
void write_nifti(const Volume& volume, const std::filesystem::path& path,
                 Datatype datatype = Datatype::Float32, bool allow_lossy = false);

// Masks are written as unsigned 8-bit with values exactly 0/1.
void write_nifti(const Mask& mask, const std::filesystem::path& path);

} // namespace volseg
