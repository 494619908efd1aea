#include "volseg/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

namespace volseg {

namespace {

#pragma pack(push, 1)
// Field-for-field mirror of the NIfTI-1 header block.
struct Nifti1Disk {
    std::int32_t sizeof_hdr;    // must be 348
    char data_type[10];
    char db_name[18];
    std::int32_t extents;
    std::int16_t session_error;
    char regular;
    char dim_info;
    std::int16_t dim[8];
    float intent_p1;
    float intent_p2;
    float intent_p3;
    std::int16_t intent_code;
    std::int16_t datatype;
    std::int16_t bitpix;
    std::int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    std::int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max;
    float cal_min;
    float slice_duration;
    float toffset;
    std::int32_t glmax;
    std::int32_t glmin;
    char descrip[80];
    char aux_file[24];
    std::int16_t qform_code;
    std::int16_t sform_code;
    float quatern_b;
    float quatern_c;
    float quatern_d;
    float qoffset_x;
    float qoffset_y;
    float qoffset_z;
    float srow_x[4];
    float srow_y[4];
    float srow_z[4];
    char intent_name[16];
    char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Nifti1Disk) == 348, "NIfTI-1 header block is 348 bytes");

constexpr std::size_t kHeaderSize = 348;

std::uint16_t bswap16(std::uint16_t v) { return static_cast<std::uint16_t>((v >> 8) | (v << 8)); }
std::uint32_t bswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0x0000ff00u) | ((v << 8) & 0x00ff0000u) | (v << 24);
}
std::uint64_t bswap64(std::uint64_t v) {
    return (static_cast<std::uint64_t>(bswap32(static_cast<std::uint32_t>(v))) << 32)
         | bswap32(static_cast<std::uint32_t>(v >> 32));
}

void swap_i16(std::int16_t& v) {
    std::uint16_t u;
    std::memcpy(&u, &v, 2);
    u = bswap16(u);
    std::memcpy(&v, &u, 2);
}
void swap_i32(std::int32_t& v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    u = bswap32(u);
    std::memcpy(&v, &u, 4);
}
void swap_f32(float& v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    u = bswap32(u);
    std::memcpy(&v, &u, 4);
}

void swap_header(Nifti1Disk& h) {
    swap_i32(h.sizeof_hdr);
    swap_i32(h.extents);
    swap_i16(h.session_error);
    for (auto& d : h.dim) swap_i16(d);
    swap_f32(h.intent_p1);
    swap_f32(h.intent_p2);
    swap_f32(h.intent_p3);
    swap_i16(h.intent_code);
    swap_i16(h.datatype);
    swap_i16(h.bitpix);
    swap_i16(h.slice_start);
    for (auto& p : h.pixdim) swap_f32(p);
    swap_f32(h.vox_offset);
    swap_f32(h.scl_slope);
    swap_f32(h.scl_inter);
    swap_i16(h.slice_end);
    swap_f32(h.cal_max);
    swap_f32(h.cal_min);
    swap_f32(h.slice_duration);
    swap_f32(h.toffset);
    swap_i32(h.glmax);
    swap_i32(h.glmin);
    swap_i16(h.qform_code);
    swap_i16(h.sform_code);
    swap_f32(h.quatern_b);
    swap_f32(h.quatern_c);
    swap_f32(h.quatern_d);
    swap_f32(h.qoffset_x);
    swap_f32(h.qoffset_y);
    swap_f32(h.qoffset_z);
    for (auto& v : h.srow_x) swap_f32(v);
    for (auto& v : h.srow_y) swap_f32(v);
    for (auto& v : h.srow_z) swap_f32(v);
}

bool is_gzip(const std::vector<std::uint8_t>& bytes) {
    return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open file for reading: " + path.string());
    }
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(size);
    if (size > 0) {
        in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    }
    if (!in) {
        throw IoError("failed to read file: " + path.string());
    }
    return bytes;
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 32) != Z_OK) { // accept gzip or zlib wrapping
        throw IoError("zlib inflateInit failed");
    }
    std::vector<std::uint8_t> out(std::max<std::size_t>(in.size() * 4, std::size_t(1) << 16));
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    std::size_t written = 0;
    for (;;) {
        if (written == out.size()) out.resize(out.size() * 2);
        zs.next_out = out.data() + written;
        zs.avail_out = static_cast<uInt>(out.size() - written);
        const int ret = inflate(&zs, Z_NO_FLUSH);
        written = out.size() - zs.avail_out;
        if (ret == Z_STREAM_END) break;
        if (ret != Z_OK) {
            inflateEnd(&zs);
            throw FormatError("gzip decompression failed (zlib error " + std::to_string(ret) + ")");
        }
    }
    inflateEnd(&zs);
    out.resize(written);
    return out;
}

std::vector<std::uint8_t> gzip_compress(const std::vector<std::uint8_t>& in) {
    z_stream zs{};
    if (deflateInit2(&zs, 6, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
        throw IoError("zlib deflateInit failed");
    }
    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(in.size())));
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int ret = deflate(&zs, Z_FINISH);
    if (ret != Z_STREAM_END) {
        deflateEnd(&zs);
        throw IoError("gzip compression failed (zlib error " + std::to_string(ret) + ")");
    }
    out.resize(out.size() - zs.avail_out);
    deflateEnd(&zs);
    return out;
}

int bytes_per_voxel(std::int16_t datatype) {
    switch (static_cast<Datatype>(datatype)) {
        case Datatype::UInt8: return 1;
        case Datatype::Int16: return 2;
        case Datatype::Float32: return 4;
        case Datatype::Float64: return 8;
    }
    throw UnsupportedTypeError("unsupported NIfTI datatype code " + std::to_string(datatype));
}

AffineTransform affine_from_quaternion(const Nifti1Disk& h) {
    const double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
    const double a2 = 1.0 - (b * b + c * c + d * d);
    const double a = a2 > 0.0 ? std::sqrt(a2) : 0.0;
    const double qfac = (h.pixdim[0] < 0.0f) ? -1.0 : 1.0;
    const double dx = h.pixdim[1], dy = h.pixdim[2], dz = h.pixdim[3] * qfac;

    AffineTransform t;
    t.at(0, 0) = (a * a + b * b - c * c - d * d) * dx;
    t.at(0, 1) = (2 * b * c - 2 * a * d) * dy;
    t.at(0, 2) = (2 * b * d + 2 * a * c) * dz;
    t.at(1, 0) = (2 * b * c + 2 * a * d) * dx;
    t.at(1, 1) = (a * a + c * c - b * b - d * d) * dy;
    t.at(1, 2) = (2 * c * d - 2 * a * b) * dz;
    t.at(2, 0) = (2 * b * d - 2 * a * c) * dx;
    t.at(2, 1) = (2 * c * d + 2 * a * b) * dy;
    t.at(2, 2) = (a * a + d * d - b * b - c * c) * dz;
    t.at(0, 3) = h.qoffset_x;
    t.at(1, 3) = h.qoffset_y;
    t.at(2, 3) = h.qoffset_z;
    return t;
}

std::filesystem::path paired_data_path(const std::filesystem::path& header_path) {
    // x.hdr -> x.img, x.hdr.gz -> x.img (or x.img.gz, whichever exists)
    std::filesystem::path stem = header_path;
    if (stem.extension() == ".gz") stem.replace_extension();
    stem.replace_extension(".img");
    if (std::filesystem::exists(stem)) return stem;
    std::filesystem::path gz = stem;
    gz += ".gz";
    if (std::filesystem::exists(gz)) return gz;
    throw IoError("paired NIfTI data file not found: " + stem.string());
}

} // namespace

NiftiHeader parse_nifti_header(const std::uint8_t* bytes, std::size_t size) {
    if (size < kHeaderSize) {
        throw FormatError("NIfTI header truncated: need 348 bytes, have " + std::to_string(size));
    }
    Nifti1Disk raw;
    std::memcpy(&raw, bytes, kHeaderSize);

    // Endianness probe: dim[0] is 1..7 in the file's native order.
    bool swapped = false;
    if (raw.dim[0] < 1 || raw.dim[0] > 7) {
        swap_header(raw);
        swapped = true;
        if (raw.dim[0] < 1 || raw.dim[0] > 7) {
            throw FormatError("invalid dim[0] in either byte order");
        }
    }
    if (raw.sizeof_hdr != 348) {
        throw FormatError("sizeof_hdr is " + std::to_string(raw.sizeof_hdr) + ", expected 348");
    }
    const std::string magic(raw.magic, raw.magic + 3);
    if (magic != "n+1" && magic != "ni1") {
        throw FormatError("malformed NIfTI magic \"" + magic + "\"");
    }

    NiftiHeader h;
    h.byte_swapped = swapped;
    std::copy(raw.magic, raw.magic + 4, h.magic.begin());
    h.datatype_code = raw.datatype;
    h.scl_slope = raw.scl_slope;
    h.scl_inter = raw.scl_inter;
    h.sform_code = raw.sform_code;
    h.qform_code = raw.qform_code;
    h.vox_offset = static_cast<std::int64_t>(raw.vox_offset);

    const int ndim = raw.dim[0];
    for (int a = 0; a < 3; ++a) {
        const int extent = (a < ndim) ? raw.dim[a + 1] : 1;
        if (extent < 1) {
            throw FormatError("dim[" + std::to_string(a + 1) + "] is " + std::to_string(extent)
                              + "; spatial axes must be >= 1");
        }
        h.dims[a] = extent;
    }
    // Anatomical series are 3D; singleton trailing axes are squeezed.
    for (int a = 3; a < ndim; ++a) {
        if (raw.dim[a + 1] > 1) {
            throw FormatError("non-singleton axis " + std::to_string(a + 1) + " with extent "
                              + std::to_string(raw.dim[a + 1]) + "; only 3D series are supported");
        }
    }
    for (int a = 0; a < 3; ++a) {
        const float p = raw.pixdim[a + 1];
        if (!(p > 0.0f)) {
            throw FormatError("pixdim[" + std::to_string(a + 1) + "] must be > 0");
        }
        h.spacing[a] = p;
    }

    if (h.sform_code > 0) {
        AffineTransform t;
        for (int c = 0; c < 4; ++c) {
            t.at(0, c) = raw.srow_x[c];
            t.at(1, c) = raw.srow_y[c];
            t.at(2, c) = raw.srow_z[c];
        }
        h.affine = t;
    } else if (h.qform_code > 0) {
        h.affine = affine_from_quaternion(raw);
    } else {
        h.affine = AffineTransform::diagonal(h.spacing);
    }
    if (!h.affine.invertible()) {
        throw FormatError("header affine is singular");
    }
    return h;
}

namespace {

Volume decode_volume(const NiftiHeader& h, const std::vector<std::uint8_t>& data_bytes,
                     std::int64_t offset) {
    const std::size_t count = static_cast<std::size_t>(h.dims[0]) * h.dims[1] * h.dims[2];
    const int bpv = bytes_per_voxel(h.datatype_code);
    const std::size_t need = count * static_cast<std::size_t>(bpv);
    if (offset < 0 || data_bytes.size() < static_cast<std::size_t>(offset) + need) {
        const std::size_t have = data_bytes.size() > static_cast<std::size_t>(offset)
                                     ? data_bytes.size() - static_cast<std::size_t>(offset)
                                     : 0;
        throw TruncationError("truncated data section: expected " + std::to_string(need)
                              + " bytes, got " + std::to_string(have));
    }
    const std::uint8_t* src = data_bytes.data() + offset;

    Volume vol;
    vol.geom.dims = h.dims;
    vol.geom.spacing = h.spacing;
    vol.geom.affine = h.affine;
    vol.voxels.resize(count);

    const double slope = (h.scl_slope == 0.0f) ? 1.0 : static_cast<double>(h.scl_slope);
    const double inter = h.scl_inter;
    const bool swap = h.byte_swapped;

    auto store = [&](std::size_t i, double raw) {
        vol.voxels[i] = static_cast<float>(slope * raw + inter);
    };

    switch (static_cast<Datatype>(h.datatype_code)) {
        case Datatype::UInt8:
            for (std::size_t i = 0; i < count; ++i) store(i, src[i]);
            break;
        case Datatype::Int16:
            for (std::size_t i = 0; i < count; ++i) {
                std::uint16_t u;
                std::memcpy(&u, src + 2 * i, 2);
                if (swap) u = bswap16(u);
                std::int16_t s;
                std::memcpy(&s, &u, 2);
                store(i, s);
            }
            break;
        case Datatype::Float32:
            for (std::size_t i = 0; i < count; ++i) {
                std::uint32_t u;
                std::memcpy(&u, src + 4 * i, 4);
                if (swap) u = bswap32(u);
                float f;
                std::memcpy(&f, &u, 4);
                store(i, f);
            }
            break;
        case Datatype::Float64:
            for (std::size_t i = 0; i < count; ++i) {
                std::uint64_t u;
                std::memcpy(&u, src + 8 * i, 8);
                if (swap) u = bswap64(u);
                double d;
                std::memcpy(&d, &u, 8);
                store(i, d);
            }
            break;
    }
    return vol;
}

} // namespace

Volume read_nifti(const std::filesystem::path& path, NiftiHeader& header_out) {
    std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (is_gzip(bytes)) bytes = gunzip(bytes);
    header_out = parse_nifti_header(bytes.data(), bytes.size());

    const std::string magic(header_out.magic.data(), 3);
    if (magic == "ni1") {
        std::vector<std::uint8_t> img = read_file_bytes(paired_data_path(path));
        if (is_gzip(img)) img = gunzip(img);
        return decode_volume(header_out, img, header_out.vox_offset);
    }
    if (header_out.vox_offset < static_cast<std::int64_t>(kHeaderSize)) {
        throw FormatError("vox_offset " + std::to_string(header_out.vox_offset)
                          + " overlaps the header");
    }
    return decode_volume(header_out, bytes, header_out.vox_offset);
}

Volume read_nifti(const std::filesystem::path& path) {
    NiftiHeader h;
    return read_nifti(path, h);
}

Mask read_nifti_mask(const std::filesystem::path& path) {
    const Volume vol = read_nifti(path);
    Mask m;
    m.geom = vol.geom;
    m.voxels.resize(vol.voxels.size());
    for (std::size_t i = 0; i < vol.voxels.size(); ++i) {
        m.voxels[i] = (vol.voxels[i] != 0.0f) ? 1 : 0;
    }
    return m;
}

namespace {

void write_bytes(const std::filesystem::path& path, std::vector<std::uint8_t>&& bytes) {
    if (path.extension() == ".gz") {
        bytes = gzip_compress(bytes);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open file for writing: " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed to write file: " + path.string());
    }
}

Nifti1Disk make_disk_header(const GridGeometry& geom, Datatype datatype) {
    Nifti1Disk raw;
    std::memset(&raw, 0, sizeof(raw));
    raw.sizeof_hdr = 348;
    raw.regular = 'r';
    raw.dim[0] = 3;
    raw.dim[1] = static_cast<std::int16_t>(geom.dims[0]);
    raw.dim[2] = static_cast<std::int16_t>(geom.dims[1]);
    raw.dim[3] = static_cast<std::int16_t>(geom.dims[2]);
    for (int a = 4; a < 8; ++a) raw.dim[a] = 1;
    raw.datatype = static_cast<std::int16_t>(datatype);
    raw.bitpix = static_cast<std::int16_t>(8 * bytes_per_voxel(raw.datatype));
    raw.pixdim[0] = 1.0f;
    raw.pixdim[1] = static_cast<float>(geom.spacing[0]);
    raw.pixdim[2] = static_cast<float>(geom.spacing[1]);
    raw.pixdim[3] = static_cast<float>(geom.spacing[2]);
    for (int a = 4; a < 8; ++a) raw.pixdim[a] = 1.0f;
    raw.vox_offset = 352.0f;
    raw.scl_slope = 1.0f;
    raw.scl_inter = 0.0f;
    raw.xyzt_units = 2; // NIFTI_UNITS_MM
    std::snprintf(raw.descrip, sizeof(raw.descrip), "volseg %s", VOLSEG_VERSION);
    raw.qform_code = 0;
    raw.sform_code = 1;
    for (int c = 0; c < 4; ++c) {
        raw.srow_x[c] = static_cast<float>(geom.affine.at(0, c));
        raw.srow_y[c] = static_cast<float>(geom.affine.at(1, c));
        raw.srow_z[c] = static_cast<float>(geom.affine.at(2, c));
    }
    std::memcpy(raw.magic, "n+1", 4);
    return raw;
}

template <typename T>
void encode_values(std::vector<std::uint8_t>& out, const std::vector<float>& values,
                   bool allow_lossy, const char* type_name, double lo, double hi) {
    for (float v : values) {
        const double dv = v;
        T stored;
        if constexpr (std::is_integral_v<T>) {
            if (dv < lo || dv > hi || dv != std::floor(dv)) {
                if (!allow_lossy) {
                    throw PrecisionError("value " + std::to_string(dv)
                                         + " has no exact " + type_name
                                         + " representation (pass allow_lossy to round/clamp)");
                }
                stored = static_cast<T>(std::llround(std::clamp(dv, lo, hi)));
            } else {
                stored = static_cast<T>(dv);
            }
        } else {
            stored = static_cast<T>(v);
        }
        const std::size_t pos = out.size();
        out.resize(pos + sizeof(T));
        std::memcpy(out.data() + pos, &stored, sizeof(T));
    }
}

} // namespace

void write_nifti(const Volume& volume, const std::filesystem::path& path, Datatype datatype,
                 bool allow_lossy) {
    const Nifti1Disk raw = make_disk_header(volume.geom, datatype);
    std::vector<std::uint8_t> bytes;
    bytes.reserve(352 + volume.voxels.size() * static_cast<std::size_t>(bytes_per_voxel(raw.datatype)));
    bytes.resize(352, 0); // 348-byte header + 4-byte empty extension flag
    std::memcpy(bytes.data(), &raw, kHeaderSize);

    switch (datatype) {
        case Datatype::UInt8:
            encode_values<std::uint8_t>(bytes, volume.voxels, allow_lossy, "uint8", 0.0, 255.0);
            break;
        case Datatype::Int16:
            encode_values<std::int16_t>(bytes, volume.voxels, allow_lossy, "int16", -32768.0, 32767.0);
            break;
        case Datatype::Float32:
            encode_values<float>(bytes, volume.voxels, allow_lossy, "float32", 0, 0);
            break;
        case Datatype::Float64:
            encode_values<double>(bytes, volume.voxels, allow_lossy, "float64", 0, 0);
            break;
    }
    write_bytes(path, std::move(bytes));
}

void write_nifti(const Mask& mask, const std::filesystem::path& path) {
    Volume as_volume;
    as_volume.geom = mask.geom;
    as_volume.voxels.resize(mask.voxels.size());
    for (std::size_t i = 0; i < mask.voxels.size(); ++i) {
        as_volume.voxels[i] = mask.voxels[i] ? 1.0f : 0.0f;
    }
    write_nifti(as_volume, path, Datatype::UInt8, false);
}

} // namespace volseg
