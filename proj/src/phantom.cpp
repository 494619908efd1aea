#include "volseg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "volseg/errors.hpp"
#include "volseg/nifti.hpp"
#include "volseg/rng.hpp"

namespace volseg {

void PhantomSpec::validate() const {
    for (int i = 0; i < 3; ++i) {
        if (!(semi_axes_mm[i] > 0.0)) throw InputError("phantom semi-axes must be > 0");
        if (!(trufi_spacing_mm[i] > 0.0) || !(dixon_spacing_mm[i] > 0.0)) {
            throw InputError("phantom spacings must be > 0");
        }
        if (dixon_dims[i] < 1) throw InputError("phantom dixon dims must be >= 1");
    }
    const double min_axis = *std::min_element(semi_axes_mm.begin(), semi_axes_mm.end());
    if (!(shell_thickness_mm > 0.0) || !(shell_thickness_mm < min_axis)) {
        throw InputError("shell thickness must be > 0 and < the smallest semi-axis");
    }
    if (speckle_count < 0) throw InputError("speckle count must be >= 0");
    if (speckle_voxels < 1 || speckle_voxels >= 50) {
        throw InputError("speckle size must be in [1, 49] voxels");
    }
    if (!(fat_intensity > tissue_intensity)) {
        throw InputError("fat intensity must exceed tissue intensity");
    }
    if (noise_sigma < 0.0) throw InputError("noise sigma must be >= 0");
    if (slab_offset_mm < 0.0) throw InputError("slab offset must be >= 0");
}

namespace {

using nlohmann::json;

constexpr double kSlabThicknessMm = 10.0;
constexpr double kTrufiFovMarginMm = 20.0; // air border around the body

json spec_to_json(const PhantomSpec& s) {
    json j;
    j["semi_axes_mm"] = s.semi_axes_mm;
    j["shell_thickness_mm"] = s.shell_thickness_mm;
    j["trufi_spacing_mm"] = s.trufi_spacing_mm;
    j["dixon_spacing_mm"] = s.dixon_spacing_mm;
    j["dixon_dims"] = s.dixon_dims;
    j["translation_mm"] = s.translation_mm;
    j["background_intensity"] = s.background_intensity;
    j["tissue_intensity"] = s.tissue_intensity;
    j["fat_intensity"] = s.fat_intensity;
    j["noise_sigma"] = s.noise_sigma;
    j["speckle_count"] = s.speckle_count;
    j["speckle_voxels"] = s.speckle_voxels;
    j["maternal_slab"] = s.maternal_slab;
    j["slab_offset_mm"] = s.slab_offset_mm;
    j["seed"] = s.seed;
    return j;
}

} // namespace

std::string PhantomSpec::to_json() const {
    return spec_to_json(*this).dump(2) + "\n";
}

PhantomSpec PhantomSpec::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad phantom spec JSON: ") + e.what());
    }
    const json defaults = spec_to_json(PhantomSpec{});
    for (const auto& item : j.items()) {
        if (!defaults.contains(item.key())) {
            throw FormatError("unknown phantom spec key \"" + item.key() + "\"");
        }
    }
    PhantomSpec s;
    try {
        if (j.contains("semi_axes_mm")) j.at("semi_axes_mm").get_to(s.semi_axes_mm);
        if (j.contains("shell_thickness_mm")) j.at("shell_thickness_mm").get_to(s.shell_thickness_mm);
        if (j.contains("trufi_spacing_mm")) j.at("trufi_spacing_mm").get_to(s.trufi_spacing_mm);
        if (j.contains("dixon_spacing_mm")) j.at("dixon_spacing_mm").get_to(s.dixon_spacing_mm);
        if (j.contains("dixon_dims")) j.at("dixon_dims").get_to(s.dixon_dims);
        if (j.contains("translation_mm")) j.at("translation_mm").get_to(s.translation_mm);
        if (j.contains("background_intensity")) j.at("background_intensity").get_to(s.background_intensity);
        if (j.contains("tissue_intensity")) j.at("tissue_intensity").get_to(s.tissue_intensity);
        if (j.contains("fat_intensity")) j.at("fat_intensity").get_to(s.fat_intensity);
        if (j.contains("noise_sigma")) j.at("noise_sigma").get_to(s.noise_sigma);
        if (j.contains("speckle_count")) j.at("speckle_count").get_to(s.speckle_count);
        if (j.contains("speckle_voxels")) j.at("speckle_voxels").get_to(s.speckle_voxels);
        if (j.contains("maternal_slab")) j.at("maternal_slab").get_to(s.maternal_slab);
        if (j.contains("slab_offset_mm")) j.at("slab_offset_mm").get_to(s.slab_offset_mm);
        if (j.contains("seed")) j.at("seed").get_to(s.seed);
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad phantom spec value: ") + e.what());
    }
    s.validate();
    return s;
}

PhantomSpec PhantomSpec::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open phantom spec: " + path.string());
    }
    std::ostringstream os;
    os << in.rdbuf();
    return from_json(os.str());
}

namespace {

// Grid whose field-of-view centre sits at `centre` in world mm.
GridGeometry centred_grid(const Index3& dims, const Spacing3& spacing, const Point3& centre) {
    Point3 origin;
    for (int i = 0; i < 3; ++i) {
        origin[i] = centre[i] - spacing[i] * (dims[i] - 1) / 2.0;
    }
    GridGeometry g;
    g.dims = dims;
    g.spacing = spacing;
    g.affine = AffineTransform::diagonal(spacing, origin);
    return g;
}

struct EllipsoidPainter {
    std::array<double, 3> outer;
    std::array<double, 3> inner;

    bool inside(const Point3& p, const std::array<double, 3>& ax) const {
        double s = 0.0;
        for (int i = 0; i < 3; ++i) s += (p[i] / ax[i]) * (p[i] / ax[i]);
        return s <= 1.0;
    }
    // 0 = background, 1 = interior tissue, 2 = fat shell
    int region(const Point3& p) const {
        if (!inside(p, outer)) return 0;
        return inside(p, inner) ? 1 : 2;
    }
};

// Ball of voxel offsets ordered by physical distance (ties broken by index)
// so a prefix is always a compact connected blob.
std::vector<Index3> blob_offsets(const Spacing3& sp, int count) {
    std::vector<Index3> all;
    for (int r = 2;; r += 1) {
        all.clear();
        const int ri = static_cast<int>(std::ceil(r / sp[0]));
        const int rj = static_cast<int>(std::ceil(r / sp[1]));
        const int rk = static_cast<int>(std::ceil(r / sp[2]));
        for (int dk = -rk; dk <= rk; ++dk)
            for (int dj = -rj; dj <= rj; ++dj)
                for (int di = -ri; di <= ri; ++di) all.push_back({di, dj, dk});
        if (static_cast<int>(all.size()) >= count) break;
    }
    auto d2 = [&sp](const Index3& o) {
        return o[0] * sp[0] * o[0] * sp[0] + o[1] * sp[1] * o[1] * sp[1]
               + o[2] * sp[2] * o[2] * sp[2];
    };
    std::sort(all.begin(), all.end(), [&](const Index3& a, const Index3& b) {
        const double da = d2(a), db = d2(b);
        if (da != db) return da < db;
        return a < b;
    });
    all.resize(count);
    return all;
}

void add_noise(Volume& v, double sigma, SplitMix64& rng) {
    for (auto& x : v.voxels) {
        x = static_cast<float>(x + sigma * rng.gaussian());
    }
}

} // namespace

PhantomCase generate(const PhantomSpec& spec) {
    spec.validate();

    Index3 trufi_dims;
    for (int i = 0; i < 3; ++i) {
        trufi_dims[i] = static_cast<int>(
            std::ceil(2.0 * (spec.semi_axes_mm[i] + kTrufiFovMarginMm) / spec.trufi_spacing_mm[i]));
    }
    const GridGeometry trufi_grid = centred_grid(trufi_dims, spec.trufi_spacing_mm, {0.0, 0.0, 0.0});
    const GridGeometry dixon_grid = centred_grid(
        spec.dixon_dims, spec.dixon_spacing_mm,
        {spec.translation_mm[0], spec.translation_mm[1], spec.translation_mm[2]});

    EllipsoidPainter body;
    body.outer = spec.semi_axes_mm;
    for (int i = 0; i < 3; ++i) body.inner[i] = spec.semi_axes_mm[i] - spec.shell_thickness_mm;

    PhantomCase pc;
    pc.spec = spec;
    pc.trufi = Volume::zeros(trufi_grid);
    pc.dixon_fat = Volume::zeros(dixon_grid);
    pc.dixon_water = Volume::zeros(dixon_grid);
    pc.gt_body_trufi = Mask::zeros(trufi_grid);
    pc.gt_body_dixon = Mask::zeros(dixon_grid);
    pc.gt_fat_dixon = Mask::zeros(dixon_grid);
    pc.speckles_dixon = Mask::zeros(dixon_grid);

    const auto bg = static_cast<float>(spec.background_intensity);
    const auto tissue = static_cast<float>(spec.tissue_intensity);
    const auto fat = static_cast<float>(spec.fat_intensity);

    const double slab_lo = spec.semi_axes_mm[0] + spec.slab_offset_mm;
    const double slab_hi = slab_lo + kSlabThicknessMm;
    const auto in_slab = [&](const Point3& p) {
        return spec.maternal_slab && p[0] >= slab_lo && p[0] <= slab_hi;
    };

    {
        std::size_t idx = 0;
        for (int k = 0; k < trufi_dims[2]; ++k) {
            for (int j = 0; j < trufi_dims[1]; ++j) {
                for (int i = 0; i < trufi_dims[0]; ++i, ++idx) {
                    const Point3 p = voxel_to_world(trufi_grid.affine, {i, j, k});
                    const int r = body.region(p);
                    pc.gt_body_trufi.voxels[idx] = r != 0;
                    pc.trufi.voxels[idx] = (r == 2) ? fat : (r == 1 ? tissue : bg);
                    if (r == 0 && in_slab(p)) pc.trufi.voxels[idx] = tissue;
                }
            }
        }
    }
    {
        std::size_t idx = 0;
        for (int k = 0; k < spec.dixon_dims[2]; ++k) {
            for (int j = 0; j < spec.dixon_dims[1]; ++j) {
                for (int i = 0; i < spec.dixon_dims[0]; ++i, ++idx) {
                    const Point3 p = voxel_to_world(dixon_grid.affine, {i, j, k});
                    const int r = body.region(p);
                    pc.gt_body_dixon.voxels[idx] = r != 0;
                    pc.gt_fat_dixon.voxels[idx] = r == 2;
                    pc.dixon_fat.voxels[idx] = (r == 2) ? fat : (r == 1 ? tissue : bg);
                    pc.dixon_water.voxels[idx] = (r == 1) ? fat : (r == 2 ? tissue : bg);
                    if (r == 0 && in_slab(p)) {
                        pc.dixon_fat.voxels[idx] = fat; // maternal fat layer
                        pc.dixon_water.voxels[idx] = tissue;
                    }
                }
            }
        }
    }

    SplitMix64 rng(spec.seed);

    if (spec.speckle_count > 0) {
        // Speckles live deep inside the tissue so they can never merge with
        // the shell: centres restricted to a 0.7-scaled inner ellipsoid.
        EllipsoidPainter safe;
        safe.outer = body.inner;
        for (int i = 0; i < 3; ++i) safe.outer[i] *= 0.7;
        safe.inner = {1e-9, 1e-9, 1e-9};

        const std::vector<Index3> offsets =
            blob_offsets(spec.dixon_spacing_mm, spec.speckle_voxels);
        int placed = 0;
        for (int attempt = 0; attempt < 10000 && placed < spec.speckle_count; ++attempt) {
            const int ci = rng.uniform_int(0, spec.dixon_dims[0] - 1);
            const int cj = rng.uniform_int(0, spec.dixon_dims[1] - 1);
            const int ck = rng.uniform_int(0, spec.dixon_dims[2] - 1);
            const Point3 cp = voxel_to_world(dixon_grid.affine, {ci, cj, ck});
            if (body.inside(cp, safe.outer) == false) continue;
            bool ok = true;
            for (const auto& o : offsets) {
                const int i = ci + o[0], j = cj + o[1], k = ck + o[2];
                if (!dixon_grid.contains(i, j, k)
                    || pc.speckles_dixon.voxels[dixon_grid.linear(i, j, k)]) {
                    ok = false;
                    break;
                }
                const Point3 p = voxel_to_world(dixon_grid.affine, {i, j, k});
                if (!body.inside(p, safe.outer)) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            for (const auto& o : offsets) {
                const std::size_t idx = dixon_grid.linear(ci + o[0], cj + o[1], ck + o[2]);
                pc.speckles_dixon.voxels[idx] = 1;
                pc.dixon_fat.voxels[idx] = fat;
            }
            ++placed;
        }
        if (placed < spec.speckle_count) {
            throw InputError("could not place the requested speckles inside the phantom");
        }
    }

    if (spec.noise_sigma > 0.0) {
        add_noise(pc.trufi, spec.noise_sigma, rng);
        add_noise(pc.dixon_fat, spec.noise_sigma, rng);
        add_noise(pc.dixon_water, spec.noise_sigma, rng);
    }

    return pc;
}

void write_case(const PhantomCase& pc, const std::filesystem::path& directory, bool force) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) {
        throw IoError("cannot create phantom directory: " + directory.string());
    }
    const fs::path spec_path = directory / "spec.json";
    if (!force && fs::exists(spec_path)) {
        throw InputError("phantom directory already holds a case: " + spec_path.string()
                         + " (use force to overwrite)");
    }
    write_nifti(pc.trufi, directory / "trufi.nii.gz");
    write_nifti(pc.dixon_fat, directory / "dixon_fat.nii.gz");
    write_nifti(pc.dixon_water, directory / "dixon_water.nii.gz");
    write_nifti(pc.gt_body_trufi, directory / "gt_body_trufi.nii.gz");
    write_nifti(pc.gt_body_dixon, directory / "gt_body_dixon.nii.gz");
    write_nifti(pc.gt_fat_dixon, directory / "gt_fat_dixon.nii.gz");
    std::ofstream out(spec_path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write phantom spec: " + spec_path.string());
    }
    out << pc.spec.to_json();
}

} // namespace volseg
