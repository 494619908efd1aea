#include "volseg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace volseg {

ThresholdSpec ThresholdSpec::parse(const std::string& text) {
    if (text == "otsu") return auto_otsu();
    try {
        std::size_t pos = 0;
        const float v = std::stof(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        if (!std::isfinite(v)) throw InputError("threshold must be finite, got \"" + text + "\"");
        return numeric(v);
    } catch (const std::logic_error&) {
        throw InputError("threshold must be a number or \"otsu\", got \"" + text + "\"");
    }
}

std::string ThresholdSpec::to_string() const {
    if (otsu) return "otsu";
    std::ostringstream os;
    os << value;
    return os.str();
}

MorphStep MorphStep::parse(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw InputError("morphology step must look like op:radius_mm, got \"" + text + "\"");
    }
    const std::string op_name = text.substr(0, colon);
    MorphStep step;
    if (op_name == "open") {
        step.op = MorphOp::Open;
    } else if (op_name == "close") {
        step.op = MorphOp::Close;
    } else {
        throw InputError("morphology op must be open or close, got \"" + op_name + "\"");
    }
    try {
        step.radius_mm = std::stod(text.substr(colon + 1));
    } catch (const std::logic_error&) {
        throw InputError("bad morphology radius in \"" + text + "\"");
    }
    if (!(step.radius_mm >= 0.0) || !std::isfinite(step.radius_mm)) {
        throw InputError("morphology radius must be >= 0, got \"" + text + "\"");
    }
    return step;
}

std::string MorphStep::to_string() const {
    std::ostringstream os;
    os << (op == MorphOp::Open ? "open" : "close") << ':' << radius_mm;
    return os.str();
}

void PipelineParams::validate() const {
    if (min_component_voxels < 1) {
        throw InputError("min_component_voxels must be >= 1");
    }
    if (connectivity != 6 && connectivity != 18 && connectivity != 26) {
        throw InputError("connectivity must be 6, 18 or 26, got " + std::to_string(connectivity));
    }
    if (!(voi_margin_mm >= 0.0)) {
        throw InputError("voi_margin_mm must be >= 0");
    }
    for (const auto& step : morphology) {
        if (!(step.radius_mm >= 0.0)) throw InputError("morphology radius must be >= 0");
    }
    if (threshold && !threshold->otsu && !std::isfinite(threshold->value)) {
        throw InputError("numeric threshold must be finite");
    }
}

std::string PipelineParams::to_config_text() const {
    std::ostringstream os;
    if (threshold) os << "threshold=" << threshold->to_string() << '\n';
    os << "min_component=" << min_component_voxels << '\n';
    os << "connectivity=" << connectivity << '\n';
    os << "voi_margin_mm=" << voi_margin_mm << '\n';
    if (!morphology.empty()) {
        os << "morph=";
        for (std::size_t i = 0; i < morphology.size(); ++i) {
            if (i) os << ',';
            os << morphology[i].to_string();
        }
        os << '\n';
    }
    os << "voi_box=" << (apply_voi_box ? "true" : "false") << '\n';
    os << "body_silhouette=" << (apply_body_silhouette ? "true" : "false") << '\n';
    return os.str();
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw InputError("config key " + key + " expects true/false, got \"" + v + "\"");
}

std::vector<MorphStep> parse_morph_list(const std::string& v) {
    std::vector<MorphStep> steps;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) steps.push_back(MorphStep::parse(item));
    }
    return steps;
}

} // namespace

PipelineParams PipelineParams::from_config_text(const std::string& text) {
    PipelineParams p;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InputError("config line " + std::to_string(lineno) + " is not key=value: \"" + line + "\"");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "threshold") {
                p.threshold = ThresholdSpec::parse(val);
            } else if (key == "min_component") {
                p.min_component_voxels = std::stoi(val);
            } else if (key == "connectivity") {
                p.connectivity = std::stoi(val);
            } else if (key == "voi_margin_mm") {
                p.voi_margin_mm = std::stod(val);
            } else if (key == "morph") {
                p.morphology = parse_morph_list(val);
            } else if (key == "voi_box") {
                p.apply_voi_box = parse_bool(val, key);
            } else if (key == "body_silhouette") {
                p.apply_body_silhouette = parse_bool(val, key);
            } else {
                throw InputError("unknown config key \"" + key + "\"");
            }
        } catch (const std::logic_error&) {
            throw InputError("bad value for config key " + key + ": \"" + val + "\"");
        }
    }
    p.validate();
    return p;
}

PipelineParams PipelineParams::from_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file: " + path.string());
    }
    std::ostringstream os;
    os << in.rdbuf();
    return from_config_text(os.str());
}

Mask threshold_in_voi(const Volume& fat, const VoxelBox& voi, float threshold) {
    const VoxelBox grid = full_box(fat.geom);
    if (voi.valid()
        && (!grid.contains(voi.lo[0], voi.lo[1], voi.lo[2])
            || !grid.contains(voi.hi[0], voi.hi[1], voi.hi[2]))) {
        throw InputError("VOI extends outside the volume grid");
    }
    Mask out = Mask::zeros(fat.geom);
    for (int k = voi.lo[2]; k <= voi.hi[2]; ++k) {
        for (int j = voi.lo[1]; j <= voi.hi[1]; ++j) {
            std::size_t idx = fat.geom.linear(voi.lo[0], j, k);
            for (int i = voi.lo[0]; i <= voi.hi[0]; ++i, ++idx) {
                if (fat.voxels[idx] >= threshold) out.voxels[idx] = 1;
            }
        }
    }
    return out;
}

float otsu_threshold(const Volume& fat, const VoxelBox& voi) {
    float lo = std::numeric_limits<float>::max();
    float hi = std::numeric_limits<float>::lowest();
    for (int k = voi.lo[2]; k <= voi.hi[2]; ++k) {
        for (int j = voi.lo[1]; j <= voi.hi[1]; ++j) {
            std::size_t idx = fat.geom.linear(voi.lo[0], j, k);
            for (int i = voi.lo[0]; i <= voi.hi[0]; ++i, ++idx) {
                lo = std::min(lo, fat.voxels[idx]);
                hi = std::max(hi, fat.voxels[idx]);
            }
        }
    }
    if (!(lo < hi)) {
        throw DegenerateHistogramError("Otsu threshold over a constant region");
    }

    constexpr int kBins = 256;
    const double width = (static_cast<double>(hi) - lo) / kBins;
    std::array<std::int64_t, kBins> hist{};
    for (int k = voi.lo[2]; k <= voi.hi[2]; ++k) {
        for (int j = voi.lo[1]; j <= voi.hi[1]; ++j) {
            std::size_t idx = fat.geom.linear(voi.lo[0], j, k);
            for (int i = voi.lo[0]; i <= voi.hi[0]; ++i, ++idx) {
                int bin = static_cast<int>((fat.voxels[idx] - lo) / width);
                bin = std::clamp(bin, 0, kBins - 1);
                ++hist[bin];
            }
        }
    }

    std::int64_t total = 0;
    double total_mean_num = 0.0;
    for (int b = 0; b < kBins; ++b) {
        total += hist[b];
        total_mean_num += static_cast<double>(b) * hist[b];
    }

    // maximize between-class variance; strict > keeps the lowest split on ties
    std::int64_t w0 = 0;
    double mean0_num = 0.0;
    double best_var = -1.0;
    int best_split = 0;
    for (int t = 0; t < kBins - 1; ++t) {
        w0 += hist[t];
        mean0_num += static_cast<double>(t) * hist[t];
        const std::int64_t w1 = total - w0;
        if (w0 == 0 || w1 == 0) continue;
        const double mean0 = mean0_num / w0;
        const double mean1 = (total_mean_num - mean0_num) / w1;
        const double var = static_cast<double>(w0) * w1 * (mean0 - mean1) * (mean0 - mean1);
        if (var > best_var) {
            best_var = var;
            best_split = t;
        }
    }
    // lower edge of the first bin classified as foreground
    return static_cast<float>(lo + width * (best_split + 1));
}

namespace {

// Prior-scan neighbour offsets (dk,dj,di lexicographically negative) for the
// two-pass union-find labeling.
std::vector<Index3> prior_neighbours(int connectivity) {
    std::vector<Index3> offsets;
    for (int dk = -1; dk <= 0; ++dk) {
        for (int dj = -1; dj <= 1; ++dj) {
            for (int di = -1; di <= 1; ++di) {
                if (dk > 0) continue;
                if (dk == 0 && (dj > 0 || (dj == 0 && di >= 0))) continue;
                const int manhattan = std::abs(di) + std::abs(dj) + std::abs(dk);
                if (connectivity == 6 && manhattan != 1) continue;
                if (connectivity == 18 && manhattan > 2) continue;
                offsets.push_back({di, dj, dk});
            }
        }
    }
    return offsets;
}

struct DisjointSet {
    std::vector<std::int32_t> parent;

    std::int32_t make() {
        parent.push_back(static_cast<std::int32_t>(parent.size()));
        return static_cast<std::int32_t>(parent.size() - 1);
    }
    std::int32_t find(std::int32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]]; // path halving
            x = parent[x];
        }
        return x;
    }
    void unite(std::int32_t a, std::int32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

} // namespace

LabeledComponents label_components(const Mask& mask, int connectivity) {
    if (connectivity != 6 && connectivity != 18 && connectivity != 26) {
        throw InputError("connectivity must be 6, 18 or 26, got " + std::to_string(connectivity));
    }
    const auto& d = mask.geom.dims;
    LabeledComponents out;
    out.dims = d;
    out.labels.assign(mask.voxels.size(), 0);

    const std::vector<Index3> offsets = prior_neighbours(connectivity);
    DisjointSet dsu;
    dsu.make(); // slot 0 = background

    std::size_t idx = 0;
    for (int k = 0; k < d[2]; ++k) {
        for (int j = 0; j < d[1]; ++j) {
            for (int i = 0; i < d[0]; ++i, ++idx) {
                if (!mask.voxels[idx]) continue;
                std::int32_t assigned = 0;
                for (const auto& o : offsets) {
                    const int ni = i + o[0], nj = j + o[1], nk = k + o[2];
                    if (!mask.geom.contains(ni, nj, nk)) continue;
                    const std::int32_t nl = out.labels[mask.geom.linear(ni, nj, nk)];
                    if (nl == 0) continue;
                    if (assigned == 0) {
                        assigned = nl;
                    } else if (assigned != nl) {
                        dsu.unite(assigned, nl);
                    }
                }
                out.labels[idx] = (assigned != 0) ? assigned : dsu.make();
            }
        }
    }

    // Relabel roots compactly in first-encountered scan order.
    std::vector<std::int32_t> compact(dsu.parent.size(), 0);
    std::int32_t next = 0;
    for (auto& l : out.labels) {
        if (l == 0) continue;
        const std::int32_t root = dsu.find(l);
        if (compact[root] == 0) {
            compact[root] = ++next;
            out.sizes.push_back(0);
        }
        l = compact[root];
        ++out.sizes[static_cast<std::size_t>(l) - 1];
    }
    return out;
}

Mask filter_small_components(const Mask& mask, int min_voxels, int connectivity) {
    if (min_voxels < 1) {
        throw InputError("min_voxels must be >= 1");
    }
    if (min_voxels == 1) return mask;
    const LabeledComponents cc = label_components(mask, connectivity);
    Mask out = Mask::zeros(mask.geom);
    for (std::size_t i = 0; i < cc.labels.size(); ++i) {
        const std::int32_t l = cc.labels[i];
        if (l != 0 && cc.sizes[static_cast<std::size_t>(l) - 1] >= min_voxels) {
            out.voxels[i] = 1;
        }
    }
    return out;
}

namespace {

std::vector<Index3> ball_offsets(const Spacing3& spacing, double radius_mm) {
    std::vector<Index3> offsets;
    const int rx = static_cast<int>(std::floor(radius_mm / spacing[0] + 1e-9));
    const int ry = static_cast<int>(std::floor(radius_mm / spacing[1] + 1e-9));
    const int rz = static_cast<int>(std::floor(radius_mm / spacing[2] + 1e-9));
    const double r2 = radius_mm * radius_mm + 1e-9;
    for (int dk = -rz; dk <= rz; ++dk) {
        for (int dj = -ry; dj <= ry; ++dj) {
            for (int di = -rx; di <= rx; ++di) {
                const double d2 = di * spacing[0] * di * spacing[0]
                                + dj * spacing[1] * dj * spacing[1]
                                + dk * spacing[2] * dk * spacing[2];
                if (d2 <= r2) offsets.push_back({di, dj, dk});
            }
        }
    }
    return offsets;
}

Mask dilate(const Mask& mask, const std::vector<Index3>& se) {
    Mask out = Mask::zeros(mask.geom);
    const auto& d = mask.geom.dims;
    std::size_t idx = 0;
    for (int k = 0; k < d[2]; ++k) {
        for (int j = 0; j < d[1]; ++j) {
            for (int i = 0; i < d[0]; ++i, ++idx) {
                if (!mask.voxels[idx]) continue;
                for (const auto& o : se) {
                    const int ni = i + o[0], nj = j + o[1], nk = k + o[2];
                    if (mask.geom.contains(ni, nj, nk)) {
                        out.voxels[mask.geom.linear(ni, nj, nk)] = 1;
                    }
                }
            }
        }
    }
    return out;
}

// Out-of-grid neighbours count as foreground, so erosion (and hence closing)
// does not eat the image border.
Mask erode(const Mask& mask, const std::vector<Index3>& se) {
    Mask out = Mask::zeros(mask.geom);
    const auto& d = mask.geom.dims;
    std::size_t idx = 0;
    for (int k = 0; k < d[2]; ++k) {
        for (int j = 0; j < d[1]; ++j) {
            for (int i = 0; i < d[0]; ++i, ++idx) {
                if (!mask.voxels[idx]) continue;
                bool keep = true;
                for (const auto& o : se) {
                    const int ni = i + o[0], nj = j + o[1], nk = k + o[2];
                    if (mask.geom.contains(ni, nj, nk) && !mask.voxels[mask.geom.linear(ni, nj, nk)]) {
                        keep = false;
                        break;
                    }
                }
                if (keep) out.voxels[idx] = 1;
            }
        }
    }
    return out;
}

} // namespace

Mask morph(const Mask& mask, MorphOp op, double radius_mm) {
    if (!(radius_mm >= 0.0)) {
        throw InputError("morphology radius must be >= 0");
    }
    const std::vector<Index3> se = ball_offsets(mask.geom.spacing, radius_mm);
    if (se.size() == 1) return mask; // radius below one voxel: identity
    if (op == MorphOp::Open) {
        return dilate(erode(mask, se), se);
    }
    return erode(dilate(mask, se), se);
}

SemiAutoResult run_semi_auto_detailed(const Volume& fat, const Mask& body_mask_src,
                                      const PipelineParams& params) {
    params.validate();
    if (!params.threshold) {
        throw InputError("pipeline threshold not set (numeric value or otsu)");
    }
    if (!body_mask_src.any()) {
        throw EmptyMaskError("body mask has no foreground voxels");
    }

    SemiAutoResult res;
    res.body_resampled = resample_mask_nearest(body_mask_src, fat.geom);
    if (!res.body_resampled.any()) {
        throw EmptyMaskError("body mask maps entirely outside the fat volume");
    }

    res.voi = params.apply_voi_box
                  ? expand_box(bounding_box(res.body_resampled), params.voi_margin_mm,
                               fat.geom.spacing, fat.geom.dims)
                  : full_box(fat.geom);

    res.threshold_used = params.threshold->otsu ? otsu_threshold(fat, res.voi)
                                                : params.threshold->value;

    Mask mask = threshold_in_voi(fat, res.voi, res.threshold_used);
    if (params.apply_body_silhouette) {
        for (std::size_t i = 0; i < mask.voxels.size(); ++i) {
            mask.voxels[i] = mask.voxels[i] & res.body_resampled.voxels[i];
        }
    }
    for (const auto& step : params.morphology) {
        mask = morph(mask, step.op, step.radius_mm);
    }
    if (params.apply_voi_box) {
        // closing may grow past the box edge; the VOI bound is a contract
        const auto& d = mask.geom.dims;
        std::size_t idx = 0;
        for (int k = 0; k < d[2]; ++k)
            for (int j = 0; j < d[1]; ++j)
                for (int i = 0; i < d[0]; ++i, ++idx)
                    if (mask.voxels[idx] && !res.voi.contains(i, j, k)) mask.voxels[idx] = 0;
    }
    res.fat_mask = filter_small_components(mask, params.min_component_voxels, params.connectivity);
    return res;
}

Mask run_semi_auto(const Volume& fat, const Mask& body_mask_src, const PipelineParams& params) {
    return run_semi_auto_detailed(fat, body_mask_src, params).fat_mask;
}

} // namespace volseg
