#include "volseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "volseg/distance_transform.hpp"
#include "volseg/errors.hpp"

namespace volseg {

namespace {

void require_same_grid(const Mask& a, const Mask& b, const char* what) {
    if (!a.geom.same_as(b.geom)) {
        throw GeometryError(std::string("masks live on different grids (") + what + ")");
    }
}

} // namespace

Mask surface_voxels(const Mask& mask) {
    static constexpr int kFace[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                        {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
    Mask out = Mask::zeros(mask.geom);
    const auto& d = mask.geom.dims;
    std::size_t idx = 0;
    for (int k = 0; k < d[2]; ++k) {
        for (int j = 0; j < d[1]; ++j) {
            for (int i = 0; i < d[0]; ++i, ++idx) {
                if (!mask.voxels[idx]) continue;
                for (const auto& o : kFace) {
                    const int ni = i + o[0], nj = j + o[1], nk = k + o[2];
                    if (!mask.geom.contains(ni, nj, nk)
                        || !mask.voxels[mask.geom.linear(ni, nj, nk)]) {
                        out.voxels[idx] = 1;
                        break;
                    }
                }
            }
        }
    }
    return out;
}

double dice(const Mask& a, const Mask& b) {
    require_same_grid(a, b, "dice");
    std::size_t na = 0, nb = 0, nab = 0;
    for (std::size_t i = 0; i < a.voxels.size(); ++i) {
        na += a.voxels[i] != 0;
        nb += b.voxels[i] != 0;
        nab += (a.voxels[i] != 0) && (b.voxels[i] != 0);
    }
    if (na + nb == 0) return 1.0; // two empty masks agree perfectly
    return 2.0 * static_cast<double>(nab) / static_cast<double>(na + nb);
}

namespace {

struct SurfacePair {
    Mask sa, sb;
    std::vector<double> dist_to_sb; // at every voxel, mm to nearest sa/sb surface voxel
    std::vector<double> dist_to_sa;
};

SurfacePair surface_distances(const Mask& a, const Mask& b, const char* what) {
    require_same_grid(a, b, what);
    if (!a.any() || !b.any()) {
        throw EmptyMaskError(std::string(what) + " needs two non-empty masks");
    }
    SurfacePair p;
    p.sa = surface_voxels(a);
    p.sb = surface_voxels(b);
    p.dist_to_sb = distance_transform(p.sb);
    p.dist_to_sa = distance_transform(p.sa);
    return p;
}

} // namespace

double hausdorff_mm(const Mask& a, const Mask& b) {
    const SurfacePair p = surface_distances(a, b, "hausdorff");
    double worst = 0.0;
    for (std::size_t i = 0; i < p.sa.voxels.size(); ++i) {
        if (p.sa.voxels[i]) worst = std::max(worst, p.dist_to_sb[i]);
        if (p.sb.voxels[i]) worst = std::max(worst, p.dist_to_sa[i]);
    }
    return worst;
}

double assd_mm(const Mask& a, const Mask& b) {
    const SurfacePair p = surface_distances(a, b, "assd");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < p.sa.voxels.size(); ++i) {
        if (p.sa.voxels[i]) {
            sum += p.dist_to_sb[i];
            ++n;
        }
        if (p.sb.voxels[i]) {
            sum += p.dist_to_sa[i];
            ++n;
        }
    }
    return sum / static_cast<double>(n);
}

double volume_ml(const Mask& mask) {
    return static_cast<double>(mask.foreground_count()) * mask.geom.voxel_volume_mm3() / 1000.0;
}

double vd_ml(const Mask& pred, const Mask& gt) {
    require_same_grid(pred, gt, "volume difference");
    return std::abs(volume_ml(pred) - volume_ml(gt));
}

double rvd_percent(const Mask& pred, const Mask& gt, const Mask& body) {
    require_same_grid(pred, gt, "rvd");
    require_same_grid(pred, body, "rvd body");
    const double body_ml = volume_ml(body);
    if (body_ml <= 0.0) {
        throw EmptyMaskError("rvd needs a non-empty body mask");
    }
    return 100.0 * vd_ml(pred, gt) / body_ml;
}

CaseMetrics evaluate_case(const std::string& case_id, const Mask& pred, const Mask& gt,
                          const Mask& body) {
    CaseMetrics m;
    m.case_id = case_id;
    m.dice = dice(pred, gt);
    // share the surface distance fields between hausdorff and assd
    const SurfacePair p = surface_distances(pred, gt, "evaluate");
    double worst = 0.0, sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < p.sa.voxels.size(); ++i) {
        if (p.sa.voxels[i]) {
            worst = std::max(worst, p.dist_to_sb[i]);
            sum += p.dist_to_sb[i];
            ++n;
        }
        if (p.sb.voxels[i]) {
            worst = std::max(worst, p.dist_to_sa[i]);
            sum += p.dist_to_sa[i];
            ++n;
        }
    }
    m.hausdorff_mm = worst;
    m.assd_mm = sum / static_cast<double>(n);
    m.vd_ml = vd_ml(pred, gt);
    m.rvd_percent = rvd_percent(pred, gt, body);
    return m;
}

namespace {

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

constexpr const char* kHeader = "case_id,dice,hausdorff_mm,assd_mm,vd_ml,rvd_percent,correction_time_s";

} // namespace

// Splits one CSV record, honouring quoted fields.
std::vector<std::string> split_csv_record(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string metrics_csv_header() { return kHeader; }

std::string metrics_csv_row(const CaseMetrics& m) {
    std::ostringstream os;
    os << csv_escape(m.case_id) << ',' << fixed6(m.dice) << ',' << fixed6(m.hausdorff_mm) << ','
       << fixed6(m.assd_mm) << ',' << fixed6(m.vd_ml) << ',' << fixed6(m.rvd_percent) << ',';
    if (m.correction_time_s) os << fixed6(*m.correction_time_s);
    return os.str();
}

std::string metrics_error_row(const std::string& case_id, const std::string& reason) {
    return csv_escape(case_id) + ",ERROR," + csv_escape(reason) + ",,,,";
}

void write_metrics_csv(const std::vector<CaseMetrics>& rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write metrics CSV: " + path.string());
    }
    out << kHeader << '\n';
    for (const auto& m : rows) out << metrics_csv_row(m) << '\n';
    if (!out) {
        throw IoError("short write to metrics CSV: " + path.string());
    }
}

std::vector<CaseMetrics> read_metrics_csv(const std::filesystem::path& path,
                                          std::vector<std::string>* skipped) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open metrics CSV: " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("metrics CSV is empty: " + path.string());
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader) {
        throw FormatError("metrics CSV header mismatch in " + path.string());
    }
    std::vector<CaseMetrics> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv_record(line);
        if (f.size() != 7) {
            throw FormatError("metrics CSV line " + std::to_string(lineno) + " has "
                              + std::to_string(f.size()) + " fields, expected 7");
        }
        if (f[1] == "ERROR") {
            if (skipped) skipped->push_back(f[0] + ": " + f[2]);
            continue;
        }
        CaseMetrics m;
        m.case_id = f[0];
        try {
            m.dice = std::stod(f[1]);
            m.hausdorff_mm = std::stod(f[2]);
            m.assd_mm = std::stod(f[3]);
            m.vd_ml = std::stod(f[4]);
            m.rvd_percent = std::stod(f[5]);
            if (!f[6].empty()) m.correction_time_s = std::stod(f[6]);
        } catch (const std::logic_error&) {
            throw FormatError("metrics CSV line " + std::to_string(lineno) + " has a non-numeric field");
        }
        rows.push_back(std::move(m));
    }
    return rows;
}

} // namespace volseg
