// Release gate: ten self-contained checks, one line of output each.
// Exits nonzero if any check fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "oracles.hpp"
#include "volseg/distance_transform.hpp"
#include "volseg/geometry.hpp"
#include "volseg/metrics.hpp"
#include "volseg/nifti.hpp"
#include "volseg/phantom.hpp"
#include "volseg/pipeline.hpp"
#include "volseg/stats.hpp"

#ifndef VOLSEG_CLI_BIN
#error "VOLSEG_CLI_BIN must point at the built executable"
#endif

using namespace volseg;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- utilities

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

std::string shell_quote(const std::string& s) {
    std::string q = "'";
    for (const char c : s) q += (c == '\'') ? std::string("'\\''") : std::string(1, c);
    q += "'";
    return q;
}

int run_tool(const std::vector<std::string>& args, const fs::path& log) {
    std::string cmd = shell_quote(VOLSEG_CLI_BIN);
    for (const auto& a : args) cmd += " " + shell_quote(a);
    cmd += " >" + shell_quote(log.string()) + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// The shared randomized mask suite: 200 pairs, dims up to 12 per axis,
// cycling through the acquisition spacings exercised elsewhere.
struct SuitePair {
    Mask a, b;
};

const std::vector<SuitePair>& suite() {
    static std::vector<SuitePair> pairs = [] {
        const Spacing3 spacings[4] = {
            {1.0, 1.0, 1.0}, {1.0, 1.0, 2.0}, {1.25, 1.25, 1.5}, {0.78, 0.78, 2.0}};
        std::vector<SuitePair> out;
        out.reserve(200);
        for (int s = 0; s < 200; ++s) {
            oracle::Rng rng(7000 + s);
            const Index3 dims{static_cast<int>(2 + rng.index(11)),
                              static_cast<int>(2 + rng.index(11)),
                              static_cast<int>(2 + rng.index(11))};
            const double prob = 0.15 + 0.5 * rng.uniform();
            SuitePair p;
            p.a = oracle::random_mask(9000 + 2 * s, dims, prob, spacings[s % 4]);
            p.b = oracle::random_mask(9001 + 2 * s, dims, prob, spacings[s % 4]);
            out.push_back(std::move(p));
        }
        return out;
    }();
    return pairs;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --------------------------------------------------------------- criteria

bool metric_oracle_equivalence(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    auto volume_oracle = [](const Mask& m) {
        return static_cast<double>(m.foreground_count())
               * (m.geom.spacing[0] * m.geom.spacing[1] * m.geom.spacing[2]) / 1000.0;
    };
    int exact_misses = 0;
    double worst_surface = 0.0;
    for (const auto& p : suite()) {
        if (dice(p.a, p.b) != oracle::dice(p.a, p.b)) ++exact_misses;
        if (vd_ml(p.a, p.b) != std::abs(volume_oracle(p.a) - volume_oracle(p.b))) ++exact_misses;
        worst_surface = std::max(worst_surface,
                                 std::abs(hausdorff_mm(p.a, p.b) - oracle::hausdorff(p.a, p.b)));
        worst_surface =
            std::max(worst_surface, std::abs(assd_mm(p.a, p.b) - oracle::assd(p.a, p.b)));
    }
    const double secs = seconds_since(t0);
    detail = "200 pairs, " + std::to_string(exact_misses) + " exact misses, worst surface delta "
             + fmt("%.2e", worst_surface) + " mm in " + fmt("%.1f", secs) + " s";
    return exact_misses == 0 && worst_surface <= 1e-9 && secs < 60.0;
}

bool distance_transform_exactness(std::string& detail) {
    double worst_rel = 0.0;
    std::size_t int_misses = 0;
    for (const auto& p : suite()) {
        const auto got = distance_transform_squared(p.a);
        const auto want = oracle::dt_squared(p.a);
        for (std::size_t i = 0; i < got.size(); ++i) {
            const double scale = std::max(1.0, want[i]);
            worst_rel = std::max(worst_rel, std::abs(got[i] - want[i]) / scale);
        }
        // rational spacings also admit an exact integer-arithmetic check
        const Spacing3& sp = p.a.geom.spacing;
        Index3 int_sp{0, 0, 0};
        double mult = 0.0;
        if (sp == Spacing3{1.0, 1.0, 2.0}) {
            int_sp = {1, 1, 2};
            mult = 1.0;
        } else if (sp == Spacing3{1.25, 1.25, 1.5}) {
            int_sp = {5, 5, 6}; // spacings scaled by 4
            mult = 4.0;
        }
        if (mult > 0.0) {
            const auto want_int = oracle::dt_squared_int(p.a, int_sp);
            for (std::size_t i = 0; i < got.size(); ++i) {
                if (std::llround(got[i] * mult * mult) != want_int[i]) ++int_misses;
            }
        }
    }
    detail = "worst relative error " + fmt("%.2e", worst_rel) + ", "
             + std::to_string(int_misses) + " integer-space mismatches";
    return worst_rel <= 1e-9 && int_misses == 0;
}

bool component_filter_cutoff(std::string& detail) {
    Mask m = Mask::zeros(oracle::make_grid({16, 16, 8}, {1.0, 1.0, 1.0}));
    testutil::fill_box(m, {0, 0, 0}, {6, 6, 0});    // 49 voxels
    testutil::fill_box(m, {9, 9, 2}, {13, 13, 3});  // 50 voxels
    const Mask kept = filter_small_components(m, 50, 26);

    Mask want = Mask::zeros(m.geom);
    testutil::fill_box(want, {9, 9, 2}, {13, 13, 3});
    const bool ok = testutil::masks_equal(kept, want);
    detail = "kept " + std::to_string(kept.foreground_count()) + " of 99 voxels";
    return ok;
}

bool phantom_recovery(std::string& detail) {
    PipelineParams params;
    params.threshold = ThresholdSpec::numeric(60.0f); // tissue/fat midpoint
    params.morphology.clear();
    params.apply_body_silhouette = false; // box VOI only; mapping has its own check

    const auto t0 = std::chrono::steady_clock::now();
    const PhantomSpec clean_spec; // 128x128x96 fat/water grid
    const PhantomCase clean = generate(clean_spec);
    const Mask pred_clean = run_semi_auto(clean.dixon_fat, clean.gt_body_trufi, params);
    const double dice_clean = dice(pred_clean, clean.gt_fat_dixon);
    const double secs_clean = seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    PhantomSpec noisy_spec;
    noisy_spec.noise_sigma = 8.0; // 10% of the 80-unit fat/tissue contrast
    noisy_spec.speckle_count = 10;
    noisy_spec.speckle_voxels = 10;
    const PhantomCase noisy = generate(noisy_spec);
    const Mask pred_noisy = run_semi_auto(noisy.dixon_fat, noisy.gt_body_trufi, params);
    const double dice_noisy = dice(pred_noisy, noisy.gt_fat_dixon);
    const std::size_t speckle_survivors =
        testutil::overlap_count(pred_noisy, noisy.speckles_dixon);
    const double secs_noisy = seconds_since(t1);

    detail = "clean dice " + fmt("%.4f", dice_clean) + " (" + fmt("%.1f", secs_clean)
             + " s), noisy dice " + fmt("%.4f", dice_noisy) + " with "
             + std::to_string(speckle_survivors) + " speckle voxels surviving ("
             + fmt("%.1f", secs_noisy) + " s)";
    return dice_clean >= 0.99 && dice_noisy >= 0.95 && speckle_survivors == 0
           && secs_clean < 30.0 && secs_noisy < 30.0;
}

bool cross_space_mapping(std::string& detail) {
    PhantomSpec spec;
    spec.translation_mm = {7.0, 0.0, 0.0};
    const PhantomCase pc = generate(spec);

    const Mask mapped = resample_mask_nearest(pc.gt_body_trufi, pc.gt_body_dixon.geom);
    const std::size_t covered = testutil::overlap_count(mapped, pc.gt_body_dixon);
    const std::size_t total = pc.gt_body_dixon.foreground_count();
    const double coverage = static_cast<double>(covered) / static_cast<double>(total);

    const VoxelBox voi = expand_box(bounding_box(mapped), 5.0, pc.gt_body_dixon.geom.spacing,
                                    pc.gt_body_dixon.geom.dims);
    std::size_t outside = 0;
    const auto& d = pc.gt_body_dixon.geom.dims;
    for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
            for (int i = 0; i < d[0]; ++i)
                if (pc.gt_body_dixon.at(i, j, k) && !voi.contains(i, j, k)) ++outside;

    detail = "coverage " + fmt("%.4f%%", 100.0 * coverage) + ", "
             + std::to_string(outside) + " body voxels outside the 5 mm VOI";
    return coverage >= 0.995 && outside == 0;
}

bool rvd_definition(std::string& detail) {
    // 1 mm^3 voxels: volumes are exactly representable doubles
    const GridGeometry g = oracle::make_grid({100, 100, 100}, {1.0, 1.0, 1.0});
    Mask body = Mask::zeros(g);
    testutil::fill_box(body, {0, 0, 0}, {99, 99, 99}); // 1e6 voxels = 1000 mL
    Mask pred = Mask::zeros(g);
    testutil::fill_box(pred, {0, 0, 0}, {19, 24, 39}); // 20000 voxels = 20 mL
    Mask gt = Mask::zeros(g);
    testutil::fill_box(gt, {0, 0, 0}, {9, 24, 39});    // 10000 voxels = 10 mL

    const double rvd = rvd_percent(pred, gt, body);
    detail = "vd " + fmt("%.17g", vd_ml(pred, gt)) + " mL over 1000 mL -> rvd "
             + fmt("%.17g", rvd) + " %";
    return rvd == 1.0;
}

// independent numerical oracle: Simpson integration of the t density
double t_tail_p_two_sided(double t, double df) {
    const double a = std::abs(t);
    const double c = std::exp(std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0))
                     / std::sqrt(df * M_PI);
    auto density = [&](double u) { return c * std::pow(1.0 + u * u / df, -(df + 1.0) / 2.0); };
    const double b = a + 400.0; // tail beyond is ~1e-10 for df >= 2
    const int n = 400000;       // even interval count
    const double h = (b - a) / n;
    double sum = density(a) + density(b);
    for (int i = 1; i < n; ++i) sum += density(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return 2.0 * sum * h / 3.0;
}

bool statistics_fidelity(std::string& detail) {
    const double cauchy_err = std::abs(t_cdf(1.0, 1.0) - 0.75);

    const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 6, 8, 10};
    const TTestResult r = paired_t_test(x, y);
    // recompute t from scratch
    double mean = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mean += x[i] - y[i];
    mean /= 5.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i] - mean;
        ss += d * d;
    }
    const double t_oracle = mean / std::sqrt(ss / 4.0 / 5.0);
    const double p_oracle = t_tail_p_two_sided(t_oracle, 4.0);
    const double t_err = std::abs(r.t_statistic - t_oracle);
    const double p_err = std::abs(r.p_value - p_oracle);

    double worst_sym = 0.0;
    const double dfs[] = {0.7, 1.0, 2.0, 4.5, 7.0, 12.0, 30.0, 100.0, 1000.0, 1e5};
    for (int i = 0; i < 1000; ++i) {
        const double t = -10.0 + 20.0 * i / 999.0;
        const double df = dfs[i % 10];
        worst_sym = std::max(worst_sym, std::abs(t_cdf(t, df) + t_cdf(-t, df) - 1.0));
    }

    detail = "cauchy err " + fmt("%.1e", cauchy_err) + ", t err " + fmt("%.1e", t_err)
             + ", p err " + fmt("%.1e", p_err) + ", symmetry err " + fmt("%.1e", worst_sym);
    return cauchy_err <= 1e-10 && t_err <= 1e-6 && p_err <= 1e-6 && worst_sym <= 1e-12;
}

bool nifti_fidelity(std::string& detail) {
    testutil::TempDir td;
    Volume vol = Volume::zeros(oracle::make_grid({9, 7, 5}, {1.25, 1.25, 2.0}));
    vol.geom.affine = AffineTransform::diagonal(vol.geom.spacing, {-10.0, 4.5, 7.0});
    for (std::size_t i = 0; i < vol.voxels.size(); ++i) {
        vol.voxels[i] = static_cast<float>((i * 7) % 120); // representable in every type
    }

    int failures = 0;
    const std::pair<Datatype, const char*> types[] = {{Datatype::UInt8, "u8"},
                                                      {Datatype::Int16, "i16"},
                                                      {Datatype::Float32, "f32"},
                                                      {Datatype::Float64, "f64"}};
    for (const auto& [dt, tag] : types) {
        const fs::path plain = td / (std::string(tag) + ".nii");
        const fs::path gz = td / (std::string(tag) + ".nii.gz");
        write_nifti(vol, plain, dt);
        write_nifti(vol, gz, dt);
        const Volume from_plain = read_nifti(plain);
        const Volume from_gz = read_nifti(gz);
        if (from_plain.voxels != vol.voxels) ++failures;
        if (!from_plain.geom.same_as(vol.geom)) ++failures;
        // both compression states must decode to the same bits in memory
        if (from_gz.voxels != from_plain.voxels) ++failures;
        if (from_gz.geom.dims != from_plain.geom.dims) ++failures;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c)
                if (from_gz.geom.affine.at(r, c) != from_plain.geom.affine.at(r, c)) ++failures;
    }
    detail = "4 datatypes x 2 compression states, " + std::to_string(failures) + " mismatches";
    return failures == 0;
}

bool parallel_determinism(std::string& detail) {
    testutil::TempDir td;
    PipelineParams params;
    params.threshold = ThresholdSpec::numeric(60.0f);

    std::string cases_csv = "case_id,pred,gt,body,correction_time_s\n";
    for (int c = 0; c < 10; ++c) {
        PhantomSpec spec;
        spec.semi_axes_mm = {18.0, 15.0, 20.0};
        spec.shell_thickness_mm = 5.0;
        spec.dixon_dims = {40, 40, 30};
        spec.noise_sigma = 8.0;
        spec.speckle_count = 2;
        spec.seed = 100 + c;
        const PhantomCase pc = generate(spec);
        const fs::path dir = td / ("case" + std::to_string(c));
        write_case(pc, dir);
        const Mask pred = run_semi_auto(pc.dixon_fat, pc.gt_body_trufi, params);
        write_nifti(pred, dir / "pred.nii.gz");
        cases_csv += "case" + std::to_string(c) + "," + (dir / "pred.nii.gz").string() + ","
                     + (dir / "gt_fat_dixon.nii.gz").string() + ","
                     + (dir / "gt_body_dixon.nii.gz").string() + ","
                     + (c % 2 ? "12.5" : "") + "\n";
    }
    testutil::write_text(td / "cases.csv", cases_csv);

    const int rc1 = run_tool({"evaluate", "--cases", (td / "cases.csv").string(), "-o",
                              (td / "m1" / "metrics.csv").string(), "--threads", "1"},
                             td / "log1.txt");
    const int rc8 = run_tool({"evaluate", "--cases", (td / "cases.csv").string(), "-o",
                              (td / "m8" / "metrics.csv").string(), "--threads", "8"},
                             td / "log8.txt");
    const std::string csv1 = testutil::read_text(td / "m1" / "metrics.csv");
    const std::string csv8 = testutil::read_text(td / "m8" / "metrics.csv");

    detail = "exit codes " + std::to_string(rc1) + "/" + std::to_string(rc8) + ", "
             + (csv1 == csv8 ? "byte-identical CSVs" : "CSVs differ");
    return rc1 == 0 && rc8 == 0 && !csv1.empty() && csv1 == csv8;
}

bool performance_envelope(std::string& detail) {
    const GridGeometry g = oracle::make_grid({256, 256, 128}, {1.25, 1.25, 2.0});
    Mask pred = Mask::zeros(g);
    Mask gt = Mask::zeros(g);
    const double cx = 127.5, cy = 127.5, cz = 63.5;
    std::size_t idx = 0;
    for (int k = 0; k < 128; ++k) {
        for (int j = 0; j < 256; ++j) {
            for (int i = 0; i < 256; ++i, ++idx) {
                const double dx = (i - cx) * 1.25, dy = (j - cy) * 1.25, dz = (k - cz) * 2.0;
                const double r2 = dx * dx + dy * dy + dz * dz;
                pred.voxels[idx] = r2 <= 70.0 * 70.0;
                gt.voxels[idx] = dx * dx + (dy - 4.0) * (dy - 4.0) + dz * dz <= 68.0 * 68.0;
            }
        }
    }
    const auto t0 = std::chrono::steady_clock::now();
    const CaseMetrics m = evaluate_case("big", pred, gt, pred);
    const double secs = seconds_since(t0);
    detail = "256x256x128 pair in " + fmt("%.2f", secs) + " s (dice " + fmt("%.3f", m.dice)
             + ", hausdorff " + fmt("%.2f", m.hausdorff_mm) + " mm)";
    return secs < 10.0 && m.dice > 0.0;
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<bool(std::string&)> fn;
    };
    const std::vector<Criterion> criteria = {
        {"segmentation metrics match brute-force oracles", metric_oracle_equivalence},
        {"distance transform is exact against exhaustive scan", distance_transform_exactness},
        {"component filter keeps 50-voxel, drops 49-voxel", component_filter_cutoff},
        {"end-to-end phantom recovery, clean and corrupted", phantom_recovery},
        {"body mask maps across scan spaces within tolerance", cross_space_mapping},
        {"relative volume difference uses the body volume", rvd_definition},
        {"t statistics match closed forms and integration", statistics_fidelity},
        {"nifti io round-trips every datatype and compression", nifti_fidelity},
        {"evaluation is deterministic under parallelism", parallel_determinism},
        {"large-volume evaluation stays inside the time budget", performance_envelope},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = criteria[i].fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        if (!ok) ++failed;
        std::printf("[%2zu/10] %s  %s (%.2f s)%s%s\n", i + 1, ok ? "PASS" : "FAIL",
                    criteria[i].name, seconds_since(t0), detail.empty() ? "" : " -- ",
                    detail.c_str());
        std::fflush(stdout);
    }
    if (failed != 0) {
        std::printf("%d of 10 acceptance checks failed\n", failed);
        return 1;
    }
    std::printf("all 10 acceptance checks passed\n");
    return 0;
}
