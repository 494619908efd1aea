#include "volseg/cli.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "volseg/errors.hpp"
#include "volseg/geometry.hpp"
#include "volseg/manifest.hpp"
#include "volseg/metrics.hpp"
#include "volseg/nifti.hpp"
#include "volseg/phantom.hpp"
#include "volseg/pipeline.hpp"
#include "volseg/stats.hpp"

#ifndef VOLSEG_VERSION
#define VOLSEG_VERSION "0.0.0"
#endif

namespace volseg {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class StageTimer {
public:
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

std::array<double, 3> parse_triple(const std::string& text, const std::string& what) {
    std::array<double, 3> out{};
    std::stringstream ss(text);
    std::string item;
    int n = 0;
    while (std::getline(ss, item, ',')) {
        if (n >= 3) throw InputError(what + " expects three comma-separated values");
        try {
            out[n++] = std::stod(item);
        } catch (const std::logic_error&) {
            throw InputError(what + " has a non-numeric entry: \"" + item + "\"");
        }
    }
    if (n != 3) throw InputError(what + " expects three comma-separated values");
    return out;
}

void ensure_parent_dir(const fs::path& path) {
    const fs::path dir = path.parent_path();
    if (dir.empty()) return;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory: " + dir.string());
}

Index3 parse_itriple(const std::string& text, const std::string& what) {
    const auto d = parse_triple(text, what);
    Index3 out;
    for (int i = 0; i < 3; ++i) {
        out[i] = static_cast<int>(d[i]);
        if (out[i] != d[i]) throw InputError(what + " expects integers");
    }
    return out;
}

// ------------------------------------------------------------------ segment

struct SegmentArgs {
    std::string fat, body, out;
    std::string config;
    std::string threshold;
    int min_component = 50;
    int connectivity = 26;
    double voi_margin = 5.0;
    std::vector<std::string> morph;
    bool no_voi_box = false;
    bool no_silhouette = false;
};

PipelineParams resolve_pipeline_params(const CLI::App* cmd, const SegmentArgs& a) {
    PipelineParams p;
    if (!a.config.empty()) {
        p = PipelineParams::from_config_file(a.config);
    }
    if (cmd->count("--threshold")) p.threshold = ThresholdSpec::parse(a.threshold);
    if (cmd->count("--min-component")) p.min_component_voxels = a.min_component;
    if (cmd->count("--connectivity")) p.connectivity = a.connectivity;
    if (cmd->count("--voi-margin-mm")) p.voi_margin_mm = a.voi_margin;
    if (cmd->count("--morph")) {
        p.morphology.clear();
        for (const auto& m : a.morph) p.morphology.push_back(MorphStep::parse(m));
    }
    if (a.no_voi_box) p.apply_voi_box = false;
    if (a.no_silhouette) p.apply_body_silhouette = false;
    p.validate();
    return p;
}

int cmd_segment(const CLI::App* cmd, const SegmentArgs& a) {
    const PipelineParams params = resolve_pipeline_params(cmd, a);
    if (!params.threshold) {
        throw InputError("segment needs --threshold <value|otsu> (flag or config)");
    }

    RunManifest man;
    man.command = "segment";
    man.parameters["fat"] = a.fat;
    man.parameters["body_mask"] = a.body;
    man.parameters["out"] = a.out;
    {
        std::istringstream cfg(params.to_config_text());
        std::string line;
        while (std::getline(cfg, line)) {
            const auto eq = line.find('=');
            man.parameters[line.substr(0, eq)] = line.substr(eq + 1);
        }
    }

    StageTimer timer;
    const Volume fat = read_nifti(a.fat);
    const Mask body = read_nifti_mask(a.body);
    man.add_input(a.fat);
    man.add_input(a.body);
    man.stage_seconds["read"] = timer.lap();

    const SemiAutoResult res = run_semi_auto_detailed(fat, body, params);
    man.stage_seconds["segment"] = timer.lap();

    ensure_parent_dir(a.out);
    write_nifti(res.fat_mask, a.out);
    man.add_output(a.out);
    man.stage_seconds["write"] = timer.lap();
    man.write(fs::path(a.out).parent_path());

    std::printf("threshold used: %.6f\n", static_cast<double>(res.threshold_used));
    std::printf("fat voxels: %zu (%.3f mL)\n", res.fat_mask.foreground_count(),
                volume_ml(res.fat_mask));
    return 0;
}

// ------------------------------------------------------------------ map-voi

struct MapVoiArgs {
    std::string body, target, out, voi_out;
    double margin = 5.0;
};

int cmd_map_voi(const MapVoiArgs& a) {
    if (!(a.margin >= 0.0)) {
        throw InputError("--margin-mm must be >= 0");
    }
    RunManifest man;
    man.command = "map-voi";
    man.parameters["body_mask"] = a.body;
    man.parameters["target"] = a.target;
    man.parameters["out"] = a.out;
    man.parameters["margin_mm"] = std::to_string(a.margin);

    StageTimer timer;
    const Mask body = read_nifti_mask(a.body);
    const Volume target = read_nifti(a.target);
    man.add_input(a.body);
    man.add_input(a.target);
    man.stage_seconds["read"] = timer.lap();

    ensure_parent_dir(a.out);
    const Mask resampled = resample_mask_nearest(body, target.geom);
    const VoxelBox voi = expand_box(bounding_box(resampled), a.margin, target.geom.spacing,
                                    target.geom.dims);
    man.stage_seconds["map"] = timer.lap();

    write_nifti(resampled, a.out);
    man.add_output(a.out);

    const fs::path voi_path = a.voi_out.empty()
                                  ? fs::path(a.out).parent_path() / "voi.json"
                                  : fs::path(a.voi_out);
    {
        json j;
        j["lo"] = voi.lo;
        j["hi"] = voi.hi;
        j["margin_mm"] = a.margin;
        j["target_dims"] = target.geom.dims;
        std::ofstream out(voi_path, std::ios::binary);
        if (!out) throw IoError("cannot write VOI box: " + voi_path.string());
        out << j.dump(2) << "\n";
    }
    man.add_output(voi_path);
    man.parameters["voi_out"] = voi_path.string();
    man.stage_seconds["write"] = timer.lap();
    man.write(fs::path(a.out).parent_path());

    std::printf("mapped body voxels: %zu\n", resampled.foreground_count());
    std::printf("voi: [%d,%d,%d]..[%d,%d,%d]\n", voi.lo[0], voi.lo[1], voi.lo[2], voi.hi[0],
                voi.hi[1], voi.hi[2]);
    return 0;
}

// ----------------------------------------------------------------- evaluate

struct EvalCase {
    std::string case_id;
    std::string pred, gt, body;
    std::optional<double> correction_time_s;
};

std::vector<EvalCase> read_cases_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open cases CSV: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError("cases CSV is empty: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_record(line);
    const bool with_time = header.size() == 5 && header[4] == "correction_time_s";
    const bool base_ok = header.size() >= 4 && header[0] == "case_id" && header[1] == "pred"
                         && header[2] == "gt" && header[3] == "body";
    if (!base_ok || (header.size() == 5 && !with_time) || header.size() > 5) {
        throw FormatError("cases CSV header must be case_id,pred,gt,body[,correction_time_s]");
    }
    std::vector<EvalCase> cases;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv_record(line);
        if (f.size() != header.size()) {
            throw FormatError("cases CSV line " + std::to_string(lineno) + " has "
                              + std::to_string(f.size()) + " fields, expected "
                              + std::to_string(header.size()));
        }
        EvalCase c;
        c.case_id = f[0];
        c.pred = f[1];
        c.gt = f[2];
        c.body = f[3];
        if (with_time && !f[4].empty()) {
            try {
                c.correction_time_s = std::stod(f[4]);
            } catch (const std::logic_error&) {
                throw FormatError("cases CSV line " + std::to_string(lineno)
                                  + " has a non-numeric correction time");
            }
        }
        cases.push_back(std::move(c));
    }
    return cases;
}

struct EvaluateArgs {
    std::string cases_csv;
    std::string pred, gt, body;
    std::string case_id = "case";
    std::string out;
    int threads = 0;
};

int cmd_evaluate(const EvaluateArgs& a) {
    std::vector<EvalCase> cases;
    if (!a.cases_csv.empty()) {
        if (!a.pred.empty() || !a.gt.empty() || !a.body.empty()) {
            throw InputError("--cases excludes --pred/--gt/--body");
        }
        cases = read_cases_csv(a.cases_csv);
        if (cases.empty()) throw InputError("cases CSV lists no cases");
    } else {
        if (a.pred.empty() || a.gt.empty() || a.body.empty()) {
            throw InputError("evaluate needs --cases or all of --pred/--gt/--body");
        }
        cases.push_back({a.case_id, a.pred, a.gt, a.body, std::nullopt});
    }

    int threads = a.threads > 0 ? a.threads
                                : static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    threads = std::min<int>(threads, static_cast<int>(cases.size()));

    RunManifest man;
    man.command = "evaluate";
    man.parameters["out"] = a.out;
    man.parameters["threads"] = std::to_string(threads);
    if (!a.cases_csv.empty()) man.parameters["cases"] = a.cases_csv;

    StageTimer timer;
    std::vector<std::string> rows(cases.size());
    std::atomic<std::size_t> cursor{0};
    std::atomic<int> failures{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= cases.size()) return;
            const EvalCase& c = cases[i];
            try {
                const Mask pred = read_nifti_mask(c.pred);
                const Mask gt = read_nifti_mask(c.gt);
                const Mask body = read_nifti_mask(c.body);
                CaseMetrics m = evaluate_case(c.case_id, pred, gt, body);
                m.correction_time_s = c.correction_time_s;
                rows[i] = metrics_csv_row(m);
            } catch (const std::exception& e) {
                rows[i] = metrics_error_row(c.case_id, e.what());
                failures.fetch_add(1);
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    man.stage_seconds["evaluate"] = timer.lap();

    {
        ensure_parent_dir(a.out);
        std::ofstream out(a.out, std::ios::binary);
        if (!out) throw IoError("cannot write metrics CSV: " + a.out);
        out << metrics_csv_header() << '\n';
        for (const auto& r : rows) out << r << '\n';
    }
    if (!a.cases_csv.empty()) man.add_input(a.cases_csv);
    for (const auto& c : cases) {
        // a failed case may have unreadable inputs; digest what exists
        for (const auto& p : {c.pred, c.gt, c.body}) {
            if (fs::exists(p)) man.add_input(p);
        }
    }
    man.add_output(a.out);
    man.stage_seconds["write"] = timer.lap();
    man.write(fs::path(a.out).parent_path());

    const int failed = failures.load();
    std::printf("wrote %zu rows (%d failed) to %s\n", rows.size(), failed, a.out.c_str());
    return failed == 0 ? 0 : 1;
}

// -------------------------------------------------------------------- stats

struct StatsArgs {
    std::string metrics_a, metrics_b;
    bool welch = false;
    std::string json_out;
};

void print_summary(const std::string& label, const StudySummary& s) {
    std::printf("cohort %s (n=%zu)%s\n", label.c_str(), s.n,
                s.single_case ? " [single case: std is 0 by convention]" : "");
    std::printf("%-14s %12s %12s %12s %12s\n", "metric", "mean", "std", "min", "max");
    for (const auto& r : s.rows) {
        std::printf("%-14s %12.6f %12.6f %12.6f %12.6f\n", r.metric.c_str(), r.mean, r.stddev,
                    r.min, r.max);
    }
}

std::vector<CaseMetrics> read_cohort(const std::string& path) {
    std::vector<std::string> skipped;
    std::vector<CaseMetrics> rows = read_metrics_csv(path, &skipped);
    for (const auto& s : skipped) {
        std::fprintf(stderr, "notice: skipping error row in %s: %s\n", path.c_str(), s.c_str());
    }
    return rows;
}

int cmd_stats(const StatsArgs& a) {
    const std::vector<CaseMetrics> rows_a = read_cohort(a.metrics_a);
    if (rows_a.empty()) throw InputError("no usable rows in " + a.metrics_a);
    print_summary(a.metrics_a, summarize(rows_a));

    if (a.metrics_b.empty()) {
        if (!a.json_out.empty()) {
            throw InputError("--json needs two cohorts to compare");
        }
        return 0;
    }

    const std::vector<CaseMetrics> rows_b = read_cohort(a.metrics_b);
    if (rows_b.empty()) throw InputError("no usable rows in " + a.metrics_b);
    std::printf("\n");
    print_summary(a.metrics_b, summarize(rows_b));

    // pair rows by case_id for the paired variant
    std::vector<const CaseMetrics*> paired_b;
    if (!a.welch) {
        std::map<std::string, const CaseMetrics*> by_id;
        for (const auto& r : rows_b) by_id[r.case_id] = &r;
        if (by_id.size() != rows_b.size()) {
            throw InputError("duplicate case_id in " + a.metrics_b);
        }
        for (const auto& r : rows_a) {
            const auto it = by_id.find(r.case_id);
            if (it == by_id.end()) {
                throw InputError("case_id sets differ: \"" + r.case_id + "\" missing from "
                                 + a.metrics_b);
            }
            paired_b.push_back(it->second);
        }
        if (rows_a.size() != rows_b.size()) {
            throw InputError("case_id sets differ in size");
        }
    }

    const std::pair<const char*, double CaseMetrics::*> fields[] = {
        {"dice", &CaseMetrics::dice},
        {"hausdorff_mm", &CaseMetrics::hausdorff_mm},
        {"assd_mm", &CaseMetrics::assd_mm},
        {"vd_ml", &CaseMetrics::vd_ml},
        {"rvd_percent", &CaseMetrics::rvd_percent},
    };
    json tests = json::array();
    for (const auto& [name, member] : fields) {
        std::vector<double> x, y;
        for (const auto& r : rows_a) x.push_back(r.*member);
        if (a.welch) {
            for (const auto& r : rows_b) y.push_back(r.*member);
        } else {
            for (const auto* r : paired_b) y.push_back(r->*member);
        }
        json entry;
        entry["metric"] = name;
        try {
            const TTestResult t = a.welch ? welch_t_test(x, y) : paired_t_test(x, y);
            entry["t"] = t.t_statistic;
            entry["df"] = t.degrees_of_freedom;
            entry["p"] = t.p_value;
            entry["variant"] = t.variant;
            entry["significant_at_0_05"] = t.significant_at_0_05;
        } catch (const Error& e) {
            // degenerate variance or too few samples: report, don't crash
            entry["variant"] = a.welch ? "welch" : "paired";
            entry["note"] = std::string("no test: ") + e.what();
        }
        tests.push_back(entry);
    }
    json out;
    out["cohort_a"] = a.metrics_a;
    out["cohort_b"] = a.metrics_b;
    out["tests"] = tests;
    const std::string text = out.dump(2) + "\n";
    std::printf("\n%s", text.c_str());

    if (!a.json_out.empty()) {
        ensure_parent_dir(a.json_out);
        std::ofstream f(a.json_out, std::ios::binary);
        if (!f) throw IoError("cannot write " + a.json_out);
        f << text;
        RunManifest man;
        man.command = "stats";
        man.parameters["metrics_a"] = a.metrics_a;
        man.parameters["metrics_b"] = a.metrics_b;
        man.parameters["variant"] = a.welch ? "welch" : "paired";
        man.parameters["json"] = a.json_out;
        man.add_input(a.metrics_a);
        man.add_input(a.metrics_b);
        man.add_output(a.json_out);
        man.write(fs::path(a.json_out).parent_path());
    }
    return 0;
}

// ------------------------------------------------------------------ phantom

struct PhantomArgs {
    std::string out_dir;
    std::string spec_path;
    std::string semi_axes, trufi_spacing, dixon_spacing, dixon_dims, translate;
    double shell = 8.0;
    double background = 0.0, tissue = 20.0, fat = 100.0;
    double noise = 0.0;
    int speckles = 0;
    int speckle_voxels = 10;
    bool slab = false;
    double slab_offset = 15.0;
    std::uint64_t seed = 42;
    bool force = false;
};

PhantomSpec resolve_phantom_spec(const CLI::App* cmd, const PhantomArgs& a) {
    PhantomSpec s;
    if (!a.spec_path.empty()) s = PhantomSpec::from_json_file(a.spec_path);
    if (cmd->count("--semi-axes")) s.semi_axes_mm = parse_triple(a.semi_axes, "--semi-axes");
    if (cmd->count("--shell-mm")) s.shell_thickness_mm = a.shell;
    if (cmd->count("--trufi-spacing")) {
        s.trufi_spacing_mm = parse_triple(a.trufi_spacing, "--trufi-spacing");
    }
    if (cmd->count("--dixon-spacing")) {
        s.dixon_spacing_mm = parse_triple(a.dixon_spacing, "--dixon-spacing");
    }
    if (cmd->count("--dixon-dims")) s.dixon_dims = parse_itriple(a.dixon_dims, "--dixon-dims");
    if (cmd->count("--translate")) s.translation_mm = parse_triple(a.translate, "--translate");
    if (cmd->count("--background")) s.background_intensity = a.background;
    if (cmd->count("--tissue")) s.tissue_intensity = a.tissue;
    if (cmd->count("--fat")) s.fat_intensity = a.fat;
    if (cmd->count("--noise-sigma")) s.noise_sigma = a.noise;
    if (cmd->count("--speckles")) s.speckle_count = a.speckles;
    if (cmd->count("--speckle-voxels")) s.speckle_voxels = a.speckle_voxels;
    if (a.slab) s.maternal_slab = true;
    if (cmd->count("--slab-offset-mm")) s.slab_offset_mm = a.slab_offset;
    if (cmd->count("--seed")) s.seed = a.seed;
    s.validate();
    return s;
}

int cmd_phantom(const CLI::App* cmd, const PhantomArgs& a) {
    const PhantomSpec spec = resolve_phantom_spec(cmd, a);

    StageTimer timer;
    const PhantomCase pc = generate(spec);
    RunManifest man;
    man.command = "phantom";
    man.parameters["out_dir"] = a.out_dir;
    man.parameters["force"] = a.force ? "true" : "false";
    man.parameters["spec"] = spec.to_json();
    man.stage_seconds["generate"] = timer.lap();

    write_case(pc, a.out_dir, a.force);
    const fs::path dir(a.out_dir);
    for (const char* name : {"trufi.nii.gz", "dixon_fat.nii.gz", "dixon_water.nii.gz",
                             "gt_body_trufi.nii.gz", "gt_body_dixon.nii.gz", "gt_fat_dixon.nii.gz",
                             "spec.json"}) {
        man.add_output(dir / name);
    }
    man.stage_seconds["write"] = timer.lap();
    man.write(dir);

    std::printf("gt body volume: %.3f mL\n", volume_ml(pc.gt_body_dixon));
    std::printf("gt fat volume: %.3f mL\n", volume_ml(pc.gt_fat_dixon));
    return 0;
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Fetal fat segmentation and evaluation toolkit for Dixon MRI volumes"};
    app.set_version_flag("--version", std::string("volseg ") + VOLSEG_VERSION);
    app.require_subcommand(1);

    SegmentArgs seg;
    CLI::App* c_seg = app.add_subcommand(
        "segment", "Segment fat from a fat-channel volume given a body mask");
    c_seg->add_option("--fat", seg.fat, "fat-channel NIfTI volume")
        ->required()
        ->check(CLI::ExistingFile);
    c_seg->add_option("--body-mask", seg.body, "body mask NIfTI (any grid)")
        ->required()
        ->check(CLI::ExistingFile);
    c_seg->add_option("-o,--out", seg.out, "output fat mask NIfTI path")->required();
    c_seg->add_option("--config", seg.config, "key=value parameter file")
        ->envname("VOLSEG_CONFIG");
    c_seg->add_option("--threshold", seg.threshold, "intensity threshold: number or \"otsu\"");
    c_seg->add_option("--min-component", seg.min_component,
                      "drop connected components smaller than this many voxels");
    c_seg->add_option("--connectivity", seg.connectivity, "voxel adjacency: 6, 18 or 26");
    c_seg->add_option("--voi-margin-mm", seg.voi_margin, "margin added around the body box");
    c_seg->add_option("--morph", seg.morph,
                      "morphology step op:radius_mm (open/close), repeatable, applied in order");
    c_seg->add_flag("--no-voi-box", seg.no_voi_box, "do not restrict to the body bounding box");
    c_seg->add_flag("--no-body-silhouette", seg.no_silhouette,
                    "do not intersect with the mapped body mask");

    MapVoiArgs mv;
    CLI::App* c_mv = app.add_subcommand(
        "map-voi", "Map a body mask onto a target grid and emit the VOI box");
    c_mv->add_option("--body-mask", mv.body, "body mask NIfTI (source grid)")
        ->required()
        ->check(CLI::ExistingFile);
    c_mv->add_option("--target", mv.target, "NIfTI volume that defines the target grid")
        ->required()
        ->check(CLI::ExistingFile);
    c_mv->add_option("-o,--out", mv.out, "output resampled mask path")->required();
    c_mv->add_option("--voi-out", mv.voi_out, "VOI box JSON path (default: voi.json next to --out)");
    c_mv->add_option("--margin-mm,--voi-margin-mm", mv.margin, "margin added around the body box");

    EvaluateArgs ev;
    CLI::App* c_ev = app.add_subcommand("evaluate", "Compute segmentation metrics per case");
    c_ev->add_option("--cases", ev.cases_csv,
                     "CSV of cases: case_id,pred,gt,body[,correction_time_s]")
        ->check(CLI::ExistingFile);
    c_ev->add_option("--pred", ev.pred, "predicted mask NIfTI");
    c_ev->add_option("--gt", ev.gt, "ground-truth mask NIfTI");
    c_ev->add_option("--body", ev.body, "body mask NIfTI (for the relative volume difference)");
    c_ev->add_option("--case-id", ev.case_id, "row id for single-case mode");
    c_ev->add_option("-o,--out", ev.out, "output metrics CSV path")->required();
    c_ev->add_option("--threads", ev.threads, "case-level parallelism (default: all cores)");

    StatsArgs st;
    CLI::App* c_st = app.add_subcommand(
        "stats", "Summarise metrics CSVs; compare two cohorts with a t-test");
    c_st->add_option("--metrics", st.metrics_a, "metrics CSV")
        ->required()
        ->check(CLI::ExistingFile);
    c_st->add_option("--metrics-b", st.metrics_b, "second metrics CSV to compare against")
        ->check(CLI::ExistingFile);
    CLI::Option* opt_paired = c_st->add_flag("--paired", "match cohorts by case_id (the default)");
    CLI::Option* opt_welch =
        c_st->add_flag("--welch", st.welch, "unpaired Welch test instead of the paired default");
    opt_paired->excludes(opt_welch);
    opt_welch->excludes(opt_paired);
    c_st->add_option("--json", st.json_out, "also write the t-test report to this path");

    PhantomArgs ph;
    CLI::App* c_ph = app.add_subcommand(
        "phantom", "Generate a synthetic paired-scan case with known ground truth");
    c_ph->add_option("--out-dir", ph.out_dir, "directory for the case files")->required();
    c_ph->add_option("--spec", ph.spec_path, "spec.json to start from")->check(CLI::ExistingFile);
    c_ph->add_option("--semi-axes", ph.semi_axes, "body semi-axes mm, e.g. 60,50,70");
    c_ph->add_option("--shell-mm", ph.shell, "fat shell thickness mm");
    c_ph->add_option("--trufi-spacing", ph.trufi_spacing, "mm, e.g. 0.78,0.78,2");
    c_ph->add_option("--dixon-spacing", ph.dixon_spacing, "mm, e.g. 1.25,1.25,2");
    c_ph->add_option("--dixon-dims", ph.dixon_dims, "voxels, e.g. 128,128,96");
    c_ph->add_option("--translate", ph.translate, "inter-scan translation mm, e.g. 3,-2,2");
    c_ph->add_option("--background", ph.background, "background intensity");
    c_ph->add_option("--tissue", ph.tissue, "water-tissue intensity");
    c_ph->add_option("--fat", ph.fat, "fat intensity");
    c_ph->add_option("--noise-sigma", ph.noise, "additive Gaussian noise sigma");
    c_ph->add_option("--speckles", ph.speckles, "number of speckle artifacts");
    c_ph->add_option("--speckle-voxels", ph.speckle_voxels, "voxels per speckle (< 50)");
    c_ph->add_flag("--maternal-slab", ph.slab, "add a maternal fat slab outside the body");
    c_ph->add_option("--slab-offset-mm", ph.slab_offset, "gap between body surface and slab");
    c_ph->add_option("--seed", ph.seed, "deterministic generator seed");
    c_ph->add_flag("--force", ph.force, "overwrite an existing case directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (c_seg->parsed()) return cmd_segment(c_seg, seg);
        if (c_mv->parsed()) return cmd_map_voi(mv);
        if (c_ev->parsed()) return cmd_evaluate(ev);
        if (c_st->parsed()) return cmd_stats(st);
        if (c_ph->parsed()) return cmd_phantom(c_ph, ph);
    } catch (const InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 1;
    }
    return 2; // no subcommand matched (require_subcommand should prevent this)
}

} // namespace volseg
