#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "volseg/grid.hpp"

namespace volseg {

// Foreground voxels with at least one background (or out-of-grid) face
// neighbour.
Mask surface_voxels(const Mask& mask);

double dice(const Mask& a, const Mask& b);
double hausdorff_mm(const Mask& a, const Mask& b);
double assd_mm(const Mask& a, const Mask& b);

double volume_ml(const Mask& mask);
double vd_ml(const Mask& pred, const Mask& gt);
double rvd_percent(const Mask& pred, const Mask& gt, const Mask& body);

struct CaseMetrics {
    std::string case_id;
    double dice = 0.0;
    double hausdorff_mm = 0.0;
    double assd_mm = 0.0;
    double vd_ml = 0.0;
    double rvd_percent = 0.0;
    std::optional<double> correction_time_s;
};

CaseMetrics evaluate_case(const std::string& case_id, const Mask& pred, const Mask& gt,
                          const Mask& body);

// CSV interchange: fixed header, 6-decimal fixed-point numbers. Rows whose
// evaluation failed carry "ERROR" in the dice column and the reason in the
// following column; the reader skips them.
std::string metrics_csv_header();
std::string metrics_csv_row(const CaseMetrics& m);
std::string metrics_error_row(const std::string& case_id, const std::string& reason);
std::vector<std::string> split_csv_record(const std::string& line);
void write_metrics_csv(const std::vector<CaseMetrics>& rows, const std::filesystem::path& path);
std::vector<CaseMetrics> read_metrics_csv(const std::filesystem::path& path,
                                          std::vector<std::string>* skipped = nullptr);

} // namespace volseg
