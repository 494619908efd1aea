#pragma once

#include <string>
#include <vector>

#include "volseg/metrics.hpp"

namespace volseg {

// I_x(a, b), the regularized incomplete beta function, to ~1e-15.
double regularized_incomplete_beta(double a, double b, double x);

// CDF of Student's t distribution with df > 0 degrees of freedom.
double t_cdf(double t, double df);

struct TTestResult {
    double t_statistic = 0.0;
    double degrees_of_freedom = 0.0;
    double p_value = 1.0; // two-sided
    std::string variant;  // "paired" or "welch"
    bool significant_at_0_05 = false;
};

// Difference convention is x - y for both variants.
TTestResult paired_t_test(const std::vector<double>& x, const std::vector<double>& y);
TTestResult welch_t_test(const std::vector<double>& x, const std::vector<double>& y);

struct SummaryRow {
    std::string metric;
    double mean = 0.0;
    double stddev = 0.0; // sample (n-1); 0 when n == 1
    double min = 0.0;
    double max = 0.0;
};

struct StudySummary {
    std::size_t n = 0;
    bool single_case = false; // n == 1: std is 0 by convention, not an estimate
    std::vector<SummaryRow> rows; // dice, hausdorff_mm, assd_mm, vd_ml, rvd_percent
};

StudySummary summarize(const std::vector<CaseMetrics>& cases);

} // namespace volseg
