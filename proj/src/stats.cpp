#include "volseg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "volseg/errors.hpp"

namespace volseg {

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    return h; // converged to working precision for any practical (a, b)
}

} // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw InputError("incomplete beta needs a > 0 and b > 0");
    }
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b)
                            + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cf(a, b, x) / a;
    }
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double t_cdf(double t, double df) {
    if (!(df > 0.0)) {
        throw InputError("t distribution needs df > 0");
    }
    if (t == 0.0) return 0.5;
    const double x = df / (df + t * t);
    const double half_tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x);
    return t > 0.0 ? 1.0 - half_tail : half_tail;
}

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s / static_cast<double>(v.size() - 1);
}

TTestResult finish(double t, double df, const char* variant) {
    TTestResult r;
    r.t_statistic = t;
    r.degrees_of_freedom = df;
    r.p_value = 2.0 * (1.0 - t_cdf(std::abs(t), df));
    r.variant = variant;
    r.significant_at_0_05 = r.p_value < 0.05;
    return r;
}

} // namespace

TTestResult paired_t_test(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) {
        throw InputError("paired t-test needs samples of equal length");
    }
    const std::size_t n = x.size();
    if (n < 2) {
        throw InputError("paired t-test needs at least 2 pairs");
    }
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = x[i] - y[i];
    const double md = mean_of(d);
    const double vd = sample_variance(d, md);
    if (vd <= 0.0) {
        throw DegenerateVarianceError("paired differences have zero variance");
    }
    const double t = md / std::sqrt(vd / static_cast<double>(n));
    return finish(t, static_cast<double>(n - 1), "paired");
}

TTestResult welch_t_test(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() < 2 || y.size() < 2) {
        throw InputError("Welch t-test needs at least 2 samples per group");
    }
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    const double mx = mean_of(x);
    const double my = mean_of(y);
    const double vx = sample_variance(x, mx);
    const double vy = sample_variance(y, my);
    const double se2 = vx / nx + vy / ny;
    if (se2 <= 0.0) {
        throw DegenerateVarianceError("both groups have zero variance");
    }
    const double t = (mx - my) / std::sqrt(se2);
    const double df = se2 * se2
                      / ((vx / nx) * (vx / nx) / (nx - 1.0) + (vy / ny) * (vy / ny) / (ny - 1.0));
    return finish(t, df, "welch");
}

StudySummary summarize(const std::vector<CaseMetrics>& cases) {
    if (cases.empty()) {
        throw InputError("empty cohort");
    }
    StudySummary s;
    s.n = cases.size();
    s.single_case = s.n == 1;
    const std::pair<const char*, double CaseMetrics::*> fields[] = {
        {"dice", &CaseMetrics::dice},
        {"hausdorff_mm", &CaseMetrics::hausdorff_mm},
        {"assd_mm", &CaseMetrics::assd_mm},
        {"vd_ml", &CaseMetrics::vd_ml},
        {"rvd_percent", &CaseMetrics::rvd_percent},
    };
    for (const auto& [name, member] : fields) {
        SummaryRow row;
        row.metric = name;
        row.min = std::numeric_limits<double>::max();
        row.max = std::numeric_limits<double>::lowest();
        double sum = 0.0;
        for (const auto& c : cases) {
            const double v = c.*member;
            sum += v;
            row.min = std::min(row.min, v);
            row.max = std::max(row.max, v);
        }
        row.mean = sum / static_cast<double>(s.n);
        if (s.n > 1) {
            double ss = 0.0;
            for (const auto& c : cases) {
                const double v = c.*member - row.mean;
                ss += v * v;
            }
            row.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
        }
        s.rows.push_back(row);
    }
    return s;
}

} // namespace volseg
