#include "volseg/distance_transform.hpp"

#include <cmath>
#include <limits>

#include "volseg/errors.hpp"

namespace volseg {

namespace {

constexpr double kInf = 1e20;

// 1-D squared-distance lower envelope (Felzenszwalb & Huttenlocher) over
// samples spaced `step` mm apart. f holds squared distances on input.
void envelope_pass(std::vector<double>& f, std::vector<double>& d,
                   std::vector<int>& v, std::vector<double>& z,
                   int n, double step) {
    const double step2 = step * step;
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        if (f[q] >= kInf) continue;
        double s;
        while (true) {
            const int p = v[k];
            if (f[p] >= kInf) {
                // previous parabola at infinity: it never wins
                if (--k < 0) break;
                continue;
            }
            s = ((f[q] + step2 * q * q) - (f[p] + step2 * p * p))
                / (2.0 * step2 * (q - p));
            if (s > z[k]) break;
            if (--k < 0) break;
        }
        ++k;
        v[k] = q;
        z[k] = (k == 0) ? -kInf : s;
        z[k + 1] = kInf;
    }
    if (f[v[0]] >= kInf) {
        // whole row empty along this axis; keep the +inf marks
        for (int q = 0; q < n; ++q) d[q] = f[q];
        return;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        // z is kept in index units, like q
        while (z[k + 1] < static_cast<double>(q)) ++k;
        const double dx = step * (q - v[k]);
        d[q] = dx * dx + f[v[k]];
    }
}

} // namespace

std::vector<double> distance_transform_squared(const Mask& mask) {
    if (!mask.any()) {
        throw EmptyMaskError("distance transform of an empty mask");
    }
    const auto& dims = mask.geom.dims;
    const auto& sp = mask.geom.spacing;
    const int nx = dims[0], ny = dims[1], nz = dims[2];

    std::vector<double> dist(mask.voxels.size());
    for (std::size_t i = 0; i < dist.size(); ++i) {
        dist[i] = mask.voxels[i] ? 0.0 : kInf;
    }

    const int nmax = std::max({nx, ny, nz});
    std::vector<double> f(nmax), d(nmax), z(nmax + 1);
    std::vector<int> v(nmax);

    // axis x
    for (int k = 0; k < nz; ++k) {
        for (int j = 0; j < ny; ++j) {
            const std::size_t base = mask.geom.linear(0, j, k);
            for (int i = 0; i < nx; ++i) f[i] = dist[base + i];
            envelope_pass(f, d, v, z, nx, sp[0]);
            for (int i = 0; i < nx; ++i) dist[base + i] = d[i];
        }
    }
    // axis y
    const std::size_t sy = static_cast<std::size_t>(nx);
    for (int k = 0; k < nz; ++k) {
        for (int i = 0; i < nx; ++i) {
            const std::size_t base = mask.geom.linear(i, 0, k);
            for (int j = 0; j < ny; ++j) f[j] = dist[base + sy * j];
            envelope_pass(f, d, v, z, ny, sp[1]);
            for (int j = 0; j < ny; ++j) dist[base + sy * j] = d[j];
        }
    }
    // axis z
    const std::size_t sz = static_cast<std::size_t>(nx) * ny;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const std::size_t base = mask.geom.linear(i, j, 0);
            for (int k = 0; k < nz; ++k) f[k] = dist[base + sz * k];
            envelope_pass(f, d, v, z, nz, sp[2]);
            for (int k = 0; k < nz; ++k) dist[base + sz * k] = d[k];
        }
    }
    return dist;
}

std::vector<double> distance_transform(const Mask& mask) {
    std::vector<double> dist = distance_transform_squared(mask);
    for (auto& x : dist) x = std::sqrt(x);
    return dist;
}

} // namespace volseg
