#include "volseg/affine.hpp"

#include <cmath>

namespace volseg {

AffineTransform::AffineTransform() {
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            m_[r][c] = (r == c) ? 1.0 : 0.0;
}

AffineTransform AffineTransform::diagonal(const Spacing3& spacing) {
    return diagonal(spacing, {0.0, 0.0, 0.0});
}

AffineTransform AffineTransform::diagonal(const Spacing3& spacing, const Point3& origin) {
    AffineTransform a;
    for (int i = 0; i < 3; ++i) {
        a.m_[i][i] = spacing[i];
        a.m_[i][3] = origin[i];
    }
    return a;
}

Point3 AffineTransform::apply(const Point3& index) const {
    Point3 out;
    for (int r = 0; r < 3; ++r) {
        out[r] = m_[r][0] * index[0] + m_[r][1] * index[1] + m_[r][2] * index[2] + m_[r][3];
    }
    return out;
}

namespace {

double det3(const std::array<std::array<double, 4>, 4>& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
         - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
         + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

} // namespace

bool AffineTransform::invertible() const {
    return std::abs(det3(m_)) > 1e-12;
}

AffineTransform AffineTransform::inverse() const {
    const double det = det3(m_);
    if (std::abs(det) <= 1e-12) {
        throw GeometryError("singular affine: 3x3 block determinant is " + std::to_string(det));
    }
    // Invert the linear block by adjugate, then back out the translation.
    AffineTransform inv;
    const auto& m = m_;
    inv.m_[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    inv.m_[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    inv.m_[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    inv.m_[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    inv.m_[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    inv.m_[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    inv.m_[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    inv.m_[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    inv.m_[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    for (int r = 0; r < 3; ++r) {
        inv.m_[r][3] = -(inv.m_[r][0] * m[0][3] + inv.m_[r][1] * m[1][3] + inv.m_[r][2] * m[2][3]);
    }
    return inv;
}

AffineTransform AffineTransform::compose(const AffineTransform& rhs) const {
    AffineTransform out;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            double s = 0.0;
            for (int k = 0; k < 4; ++k)
                s += m_[r][k] * rhs.m_[k][c];
            out.m_[r][c] = s;
        }
    }
    return out;
}

AffineTransform AffineTransform::translated(const Point3& t) const {
    AffineTransform out = *this;
    for (int r = 0; r < 3; ++r)
        out.m_[r][3] += t[r];
    return out;
}

bool AffineTransform::almost_equal(const AffineTransform& other, double tol) const {
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            if (std::abs(m_[r][c] - other.m_[r][c]) > tol)
                return false;
    return true;
}

Point3 voxel_to_world(const AffineTransform& affine, const Index3& index) {
    return affine.apply({static_cast<double>(index[0]),
                         static_cast<double>(index[1]),
                         static_cast<double>(index[2])});
}

Point3 world_to_voxel(const AffineTransform& affine, const Point3& world_mm) {
    return affine.inverse().apply(world_mm);
}

} // namespace volseg
