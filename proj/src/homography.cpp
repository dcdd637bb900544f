#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "tasteprint/errors.hpp"
#include "tasteprint/imaging.hpp"

namespace tasteprint {

namespace {

Eigen::Matrix3d to_eigen(const std::array<double, 9>& m) {
    Eigen::Matrix3d e;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) e(r, c) = m[std::size_t(r) * 3 + c];
    return e;
}

std::array<double, 9> from_eigen(const Eigen::Matrix3d& e) {
    std::array<double, 9> m{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m[std::size_t(r) * 3 + c] = e(r, c);
    return m;
}

// Similarity moving the centroid to the origin with mean distance sqrt(2).
Eigen::Matrix3d normalizer(std::span<const Vec2> pts) {
    Vec2 c{};
    for (const auto& p : pts) c = c + p;
    c = c * (1.0 / static_cast<double>(pts.size()));
    double mean = 0.0;
    for (const auto& p : pts) mean += distance(p, c);
    mean /= static_cast<double>(pts.size());
    if (!(mean > 0.0)) throw SingularSystemError("homography: coincident points");
    const double s = std::sqrt(2.0) / mean;
    Eigen::Matrix3d T;
    T << s, 0, -s * c.x, 0, s, -s * c.y, 0, 0, 1;
    return T;
}

void require_no_collinear_triple(std::span<const Vec2> pts, const char* which) {
    double scale = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) scale = std::max(scale, distance(pts[i], pts[j]));
    const double tol = 1e-9 * scale * scale;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            for (std::size_t k = j + 1; k < pts.size(); ++k)
                if (std::abs(cross(pts[j] - pts[i], pts[k] - pts[i])) <= tol)
                    throw SingularSystemError(std::string("homography: three ") + which + " points are collinear");
}

}  // namespace

Homography::Homography() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

Homography::Homography(const std::array<double, 9>& row_major) : m_(row_major) {}

Homography Homography::scale(double sx, double sy) { return Homography({sx, 0, 0, 0, sy, 0, 0, 0, 1}); }

Vec2 Homography::apply(const Vec2& p) const {
    const double w = m_[6] * p.x + m_[7] * p.y + m_[8];
    return {(m_[0] * p.x + m_[1] * p.y + m_[2]) / w, (m_[3] * p.x + m_[4] * p.y + m_[5]) / w};
}

Homography Homography::inverse() const {
    const Eigen::Matrix3d e = to_eigen(m_);
    const double det = e.determinant();
    if (!std::isfinite(det) || std::abs(det) <= 1e-12 * std::pow(e.cwiseAbs().maxCoeff(), 3))
        throw SingularSystemError("homography is not invertible");
    Eigen::Matrix3d inv = e.inverse();
    if (std::abs(inv(2, 2)) > 1e-15) inv /= inv(2, 2);
    return Homography(from_eigen(inv));
}

Homography Homography::operator*(const Homography& rhs) const {
    return Homography(from_eigen(to_eigen(m_) * to_eigen(rhs.m_)));
}

Homography estimate_homography(std::span<const MarkerCorrespondence> corr) {
    if (corr.size() < 4) throw SingularSystemError("homography needs at least 4 correspondences");
    std::vector<Vec2> px, mm;
    for (const auto& c : corr) {
        px.push_back(c.pixel);
        mm.push_back(c.world);
    }
    require_no_collinear_triple(mm, "world");
    require_no_collinear_triple(px, "pixel");

    const Eigen::Matrix3d Tp = normalizer(px);
    const Eigen::Matrix3d Tw = normalizer(mm);
    Eigen::MatrixXd A(2 * corr.size(), 9);
    for (std::size_t i = 0; i < corr.size(); ++i) {
        const Eigen::Vector3d p = Tp * Eigen::Vector3d(px[i].x, px[i].y, 1.0);
        const Eigen::Vector3d w = Tw * Eigen::Vector3d(mm[i].x, mm[i].y, 1.0);
        const double x = p(0), y = p(1), u = w(0), v = w(1);
        const auto r = static_cast<Eigen::Index>(2 * i);
        A.row(r) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
        A.row(r + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    }
    // Pad to a square system so the full V is available for the exact 4-point case.
    if (A.rows() < 9) {
        Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(9, 9);
        padded.topRows(A.rows()) = A;
        A = padded;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (!(sv(7) > 1e-12 * sv(0))) throw SingularSystemError("homography: degenerate correspondence configuration");
    const Eigen::VectorXd h = svd.matrixV().col(8);
    Eigen::Matrix3d Hn;
    Hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
    Eigen::Matrix3d H = Tw.inverse() * Hn * Tp;
    if (std::abs(H(2, 2)) <= 1e-12 * H.cwiseAbs().maxCoeff())
        throw SingularSystemError("homography: H(2,2) vanishes; cannot normalise");
    H /= H(2, 2);
    return Homography(from_eigen(H));
}

RasterImage rectify(const RasterImage& image, const Homography& pixel_to_mm, const MmRect& region, double px_per_mm,
                    GrayImage* valid) {
    if (!(px_per_mm > 0.0)) throw DomainError("rectification resolution must be positive");
    if (!(region.size.x > 0.0) || !(region.size.y > 0.0)) throw DomainError("rectification region is empty");
    const Homography mm_to_pixel = pixel_to_mm.inverse();
    const int w = std::max(1, static_cast<int>(std::lround(region.size.x * px_per_mm)));
    const int h = std::max(1, static_cast<int>(std::lround(region.size.y * px_per_mm)));
    RasterImage out(w, h, 0);
    if (valid) *valid = GrayImage(w, h, 0);

    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < w; ++i) {
            const Vec2 mm{region.min.x + (i + 0.5) / px_per_mm, region.min.y + (j + 0.5) / px_per_mm};
            const Vec2 src = mm_to_pixel.apply(mm);
            if (!(src.x >= 0.0 && src.x < image.width && src.y >= 0.0 && src.y < image.height)) continue;
            // Pixel (k, l) has its centre at (k + 0.5, l + 0.5).
            const double fx = src.x - 0.5, fy = src.y - 0.5;
            const double x0f = std::floor(fx), y0f = std::floor(fy);
            const double tx = fx - x0f, ty = fy - y0f;
            const int x0 = std::clamp(static_cast<int>(x0f), 0, image.width - 1);
            const int y0 = std::clamp(static_cast<int>(y0f), 0, image.height - 1);
            const int x1 = std::clamp(static_cast<int>(x0f) + 1, 0, image.width - 1);
            const int y1 = std::clamp(static_cast<int>(y0f) + 1, 0, image.height - 1);
            for (int c = 0; c < 3; ++c) {
                const GrayImage& p = image.planes[c];
                const double v = (1 - tx) * (1 - ty) * p.at(x0, y0) + tx * (1 - ty) * p.at(x1, y0) +
                                 (1 - tx) * ty * p.at(x0, y1) + tx * ty * p.at(x1, y1);
                out.planes[c].at(i, j) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
            if (valid) valid->at(i, j) = 255;
        }
    }
    return out;
}

}  // namespace tasteprint
