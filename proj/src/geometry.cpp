#include "tasteprint/geometry.hpp"

#include <algorithm>
#include <limits>

namespace tasteprint {

void Box2::include(const Vec2& p) {
    if (!valid) {
        min = max = p;
        valid = true;
        return;
    }
    min.x = std::min(min.x, p.x);
    min.y = std::min(min.y, p.y);
    max.x = std::max(max.x, p.x);
    max.y = std::max(max.y, p.y);
}

void Box3::include(const Vec3& p) {
    if (!valid) {
        min = max = p;
        valid = true;
        return;
    }
    min.x = std::min(min.x, p.x);
    min.y = std::min(min.y, p.y);
    min.z = std::min(min.z, p.z);
    max.x = std::max(max.x, p.x);
    max.y = std::max(max.y, p.y);
    max.z = std::max(max.z, p.z);
}

double signed_area(std::span<const Vec2> ring) {
    if (ring.size() < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) twice += cross(ring[i], ring[i + 1]);
    if (!(ring.front() == ring.back())) twice += cross(ring.back(), ring.front());
    return 0.5 * twice;
}

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) return distance(p, a);
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return distance(p, a + ab * t);
}

namespace {

template <typename Fn>
void for_each_ring(std::span<const Contour> contours, Fn&& fn) {
    for (const auto& c : contours) {
        fn(c.outer);
        for (const auto& h : c.holes) fn(h);
    }
}

}  // namespace

bool even_odd_inside(std::span<const Contour> contours, const Vec2& p) {
    bool inside = false;
    for_each_ring(contours, [&](const Ring& ring) {
        const std::size_t n = ring.size();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            const Vec2& a = ring[i];
            const Vec2& b = ring[j];
            if ((a.y > p.y) != (b.y > p.y)) {
                const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if (p.x < x) inside = !inside;
            }
        }
    });
    return inside;
}

double boundary_distance(std::span<const Contour> contours, const Vec2& p) {
    double best = std::numeric_limits<double>::infinity();
    for_each_ring(contours, [&](const Ring& ring) {
        for (std::size_t i = 0; i + 1 < ring.size(); ++i) best = std::min(best, segment_distance(p, ring[i], ring[i + 1]));
    });
    return best;
}

Box2 bounds(std::span<const Contour> contours) {
    Box2 box;
    for_each_ring(contours, [&](const Ring& ring) {
        for (const auto& v : ring) box.include(v);
    });
    return box;
}

}  // namespace tasteprint
