#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace tasteprint {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Vec2&) const = default;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    bool operator==(const Vec3&) const = default;
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(a.x * a.x + a.y * a.y + a.z * a.z); }

struct Box2 {
    Vec2 min{};
    Vec2 max{};
    bool valid = false;

    void include(const Vec2& p);
    Vec2 center() const { return (min + max) * 0.5; }
    double width() const { return max.x - min.x; }
    double height() const { return max.y - min.y; }
};

struct Box3 {
    Vec3 min{};
    Vec3 max{};
    bool valid = false;

    void include(const Vec3& p);
};

/// Closed polyline; the first vertex is repeated as the last.
using Ring = std::vector<Vec2>;

/// One outer boundary (CCW) with zero or more holes (CW).
struct Contour {
    Ring outer;
    std::vector<Ring> holes;

    bool operator==(const Contour&) const = default;
};

/// Shoelace area; positive for counter-clockwise rings.
double signed_area(std::span<const Vec2> ring);

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

/// Even-odd crossing test over every ring of every contour.
bool even_odd_inside(std::span<const Contour> contours, const Vec2& p);

/// Smallest distance from p to any ring edge.
double boundary_distance(std::span<const Contour> contours, const Vec2& p);

Box2 bounds(std::span<const Contour> contours);

/// Rounds to the 0.001 mm grid used by persisted documents and G-code.
inline double quantize_mm(double v) { return std::round(v * 1000.0) / 1000.0; }
inline Vec2 quantize_mm(const Vec2& p) { return {quantize_mm(p.x), quantize_mm(p.y)}; }

}  // namespace tasteprint
