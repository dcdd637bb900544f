#include "tasteprint/slicer.hpp"

#include <algorithm>
#include <cmath>

#include "tasteprint/errors.hpp"

namespace tasteprint {

double polyline_length(std::span<const Vec2> line) {
    double len = 0.0;
    for (std::size_t i = 0; i + 1 < line.size(); ++i) len += distance(line[i], line[i + 1]);
    return len;
}

namespace {

// Chords of the line {u = c} inside the contours, in the (u, v) frame where
// `swap` exchanges x and y. Uses a half-open crossing rule so vertices on the
// line are counted once.
std::vector<std::pair<double, double>> chords(const std::vector<Contour>& contours, double c, bool swap) {
    auto uv = [swap](const Vec2& p) { return swap ? Vec2{p.y, p.x} : p; };
    std::vector<double> hits;
    auto scan = [&](const Ring& ring) {
        for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
            const Vec2 a = uv(ring[i]);
            const Vec2 b = uv(ring[i + 1]);
            if ((a.x <= c) != (b.x <= c)) hits.push_back(a.y + (c - a.x) * (b.y - a.y) / (b.x - a.x));
        }
    };
    for (const auto& ct : contours) {
        scan(ct.outer);
        for (const auto& h : ct.holes) scan(h);
    }
    std::sort(hits.begin(), hits.end());
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i + 1 < hits.size(); i += 2)
        if (hits[i + 1] - hits[i] > 1e-9) out.emplace_back(hits[i], hits[i + 1]);
    return out;
}

}  // namespace

ExtrusionPath generate_extrusion_paths(const LayerSlice& slice, double infill_density, double infill_spacing) {
    if (!(infill_density >= 0.0 && infill_density <= 1.0)) throw DomainError("infill density must be in [0, 1]");
    ExtrusionPath path;
    path.layer_index = slice.index;
    for (const auto& c : slice.contours) {
        path.segments.push_back(c.outer);
        for (const auto& h : c.holes) path.segments.push_back(h);
    }

    if (infill_density > 0.0 && !slice.contours.empty()) {
        if (!(infill_spacing > 0.0)) throw DomainError("infill spacing must be positive");
        const double pitch = infill_spacing / infill_density;
        const bool swap = slice.index % 2 == 1;
        const Box2 box = bounds(slice.contours);
        const double lo = swap ? box.min.y : box.min.x;
        const double hi = swap ? box.max.y : box.max.x;
        constexpr double eps = 1e-9;
        bool flip = false;
        for (auto k = static_cast<long long>(std::floor(lo / pitch)); static_cast<double>(k) * pitch < hi; ++k) {
            const double c = static_cast<double>(k) * pitch;
            if (c <= lo + eps || c >= hi - eps) continue;
            auto spans = chords(slice.contours, c, swap);
            if (flip) std::reverse(spans.begin(), spans.end());
            for (auto [v0, v1] : spans) {
                if (flip) std::swap(v0, v1);
                const Vec2 a = swap ? Vec2{v0, c} : Vec2{c, v0};
                const Vec2 b = swap ? Vec2{v1, c} : Vec2{c, v1};
                path.segments.push_back({a, b});
            }
            if (!spans.empty()) flip = !flip;
        }
    }

    for (const auto& s : path.segments) path.total_length += polyline_length(s);
    return path;
}

}  // namespace tasteprint
