#include "tasteprint/slicer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "tasteprint/errors.hpp"

namespace tasteprint {

namespace {

struct Segment {
    Vec2 a;
    Vec2 b;
};

bool lex_less(const Vec3& p, const Vec3& q) {
    if (p.z != q.z) return p.z < q.z;
    if (p.x != q.x) return p.x < q.x;
    return p.y < q.y;
}

// Intersection of edge pq with plane z. Vertices are ordered canonically so a
// shared edge yields bit-identical points from both adjacent triangles.
Vec2 edge_point(Vec3 p, Vec3 q, double z) {
    if (lex_less(q, p)) std::swap(p, q);
    const double t = (z - p.z) / (q.z - p.z);
    return {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
}

// A vertex exactly on the plane is classified as above it, so every
// triangle touching the plane produces either zero or one segment.
std::vector<Segment> cut_segments(const TriangleMesh& mesh, double z) {
    std::vector<Segment> out;
    for (const auto& t : mesh.triangles()) {
        const bool below[3] = {t[0].z < z, t[1].z < z, t[2].z < z};
        const int nb = below[0] + below[1] + below[2];
        if (nb == 0 || nb == 3) continue;
        Vec2 pts[2];
        int k = 0;
        for (int i = 0; i < 3; ++i) {
            const int j = (i + 1) % 3;
            if (below[i] != below[j]) pts[k++] = edge_point(t[i], t[j], z);
        }
        if (distance(pts[0], pts[1]) <= kStitchTolerance * 1e-3) continue;
        out.push_back({pts[0], pts[1]});
    }
    return out;
}

class NodeIndex {
public:
    std::size_t find_or_add(const Vec2& p) {
        const auto kx = static_cast<long long>(std::llround(p.x / kStitchTolerance));
        const auto ky = static_cast<long long>(std::llround(p.y / kStitchTolerance));
        for (long long dx = -1; dx <= 1; ++dx)
            for (long long dy = -1; dy <= 1; ++dy) {
                auto it = cells_.find({kx + dx, ky + dy});
                if (it == cells_.end()) continue;
                for (std::size_t id : it->second)
                    if (distance(points_[id], p) <= kStitchTolerance) return id;
            }
        const std::size_t id = points_.size();
        points_.push_back(p);
        cells_[{kx, ky}].push_back(id);
        return id;
    }
    const Vec2& point(std::size_t id) const { return points_[id]; }
    std::size_t size() const { return points_.size(); }

private:
    std::vector<Vec2> points_;
    std::map<std::pair<long long, long long>, std::vector<std::size_t>> cells_;
};

// Drops repeated and collinear vertices; returns an open vertex list.
std::vector<Vec2> simplify(const std::vector<Vec2>& open) {
    std::vector<Vec2> pts;
    for (const auto& p : open)
        if (pts.empty() || !(pts.back() == p)) pts.push_back(p);
    while (pts.size() > 1 && pts.front() == pts.back()) pts.pop_back();
    bool changed = true;
    while (changed && pts.size() >= 3) {
        changed = false;
        for (std::size_t i = 0; i < pts.size() && pts.size() >= 3; ++i) {
            const Vec2& a = pts[(i + pts.size() - 1) % pts.size()];
            const Vec2& b = pts[i];
            const Vec2& c = pts[(i + 1) % pts.size()];
            const double ab = distance(a, b), bc = distance(b, c);
            if (std::abs(cross(b - a, c - b)) <= 1e-9 * ab * bc && dot(b - a, c - b) > 0.0) {
                pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                --i;
            }
        }
    }
    return pts;
}

std::vector<std::vector<Vec2>> stitch(const std::vector<Segment>& segs, std::size_t layer) {
    NodeIndex nodes;
    std::vector<std::pair<std::size_t, std::size_t>> ends;
    ends.reserve(segs.size());
    for (const auto& s : segs) ends.emplace_back(nodes.find_or_add(s.a), nodes.find_or_add(s.b));

    std::vector<std::vector<std::size_t>> incident(nodes.size());
    for (std::size_t i = 0; i < ends.size(); ++i) {
        if (ends[i].first == ends[i].second) continue;
        incident[ends[i].first].push_back(i);
        incident[ends[i].second].push_back(i);
    }

    std::vector<bool> used(segs.size(), false);
    for (std::size_t i = 0; i < ends.size(); ++i)
        if (ends[i].first == ends[i].second) used[i] = true;

    std::vector<std::vector<Vec2>> rings;
    for (std::size_t s = 0; s < segs.size(); ++s) {
        if (used[s]) continue;
        used[s] = true;
        const std::size_t start = ends[s].first;
        std::size_t cur = ends[s].second;
        std::vector<Vec2> ring{nodes.point(start), nodes.point(cur)};
        while (cur != start) {
            std::optional<std::size_t> next;
            for (std::size_t e : incident[cur])
                if (!used[e]) {
                    next = e;
                    break;
                }
            if (!next)
                throw OpenContourError("layer " + std::to_string(layer) + ": open contour near (" +
                                           std::to_string(nodes.point(cur).x) + ", " +
                                           std::to_string(nodes.point(cur).y) + ")",
                                       layer);
            used[*next] = true;
            cur = ends[*next].first == cur ? ends[*next].second : ends[*next].first;
            ring.push_back(nodes.point(cur));
        }
        rings.push_back(std::move(ring));
    }
    return rings;
}

bool ring_contains(const Ring& ring, const Vec2& p) {
    bool inside = false;
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = ring[i];
        const Vec2& b = ring[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x) inside = !inside;
        }
    }
    return inside;
}

std::vector<Contour> build_contours(std::vector<std::vector<Vec2>> raw) {
    std::vector<Ring> rings;
    for (auto& r : raw) {
        auto pts = simplify(r);
        if (pts.size() < 3) continue;
        pts.push_back(pts.front());
        if (std::abs(signed_area(pts)) < 1e-12) continue;
        rings.push_back(std::move(pts));
    }

    const std::size_t n = rings.size();
    std::vector<int> depth(n, 0);
    std::vector<double> abs_area(n);
    for (std::size_t i = 0; i < n; ++i) abs_area[i] = std::abs(signed_area(rings[i]));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && ring_contains(rings[j], rings[i].front())) ++depth[i];

    std::vector<Contour> contours;
    std::vector<std::size_t> contour_of(n, SIZE_MAX);
    for (std::size_t i = 0; i < n; ++i) {
        if (depth[i] % 2 != 0) continue;
        if (signed_area(rings[i]) < 0) std::reverse(rings[i].begin(), rings[i].end());
        contour_of[i] = contours.size();
        contours.push_back(Contour{rings[i], {}});
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (depth[i] % 2 == 0) continue;
        if (signed_area(rings[i]) > 0) std::reverse(rings[i].begin(), rings[i].end());
        // Parent: the smallest enclosing ring one level up.
        std::size_t parent = SIZE_MAX;
        for (std::size_t j = 0; j < n; ++j) {
            if (depth[j] != depth[i] - 1 || !ring_contains(rings[j], rings[i].front())) continue;
            if (parent == SIZE_MAX || abs_area[j] < abs_area[parent]) parent = j;
        }
        if (parent != SIZE_MAX) contours[contour_of[parent]].holes.push_back(rings[i]);
    }
    return contours;
}

double contours_area(const std::vector<Contour>& contours) {
    double a = 0.0;
    for (const auto& c : contours) {
        a += signed_area(c.outer);
        for (const auto& h : c.holes) a += signed_area(h);
    }
    return a;
}

}  // namespace

std::vector<Contour> slice_at(const TriangleMesh& mesh, double z, std::size_t layer) {
    return build_contours(stitch(cut_segments(mesh, z), layer));
}

std::vector<LayerSlice> slice_mesh(const TriangleMesh& mesh, double layer_height) {
    if (!(layer_height > 0.0)) throw DomainError("layer height must be positive");
    if (mesh.empty()) throw EmptyMeshError("cannot slice an empty mesh");
    const auto& box = mesh.bounding_box();
    const double height = box.max.z - box.min.z;
    const auto count = static_cast<std::size_t>(std::max(1.0, std::ceil(height / layer_height - 1e-9)));

    std::vector<LayerSlice> layers;
    layers.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        LayerSlice s;
        s.index = k;
        s.z_bottom = box.min.z + static_cast<double>(k) * layer_height;
        s.z_top = k + 1 == count ? box.max.z : box.min.z + static_cast<double>(k + 1) * layer_height;
        s.contours = slice_at(mesh, 0.5 * (s.z_bottom + s.z_top), k);
        s.area = contours_area(s.contours);
        layers.push_back(std::move(s));
    }
    return layers;
}

bool point_in_layer(const LayerSlice& slice, const Vec2& p) {
    if (slice.contours.empty()) return false;
    if (boundary_distance(slice.contours, p) <= kBoundaryTolerance) return true;
    return even_odd_inside(slice.contours, p);
}

}  // namespace tasteprint
