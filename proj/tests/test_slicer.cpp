#include <doctest.h>

#include <random>

#include "support.hpp"
#include "tasteprint/errors.hpp"

using namespace tasteprint;

namespace {

// Independent crossing count along +x over every ring edge.
bool ray_cast_inside(const LayerSlice& s, Vec2 p) {
    int crossings = 0;
    auto ring = [&](const Ring& r) {
        for (std::size_t i = 0; i + 1 < r.size(); ++i) {
            const Vec2 a = r[i], b = r[i + 1];
            if ((a.y > p.y) == (b.y > p.y)) continue;
            const double x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (x > p.x) ++crossings;
        }
    };
    for (const auto& c : s.contours) {
        ring(c.outer);
        for (const auto& h : c.holes) ring(h);
    }
    return crossings % 2 == 1;
}

}  // namespace

TEST_CASE("10 mm cube at 1.6 mm gives seven 100 mm^2 layers") {
    const auto layers = slice_mesh(make_box({0, 0, 0}, {10, 10, 10}), 1.6);
    REQUIRE(layers.size() == 7);
    for (const auto& l : layers) {
        CHECK(l.area == doctest::Approx(100.0).epsilon(1e-12));
        REQUIRE(l.contours.size() == 1);
        CHECK(l.contours[0].holes.empty());
        CHECK(signed_area(l.contours[0].outer) > 0.0);
    }
    CHECK(layers[6].z_bottom == doctest::Approx(9.6));
    CHECK(layers[6].z_top == 10.0);
    CHECK(layers[6].thickness() == doctest::Approx(0.4));
}

TEST_CASE("layers start at the bottom of the mesh") {
    const auto layers = slice_mesh(make_box({0, 0, -5}, {4, 4, -1}), 1.0);
    REQUIRE(layers.size() == 4);
    CHECK(layers[0].z_bottom == -5.0);
    CHECK(layers[3].z_top == -1.0);
}

TEST_CASE("sphere cross-sections and volume") {
    const double r = 10.0;
    const auto layers = slice_mesh(make_uv_sphere({0, 0, 0}, r, 128, 64), 1.0);
    double volume = 0.0;
    for (const auto& l : layers) {
        volume += l.area * l.thickness();
        const double z = 0.5 * (l.z_bottom + l.z_top);
        if (std::abs(z) < 0.8 * r) {
            const double analytic = std::numbers::pi * (r * r - z * z);
            CHECK(l.area == doctest::Approx(analytic).epsilon(0.01));
        }
    }
    CHECK(volume == doctest::Approx(4.0 / 3.0 * std::numbers::pi * r * r * r).epsilon(0.02));
}

TEST_CASE("torus mid-plane has an outer ring and a hole") {
    const auto layers = slice_mesh(make_torus({0, 0, 0}, 10, 3, 128, 64), 2.0);
    REQUIRE(layers.size() == 3);
    const auto& mid = layers[1];
    REQUIRE(mid.contours.size() == 1);
    REQUIRE(mid.contours[0].holes.size() == 1);
    CHECK(signed_area(mid.contours[0].outer) > 0.0);
    CHECK(signed_area(mid.contours[0].holes[0]) < 0.0);
    const double annulus = std::numbers::pi * (13.0 * 13.0 - 7.0 * 7.0);
    CHECK(mid.area == doctest::Approx(annulus).epsilon(0.01));
    CHECK_FALSE(point_in_layer(mid, {0, 0}));
    CHECK(point_in_layer(mid, {10, 0}));
}

TEST_CASE("disjoint bodies give separate contours") {
    const std::array<TriangleMesh, 2> parts{make_box({0, 0, 0}, {2, 2, 2}), make_box({5, 0, 0}, {7, 2, 2})};
    const auto layers = slice_mesh(merge(parts), 1.0);
    CHECK(layers[0].contours.size() == 2);
    CHECK(layers[0].area == doctest::Approx(8.0));
}

TEST_CASE("point_in_layer agrees with a brute-force ray cast") {
    const auto layers = slice_mesh(make_tube({20, 20}, 8, 4, 0, 3, 40), 1.5);
    const auto& s = layers[0];
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(10.0, 30.0);
    int inside = 0;
    for (int i = 0; i < 5000; ++i) {
        const Vec2 p{u(rng), u(rng)};
        if (boundary_distance(s.contours, p) < 1e-6) continue;
        const bool want = ray_cast_inside(s, p);
        CHECK(point_in_layer(s, p) == want);
        inside += want;
    }
    CHECK(inside > 500);
    // The boundary itself counts as inside.
    CHECK(point_in_layer(s, s.contours[0].outer[0]));
    CHECK(point_in_layer(s, s.contours[0].holes[0][0]));
}

TEST_CASE("an open mesh throws OpenContourError naming the layer") {
    auto tris = make_box({0, 0, 0}, {4, 4, 4}).triangles();
    // Drop one side wall triangle.
    for (auto it = tris.begin(); it != tris.end(); ++it) {
        const auto& t = *it;
        if (t[0].x == 4 && t[1].x == 4 && t[2].x == 4) {
            tris.erase(it);
            break;
        }
    }
    try {
        slice_mesh(TriangleMesh(tris), 1.0);
        FAIL("expected OpenContourError");
    } catch (const OpenContourError& e) {
        CHECK(e.layer() < 4);
    }
}

TEST_CASE("rectilinear infill alternates direction and runs serpentine") {
    const auto layers = slice_mesh(make_box({0, 0, 0}, {10, 10, 4}), 1.0);
    const auto p0 = generate_extrusion_paths(layers[0], 1.0, 1.0);
    // Perimeter plus nine vertical lines at x = 1..9.
    REQUIRE(p0.segments.size() == 10);
    CHECK(p0.total_length == doctest::Approx(40.0 + 90.0));
    for (std::size_t i = 1; i < p0.segments.size(); ++i) {
        const auto& seg = p0.segments[i];
        CHECK(seg[0].x == doctest::Approx(double(i)));
        CHECK(seg[0].x == seg[1].x);
        // Odd lines go up, even lines come back down.
        CHECK((seg[1].y > seg[0].y) == (i % 2 == 1));
    }
    const auto p1 = generate_extrusion_paths(layers[1], 1.0, 1.0);
    CHECK(p1.segments[1][0].y == p1.segments[1][1].y);

    // 20% density at 1.6 mm spacing: one line at 8 mm.
    const auto sparse = generate_extrusion_paths(layers[0], 0.2, 1.6);
    REQUIRE(sparse.segments.size() == 2);
    CHECK(sparse.segments[1][0].x == doctest::Approx(8.0));
    CHECK(generate_extrusion_paths(layers[0], 0.0, 1.6).segments.size() == 1);
    CHECK_THROWS_AS(generate_extrusion_paths(layers[0], 1.5, 1.6), DomainError);
}

TEST_CASE("infill lines skip holes") {
    const auto layers = slice_mesh(make_tube({0, 0}, 5, 2, 0, 1, 64), 1.0);
    const auto p = generate_extrusion_paths(layers[0], 1.0, 1.0);
    std::size_t through_hole = 0;
    for (std::size_t i = 2; i < p.segments.size(); ++i)
        if (p.segments[i][0].x == 0.0) ++through_hole;
    CHECK(through_hole == 2);  // x = 0 is split in two by the hole
    for (std::size_t i = 2; i < p.segments.size(); ++i) {
        const Vec2 mid = (p.segments[i][0] + p.segments[i][1]) * 0.5;
        CHECK(point_in_layer(layers[0], mid));
    }
}

TEST_CASE("slice JSON round trip and canonical text") {
    const SliceStack s = fixtures::cube_stack();
    CHECK(slice_stack_from_json(to_json(s)) == s);
    CHECK(render_slices(s) == render_slices(slice_stack_from_json(nlohmann::json::parse(render_slices(s)))));
    CHECK(to_json(s)["schema_version"] == kSliceSchemaVersion);
    CHECK_THROWS_AS(slice_stack_from_json(nlohmann::json{{"layers", 3}}), FormatError);
}
