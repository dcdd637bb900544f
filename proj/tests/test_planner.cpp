#include <doctest.h>

#include "support.hpp"
#include "tasteprint/errors.hpp"

using namespace tasteprint;
using namespace fixtures;

namespace {

SprayEvent event_at(int channel, Vec2 p, int duration = 20, double standoff = 20.0) {
    SprayEvent e;
    e.channel = channel;
    e.position = p;
    e.duration_ms = duration;
    e.standoff_mm = standoff;
    return e;
}

}  // namespace

TEST_CASE("intensity slider spans the calibrated duration range") {
    const CalibrationSet cal = default_calibration();
    CHECK(intensity_to_duration(1, cal) == 10);
    CHECK(intensity_to_duration(10, cal) == 80);
    CHECK(intensity_to_duration(4, cal) == 33);
    CHECK_THROWS_AS(intensity_to_duration(0, cal), DomainError);
    CHECK_THROWS_AS(intensity_to_duration(11, cal), DomainError);
}

TEST_CASE("free events are annotated from the calibration") {
    const CalibrationSet cal = default_calibration();
    const SliceStack s = cube_stack();
    TasteDesign d = new_design(s, cal);
    CHECK(d.layers.size() == 7);
    CHECK(d.mesh_ref == s.mesh_ref);
    CHECK(d.channels.size() == 5);

    d = add_free_event(d, 3, event_at(1, {5.0004, 5.0}), s.layers, cal);
    const SprayEvent& e = d.layers[3].events.at(0);
    CHECK(e.position == Vec2{5.0, 5.0});
    CHECK(e.predicted_diameter_mm == doctest::Approx(7.065).epsilon(1e-4));
    CHECK(e.predicted_mass_mg == doctest::Approx(1.434));
    CHECK_FALSE(e.footprint_overflow);
    CHECK(d.layers[3].mode == DesignMode::Free);

    // Stacked events at one position are allowed.
    d = add_free_event(d, 3, event_at(0, {5, 5}), s.layers, cal);
    d = add_free_event(d, 3, event_at(1, {5, 5}), s.layers, cal);
    REQUIRE(d.layers[3].events.size() == 3);
    CHECK(d.layers[3].events[0].channel == 0);  // ordered by channel

    Diagnostics diag;
    d = add_free_event(d, 3, event_at(2, {1, 1}), s.layers, cal, &diag);
    CHECK(diag.count("footprint-overflow") == 1);
    CHECK(d.layers[3].events.back().footprint_overflow);
}

TEST_CASE("placement errors") {
    const CalibrationSet cal = default_calibration();
    const SliceStack s = cube_stack();
    const TasteDesign d = new_design(s, cal);
    try {
        add_free_event(d, 3, event_at(1, {12, 5}), s.layers, cal);
        FAIL("expected PlacementError");
    } catch (const PlacementError& e) {
        CHECK(e.layer() == 3);
        CHECK(std::string(e.what()).find("outside") != std::string::npos);
    }
    CHECK_NOTHROW(add_free_event(d, 3, event_at(1, {10, 5}), s.layers, cal));  // on the boundary
    CHECK_THROWS_AS(add_free_event(d, 9, event_at(1, {5, 5}), s.layers, cal), PlacementError);
    CHECK_THROWS_AS(add_free_event(d, 1, event_at(5, {5, 5}), s.layers, cal), ValidationError);
    CHECK_THROWS_AS(add_free_event(d, 1, event_at(1, {5, 5}, 0), s.layers, cal), DomainError);
    CHECK_THROWS_AS(add_free_event(d, 1, event_at(1, {5, 5}, 20, 0.0), s.layers, cal), DomainError);
}

TEST_CASE("dense packing is a hexagonal lattice inside the layer") {
    const CalibrationSet cal = default_calibration();
    const SliceStack s = block_stack();
    const TasteDesign d = fill_pattern(new_design(s, cal), 4, 2, 20, 20.0, 0.0, s.layers, cal);
    const auto& ev = d.layers[4].events;
    const double pitch = predict_diameter(cal, 20.0, 20);
    REQUIRE(ev.size() > 10);
    CHECK(d.layers[4].mode == DesignMode::Pattern);
    double nearest_min = 1e9;
    for (std::size_t i = 0; i < ev.size(); ++i) {
        CHECK(point_in_layer(s.layers[4], ev[i].position));
        double nearest = 1e9;
        for (std::size_t j = 0; j < ev.size(); ++j)
            if (i != j) nearest = std::min(nearest, distance(ev[i].position, ev[j].position));
        nearest_min = std::min(nearest_min, nearest);
        CHECK(nearest == doctest::Approx(pitch).epsilon(1e-3));
    }
    // Covering: interior probes are within the hexagon circumradius of an event.
    for (double x = 40 + pitch; x <= 70 - pitch; x += 0.5)
        for (double y = 40 + pitch; y <= 70 - pitch; y += 0.5) {
            double best = 1e9;
            for (const auto& e : ev) best = std::min(best, distance(e.position, {x, y}));
            CHECK(best <= pitch / std::sqrt(3.0) + 2e-3);
        }
    // Overlap tightens the pitch.
    const TasteDesign tight = fill_pattern(new_design(s, cal), 4, 2, 20, 20.0, 0.3, s.layers, cal);
    CHECK(tight.layers[4].events.size() > ev.size());
    CHECK_THROWS_AS(fill_pattern(d, 4, 2, 20, 20.0, 0.95, s.layers, cal), DomainError);
}

TEST_CASE("total-amount allocation over equal layers") {
    const CalibrationSet cal = default_calibration();
    const SliceStack s = slice_bytes(to_binary_stl(make_box({0, 0, 0}, {10, 10, 8})), MeshFormat::StlBinary, 1.6);
    REQUIRE(s.layers.size() == 5);
    TasteDesign d = new_design(s, cal);
    d = add_free_event(d, 0, event_at(0, {2, 2}), s.layers, cal);
    d = add_free_event(d, 1, event_at(1, {2, 2}), s.layers, cal);
    const AllocationResult r = allocate_total_amount(d, 0, 10.0, 20.0, s.layers, cal);
    double sum = 0.0;
    for (std::size_t k = 0; k < 5; ++k) {
        std::size_t ch0 = 0;
        for (const auto& e : r.design.layers[k].events)
            if (e.channel == 0) {
                ++ch0;
                CHECK(e.duration_ms == 27);
                CHECK(e.position == Vec2{5, 5});
                sum += predict_mass(cal, e.duration_ms);
            }
        CHECK(ch0 == 1);  // the earlier free channel-0 event was replaced
        CHECK(r.report.layers[k].target_mg == doctest::Approx(2.0));
    }
    CHECK(r.design.layers[1].events.size() == 2);  // channel 1 untouched
    CHECK(sum == doctest::Approx(10.0).epsilon(0.041));
    CHECK(r.report.achieved_mg == doctest::Approx(sum));
    CHECK_FALSE(r.report.clamped);
}

TEST_CASE("allocation weights, clamping and capacity") {
    const CalibrationSet cal = default_calibration();
    const SliceStack s = slice_bytes(to_binary_stl(make_box({0, 0, 0}, {10, 10, 8})), MeshFormat::StlBinary, 1.6);
    TasteDesign d = new_design(s, cal);
    d.layers[2].weight = 3.0;
    const auto r = allocate_total_amount(d, 1, 14.0, 20.0, s.layers, cal);
    CHECK(r.report.layers[2].target_mg == doctest::Approx(6.0));
    CHECK(r.report.layers[0].target_mg == doctest::Approx(2.0));

    // Layer 2 alone would need more than 80 ms; the rest moves elsewhere.
    d.layers[2].weight = 20.0;
    Diagnostics diag;
    const auto c = allocate_total_amount(d, 1, 15.0, 20.0, s.layers, cal, &diag);
    CHECK(c.report.layers[2].clamped);
    CHECK(c.report.clamped);
    CHECK(diag.count("allocation-clamped") == 1);
    CHECK(c.report.achieved_mg == doctest::Approx(15.0).epsilon(0.03));

    try {
        allocate_total_amount(d, 1, 100.0, 20.0, s.layers, cal);
        FAIL("expected CapacityError");
    } catch (const CapacityError& e) {
        CHECK(e.achievable_mass() == doctest::Approx(5 * predict_mass(cal, 80)));
    }
}

TEST_CASE("design validation") {
    const CalibrationSet cal = default_calibration();
    const SliceStack s = cube_stack();
    TasteDesign d = new_design(s, cal);
    d = add_free_event(d, 2, event_at(1, {5, 5}, 20), s.layers, cal);
    d = add_free_event(d, 2, event_at(1, {4, 5}, 90), s.layers, cal);
    DesignReport r = validate_design(d, s.layers, cal);
    CHECK(r.ok());
    CHECK(r.diagnostics.count("extrapolation") == 1);
    CHECK(r.mass_by_channel[1][2] == doctest::Approx(1.434 + predict_mass(cal, 90)));

    d.layers[2].events[0].position = {50, 50};
    d.layers[2].events[1].duration_ms = 0;
    r = validate_design(d, s.layers, cal);
    CHECK(r.diagnostics.count("outside-contour") == 1);
    CHECK(r.diagnostics.count("duration") == 1);
    CHECK_FALSE(r.ok());

    d.layers.pop_back();
    CHECK(validate_design(d, s.layers, cal).diagnostics.count("layer-count") == 1);
}

TEST_CASE("design JSON round trip and hash") {
    const CalibrationSet cal = default_calibration();
    const SliceStack s = block_stack();
    TasteDesign d = three_channel_design(s, cal);
    CHECK(design_from_json(to_json(d)) == d);
    CHECK(design_from_json(nlohmann::json::parse(to_json(d).dump())) == d);
    const std::string h = design_hash(d);
    d.version += 5;
    CHECK(design_hash(d) == h);
    d.layers[0].weight = 2.0;
    CHECK(design_hash(d) != h);
    CHECK_THROWS_AS(design_from_json(nlohmann::json{{"layers", "x"}}), FormatError);
    CHECK(design_mode_from_string(to_string(DesignMode::TotalAmount)) == DesignMode::TotalAmount);
}
