#include "tasteprint/planner.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

#include "tasteprint/errors.hpp"

namespace tasteprint {

std::vector<TasteChannel> default_channels() {
    return {
        {0, "sweet", 0.0, {233, 120, 160}},
        {1, "salty", 0.0, {90, 140, 220}},
        {2, "sour", 0.0, {230, 210, 60}},
        {3, "bitter", 0.0, {110, 170, 90}},
        {4, "umami", 0.0, {170, 110, 70}},
    };
}

const char* to_string(DesignMode m) {
    switch (m) {
    case DesignMode::None: return "none";
    case DesignMode::Free: return "free";
    case DesignMode::Pattern: return "pattern";
    case DesignMode::TotalAmount: return "total_amount";
    }
    return "none";
}

DesignMode design_mode_from_string(std::string_view s) {
    if (s == "none") return DesignMode::None;
    if (s == "free") return DesignMode::Free;
    if (s == "pattern") return DesignMode::Pattern;
    if (s == "total_amount") return DesignMode::TotalAmount;
    throw FormatError("unknown design mode '" + std::string(s) + "'");
}

std::size_t TasteDesign::event_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.events.size();
    return n;
}

TasteDesign new_design(const SliceStack& stack, const CalibrationSet& cal, std::vector<TasteChannel> channels) {
    TasteDesign d;
    d.mesh_ref = stack.mesh_ref;
    d.layer_height = stack.layer_height;
    d.channels = std::move(channels);
    d.layers.resize(stack.layers.size());
    d.calibration_ref = cal.id;
    return d;
}

int intensity_to_duration(int level, const CalibrationSet& cal) {
    if (level < 1 || level > 10) throw DomainError("intensity must be 1-10");
    const double lo = cal.duration_range.min, hi = cal.duration_range.max;
    return static_cast<int>(std::lround(lo + (hi - lo) * (level - 1) / 9.0));
}

bool footprint_overflows(const LayerSlice& slice, const Vec2& p, double diameter) {
    return boundary_distance(slice.contours, p) < 0.5 * diameter;
}

namespace {

bool has_channel(const TasteDesign& d, int channel) {
    return channel >= 0 && channel < kMaxChannels &&
           std::any_of(d.channels.begin(), d.channels.end(), [&](const TasteChannel& c) { return c.index == channel; });
}

void check_layer(const TasteDesign& d, std::size_t layer, std::span<const LayerSlice> slices) {
    if (d.layers.size() != slices.size())
        throw ValidationError("design has " + std::to_string(d.layers.size()) + " layers but the slice stack has " +
                              std::to_string(slices.size()));
    if (layer >= slices.size()) throw PlacementError("layer " + std::to_string(layer) + " does not exist", layer);
}

void check_channel(const TasteDesign& d, int channel) {
    if (!has_channel(d, channel)) throw ValidationError("channel " + std::to_string(channel) + " is not configured");
}

// Fills in the calibration-derived annotations; returns false if the event
// lies outside the layer.
bool annotate(SprayEvent& e, const LayerSlice& slice, const CalibrationSet& cal, Diagnostics* diag) {
    e.position = quantize_mm(e.position);
    e.standoff_mm = quantize_mm(e.standoff_mm);
    if (e.duration_ms < 1) throw DomainError("spray duration must be at least 1 ms");
    if (!(e.standoff_mm > 0.0)) throw DomainError("standoff must be positive");
    Diagnostics local;
    e.predicted_diameter_mm = predict_diameter(cal, e.standoff_mm, e.duration_ms, &local);
    e.predicted_mass_mg = predict_mass(cal, e.duration_ms, &local);
    e.extrapolated = !cal.duration_range.contains(e.duration_ms);
    for (const auto& item : local.items()) note(diag, item.severity, item.code, item.message, slice.index);
    if (!point_in_layer(slice, e.position)) return false;
    e.footprint_overflow = footprint_overflows(slice, e.position, e.predicted_diameter_mm);
    if (e.footprint_overflow)
        note(diag, Severity::Warning, "footprint-overflow",
             "footprint at (" + format_number(e.position.x) + ", " + format_number(e.position.y) +
                 ") extends past the contour",
             slice.index);
    return true;
}

void sort_events(LayerPlan& plan) {
    std::stable_sort(plan.events.begin(), plan.events.end(),
                     [](const SprayEvent& a, const SprayEvent& b) { return a.channel < b.channel; });
}

// Lattice centres in row-major order (rows bottom to top, left to right).
std::vector<Vec2> hex_lattice(const LayerSlice& slice, double pitch) {
    std::vector<Vec2> out;
    if (slice.contours.empty()) return out;
    const Box2 box = bounds(slice.contours);
    const Vec2 anchor = box.center();
    const double row = pitch * std::sqrt(3.0) / 2.0;
    const auto jlo = static_cast<long>(std::floor((box.min.y - anchor.y) / row)) - 1;
    const auto jhi = static_cast<long>(std::ceil((box.max.y - anchor.y) / row)) + 1;
    const auto ilo = static_cast<long>(std::floor((box.min.x - anchor.x) / pitch)) - 1;
    const auto ihi = static_cast<long>(std::ceil((box.max.x - anchor.x) / pitch)) + 1;
    for (long j = jlo; j <= jhi; ++j) {
        const double shift = (j % 2 != 0) ? 0.5 * pitch : 0.0;
        for (long i = ilo; i <= ihi; ++i) {
            const Vec2 p = quantize_mm(Vec2{anchor.x + shift + static_cast<double>(i) * pitch,
                                            anchor.y + static_cast<double>(j) * row});
            if (point_in_layer(slice, p)) out.push_back(p);
        }
    }
    return out;
}

// Some point inside the layer, for shapes the lattice misses entirely.
std::optional<Vec2> interior_point(const LayerSlice& slice) {
    if (slice.contours.empty()) return std::nullopt;
    const Box2 box = bounds(slice.contours);
    for (int k = 1; k < 64; ++k) {
        const double y = box.min.y + box.height() * (k % 2 ? 0.5 + 0.5 * k / 64.0 : 0.5 - 0.5 * k / 64.0);
        std::vector<double> xs;
        for (const auto& c : slice.contours) {
            auto scan = [&](const Ring& r) {
                for (std::size_t i = 0; i + 1 < r.size(); ++i)
                    if ((r[i].y <= y) != (r[i + 1].y <= y))
                        xs.push_back(r[i].x + (y - r[i].y) * (r[i + 1].x - r[i].x) / (r[i + 1].y - r[i].y));
            };
            scan(c.outer);
            for (const auto& h : c.holes) scan(h);
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            const Vec2 p = quantize_mm(Vec2{0.5 * (xs[i] + xs[i + 1]), y});
            if (point_in_layer(slice, p)) return p;
        }
    }
    return std::nullopt;
}

}  // namespace

TasteDesign add_free_event(const TasteDesign& design, std::size_t layer, SprayEvent event,
                           std::span<const LayerSlice> slices, const CalibrationSet& cal, Diagnostics* diag) {
    check_layer(design, layer, slices);
    check_channel(design, event.channel);
    if (!annotate(event, slices[layer], cal, diag))
        throw PlacementError("layer " + std::to_string(layer) + ": position (" + format_number(event.position.x) +
                                 ", " + format_number(event.position.y) + ") is outside the contour",
                             layer);
    TasteDesign out = design;
    out.layers[layer].events.push_back(event);
    out.layers[layer].mode = DesignMode::Free;
    sort_events(out.layers[layer]);
    return out;
}

TasteDesign fill_pattern(const TasteDesign& design, std::size_t layer, int channel, int duration_ms,
                         double standoff_mm, double overlap, std::span<const LayerSlice> slices,
                         const CalibrationSet& cal, Diagnostics* diag) {
    check_layer(design, layer, slices);
    check_channel(design, channel);
    if (!(overlap >= 0.0 && overlap <= 0.9)) throw DomainError("overlap must be in [0, 0.9]");
    if (duration_ms < 1) throw DomainError("spray duration must be at least 1 ms");
    const double diameter = predict_diameter(cal, quantize_mm(standoff_mm), duration_ms);
    if (!(diameter > 0.0)) throw InvalidFootprintError("predicted footprint diameter is not positive");

    TasteDesign out = design;
    LayerPlan& plan = out.layers[layer];
    for (const Vec2& p : hex_lattice(slices[layer], diameter * (1.0 - overlap))) {
        SprayEvent e;
        e.channel = channel;
        e.position = p;
        e.duration_ms = duration_ms;
        e.standoff_mm = standoff_mm;
        annotate(e, slices[layer], cal, diag);
        plan.events.push_back(e);
    }
    plan.mode = DesignMode::Pattern;
    sort_events(plan);
    return out;
}

AllocationResult allocate_total_amount(const TasteDesign& design, int channel, double total_mass_mg,
                                       double standoff_mm, std::span<const LayerSlice> slices,
                                       const CalibrationSet& cal, Diagnostics* diag) {
    check_layer(design, 0, slices);
    check_channel(design, channel);
    if (!(total_mass_mg > 0.0)) throw DomainError("total mass must be positive");
    if (!(standoff_mm > 0.0)) throw DomainError("standoff must be positive");
    if (!(cal.alpha1 > 0.0)) throw InvalidCalibrationError("dose model slope must be positive");

    const int dmin = static_cast<int>(std::ceil(cal.duration_range.min));
    const int dmax = static_cast<int>(std::floor(cal.duration_range.max));
    const double footprint = predict_diameter(cal, quantize_mm(standoff_mm), dmin);
    if (!(footprint > 0.0)) throw InvalidFootprintError("predicted footprint diameter is not positive");

    std::vector<double> weighted(slices.size(), 0.0);
    double weighted_total = 0.0;
    for (std::size_t k = 0; k < slices.size(); ++k) {
        if (slices[k].area > 0.0) weighted[k] = slices[k].area * design.layers[k].weight;
        weighted_total += weighted[k];
    }
    if (!(weighted_total > 0.0)) throw DomainError("no layer with positive area to allocate over");

    // Positions: dense packing at the shortest calibrated duration.
    std::vector<std::vector<Vec2>> positions(slices.size());
    for (std::size_t k = 0; k < slices.size(); ++k) {
        if (weighted[k] <= 0.0) continue;
        positions[k] = hex_lattice(slices[k], footprint);
        if (positions[k].empty())
            if (auto p = interior_point(slices[k])) positions[k].push_back(*p);
    }

    std::size_t event_total = 0;
    for (const auto& p : positions) event_total += p.size();
    const double capacity = static_cast<double>(event_total) * predict_mass(cal, dmax);
    if (total_mass_mg > capacity * (1.0 + 1e-12))
        throw CapacityError("total mass " + format_number(total_mass_mg) + " mg exceeds the achievable " +
                                format_number(capacity) + " mg",
                            capacity);

    AllocationReport report;
    report.channel = channel;
    report.target_mg = total_mass_mg;

    // Per layer: the integer duration budget closest to the target, split as
    // evenly as possible across the layer's events.
    std::vector<std::vector<int>> durations(slices.size());
    double shortfall = 0.0;
    for (std::size_t k = 0; k < slices.size(); ++k) {
        LayerAllocation la;
        la.layer = k;
        la.area_mm2 = slices[k].area;
        la.target_mg = total_mass_mg * weighted[k] / weighted_total;
        const auto n = static_cast<long>(positions[k].size());
        la.events = positions[k].size();
        if (n > 0) {
            const double units = (la.target_mg - static_cast<double>(n) * cal.alpha0) / cal.alpha1;
            long budget = std::lround(units);
            if (budget < n * dmin || budget > n * dmax) {
                la.clamped = true;
                budget = std::clamp(budget, n * dmin, n * dmax);
            }
            const long base = budget / n, extra = budget % n;
            for (long i = 0; i < n; ++i) durations[k].push_back(static_cast<int>(base + (i < extra ? 1 : 0)));
            double achieved = 0.0;
            for (int d : durations[k]) achieved += predict_mass(cal, d);
            if (la.clamped && achieved < la.target_mg) shortfall += la.target_mg - achieved;
        }
        report.layers.push_back(la);
    }

    // Move any shortfall from saturated layers onto events with headroom.
    auto units_left = std::lround(shortfall / cal.alpha1);
    for (std::size_t k = 0; k < slices.size() && units_left > 0; ++k)
        for (auto& d : durations[k]) {
            if (units_left <= 0) break;
            const long add = std::min<long>(units_left, dmax - d);
            d += static_cast<int>(add);
            units_left -= add;
        }

    TasteDesign out = design;
    for (std::size_t k = 0; k < slices.size(); ++k) {
        auto& events = out.layers[k].events;
        events.erase(std::remove_if(events.begin(), events.end(),
                                    [&](const SprayEvent& e) { return e.channel == channel; }),
                     events.end());
        double achieved = 0.0;
        for (std::size_t i = 0; i < positions[k].size(); ++i) {
            SprayEvent e;
            e.channel = channel;
            e.position = positions[k][i];
            e.duration_ms = durations[k][i];
            e.standoff_mm = standoff_mm;
            annotate(e, slices[k], cal, diag);
            achieved += e.predicted_mass_mg;
            events.push_back(e);
        }
        if (!positions[k].empty()) out.layers[k].mode = DesignMode::TotalAmount;
        sort_events(out.layers[k]);
        report.layers[k].achieved_mg = achieved;
        report.achieved_mg += achieved;
        report.clamped = report.clamped || report.layers[k].clamped;
    }
    if (report.clamped)
        note(diag, Severity::Warning, "allocation-clamped",
             "durations clamped to the calibrated range; achieved " + format_number(report.achieved_mg) + " mg of " +
                 format_number(total_mass_mg) + " mg");
    return {std::move(out), std::move(report)};
}

DesignReport validate_design(const TasteDesign& design, std::span<const LayerSlice> slices, const CalibrationSet& cal) {
    DesignReport rep;
    Diagnostics& dg = rep.diagnostics;
    if (design.layers.size() != slices.size())
        dg.error("layer-count", "design has " + std::to_string(design.layers.size()) +
                                    " layers but the slice stack has " + std::to_string(slices.size()));
    if (design.channels.size() > static_cast<std::size_t>(kMaxChannels))
        dg.error("channel-count", "more than " + std::to_string(kMaxChannels) + " channels");
    std::set<int> seen;
    for (const auto& c : design.channels) {
        if (c.index < 0 || c.index >= kMaxChannels)
            dg.error("channel-range", "channel index " + std::to_string(c.index) + " out of range");
        if (!seen.insert(c.index).second) dg.error("channel-duplicate", "duplicate channel " + std::to_string(c.index));
    }
    for (const auto& c : design.channels) rep.mass_by_channel[c.index].assign(design.layers.size(), 0.0);

    for (std::size_t k = 0; k < design.layers.size(); ++k) {
        const LayerSlice* slice = k < slices.size() ? &slices[k] : nullptr;
        for (const auto& e : design.layers[k].events) {
            const std::string where = "event ch" + std::to_string(e.channel) + " at (" + format_number(e.position.x) +
                                      ", " + format_number(e.position.y) + ")";
            if (!has_channel(design, e.channel)) {
                dg.error("channel-range", where + ": channel not configured", k);
                continue;
            }
            if (e.duration_ms < 1) {
                dg.error("duration", where + ": duration must be at least 1 ms", k);
                continue;
            }
            if (!(e.standoff_mm > 0.0)) {
                dg.error("standoff", where + ": standoff must be positive", k);
                continue;
            }
            if (!cal.duration_range.contains(e.duration_ms))
                dg.warn("extrapolation", where + ": duration " + std::to_string(e.duration_ms) +
                                             " ms outside the calibrated range", k);
            if (!cal.distance_range.contains(e.standoff_mm))
                dg.warn("extrapolation", where + ": standoff " + format_number(e.standoff_mm) +
                                             " mm outside the calibrated range", k);
            const double mass = predict_mass(cal, e.duration_ms);
            rep.mass_by_channel[e.channel][k] += mass;
            if (!slice) continue;
            if (!point_in_layer(*slice, e.position)) {
                dg.error("outside-contour", where + ": position outside the layer", k);
                continue;
            }
            const double diameter = predict_diameter(cal, e.standoff_mm, e.duration_ms);
            if (footprint_overflows(*slice, e.position, diameter))
                dg.warn("footprint-overflow", where + ": " + format_number(diameter) + " mm footprint crosses the contour",
                        k);
        }
    }
    return rep;
}

}  // namespace tasteprint
