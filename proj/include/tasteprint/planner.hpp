#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tasteprint/calibration.hpp"
#include "tasteprint/diagnostics.hpp"
#include "tasteprint/geometry.hpp"
#include "tasteprint/slicer.hpp"

namespace tasteprint {

inline constexpr int kMaxChannels = 6;
inline constexpr int kDesignSchemaVersion = 1;

struct TasteChannel {
    int index = 0;
    std::string name;
    double solution_concentration = 0.0;  // mg solute per mg solution, metadata
    std::array<int, 3> color{0, 0, 0};

    bool operator==(const TasteChannel&) const = default;
};

/// The five basic tastes on channels 0-4.
std::vector<TasteChannel> default_channels();

struct SprayEvent {
    int channel = 0;
    Vec2 position;  // mm, on the 0.001 mm grid
    int duration_ms = 1;
    double standoff_mm = 0.0;
    bool extrapolated = false;

    // Derived from the calibration when the event is placed.
    double predicted_diameter_mm = 0.0;
    double predicted_mass_mg = 0.0;
    bool footprint_overflow = false;

    bool operator==(const SprayEvent&) const = default;
};

enum class DesignMode { None, Free, Pattern, TotalAmount };

const char* to_string(DesignMode m);
DesignMode design_mode_from_string(std::string_view s);

struct LayerPlan {
    DesignMode mode = DesignMode::None;
    double weight = 1.0;  // multiplier applied by total-amount allocation
    std::vector<SprayEvent> events;

    bool operator==(const LayerPlan&) const = default;
};

struct TasteDesign {
    int schema_version = kDesignSchemaVersion;
    long version = 1;  // document version for optimistic concurrency
    std::string mesh_ref;
    double layer_height = 0.0;
    std::vector<TasteChannel> channels;
    std::vector<LayerPlan> layers;
    std::string calibration_ref;

    std::size_t event_count() const;
    bool operator==(const TasteDesign&) const = default;
};

/// Empty design with one plan per slice.
TasteDesign new_design(const SliceStack& stack, const CalibrationSet& cal,
                       std::vector<TasteChannel> channels = default_channels());

/// Maps a 1-10 intensity slider linearly onto the calibrated duration range.
int intensity_to_duration(int level, const CalibrationSet& cal);

/// Appends one event. Throws PlacementError if the position is outside the
/// layer. Footprint overflow past the contour only warns.
TasteDesign add_free_event(const TasteDesign& design, std::size_t layer, SprayEvent event,
                           std::span<const LayerSlice> slices, const CalibrationSet& cal,
                           Diagnostics* diag = nullptr);

/// Dense packing: events on a hexagonal lattice of pitch
/// diameter * (1 - overlap), anchored at the layer's bounding-box centre.
TasteDesign fill_pattern(const TasteDesign& design, std::size_t layer, int channel, int duration_ms,
                         double standoff_mm, double overlap, std::span<const LayerSlice> slices,
                         const CalibrationSet& cal, Diagnostics* diag = nullptr);

struct LayerAllocation {
    std::size_t layer = 0;
    double area_mm2 = 0.0;
    double target_mg = 0.0;
    double achieved_mg = 0.0;
    std::size_t events = 0;
    bool clamped = false;
};

struct AllocationReport {
    int channel = 0;
    double target_mg = 0.0;
    double achieved_mg = 0.0;
    bool clamped = false;
    std::vector<LayerAllocation> layers;
};

struct AllocationResult {
    TasteDesign design;
    AllocationReport report;
};

/// Distributes `total_mass_mg` of one channel over the layers in proportion
/// to weight * cross-section area. Replaces any earlier events of that
/// channel. Throws CapacityError when even the longest calibrated duration
/// cannot reach the target.
AllocationResult allocate_total_amount(const TasteDesign& design, int channel, double total_mass_mg,
                                       double standoff_mm, std::span<const LayerSlice> slices,
                                       const CalibrationSet& cal, Diagnostics* diag = nullptr);

struct DesignReport {
    Diagnostics diagnostics;
    /// channel -> predicted mass per layer (mg)
    std::map<int, std::vector<double>> mass_by_channel;

    bool ok() const { return !diagnostics.has_errors(); }
};

DesignReport validate_design(const TasteDesign& design, std::span<const LayerSlice> slices,
                             const CalibrationSet& cal);

/// True when a footprint disc of `diameter` centred at `p` leaves the layer.
bool footprint_overflows(const LayerSlice& slice, const Vec2& p, double diameter);

nlohmann::json to_json(const SprayEvent& e);
SprayEvent spray_event_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TasteDesign& d);
TasteDesign design_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AllocationReport& r);
nlohmann::json to_json(const DesignReport& r);

/// Content hash of the design, independent of its document version.
std::string design_hash(const TasteDesign& d);

}  // namespace tasteprint
