#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tasteprint/geometry.hpp"

namespace tasteprint {

struct MachineProfile {
    std::string name = "default";
    double nozzle_diameter_mm = 1.6;
    double syringe_capacity_ml = 30.0;
    double flow_multiplier = 1.0;
    double travel_feedrate = 3000.0;  // mm/min
    double print_feedrate = 600.0;    // mm/min
    double default_standoff_mm = 20.0;
    /// Airbrush nozzle XY offset from the extruder nozzle, one per channel.
    std::vector<Vec2> airbrush_offsets = std::vector<Vec2>(6);
    Vec3 build_min{0.0, 0.0, 0.0};
    Vec3 build_max{220.0, 220.0, 250.0};

    std::size_t channel_count() const { return airbrush_offsets.size(); }
    bool in_build_volume(const Vec3& p, double tol = 1e-9) const;
    /// Throws ValidationError on a bad profile.
    void validate() const;
    bool operator==(const MachineProfile&) const = default;
};

MachineProfile default_profile();

nlohmann::json to_json(const MachineProfile& p);
/// Offsets are snapped to the 0.001 mm grid G-code coordinates use.
MachineProfile machine_profile_from_json(const nlohmann::json& j);

}  // namespace tasteprint
