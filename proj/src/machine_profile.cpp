#include "tasteprint/machine_profile.hpp"

#include <cmath>

#include "tasteprint/errors.hpp"

namespace tasteprint {

bool MachineProfile::in_build_volume(const Vec3& p, double tol) const {
    return p.x >= build_min.x - tol && p.y >= build_min.y - tol && p.z >= build_min.z - tol &&
           p.x <= build_max.x + tol && p.y <= build_max.y + tol && p.z <= build_max.z + tol;
}

void MachineProfile::validate() const {
    if (!(nozzle_diameter_mm > 0.0)) throw ValidationError("profile: nozzle diameter must be positive");
    if (!(travel_feedrate > 0.0) || !(print_feedrate > 0.0)) throw ValidationError("profile: feedrates must be positive");
    if (!(flow_multiplier > 0.0)) throw ValidationError("profile: flow multiplier must be positive");
    if (airbrush_offsets.empty() || airbrush_offsets.size() > 6)
        throw ValidationError("profile: between 1 and 6 airbrush offsets required");
    if (!(build_max.x > build_min.x && build_max.y > build_min.y && build_max.z > build_min.z))
        throw ValidationError("profile: empty build volume");
}

MachineProfile default_profile() { return MachineProfile{}; }

nlohmann::json to_json(const MachineProfile& p) {
    nlohmann::json offsets = nlohmann::json::array();
    for (const auto& o : p.airbrush_offsets) offsets.push_back({o.x, o.y});
    return {{"name", p.name},
            {"nozzle_diameter_mm", p.nozzle_diameter_mm},
            {"syringe_capacity_ml", p.syringe_capacity_ml},
            {"flow_multiplier", p.flow_multiplier},
            {"travel_feedrate_mm_min", p.travel_feedrate},
            {"print_feedrate_mm_min", p.print_feedrate},
            {"default_standoff_mm", p.default_standoff_mm},
            {"airbrush_offsets_mm", offsets},
            {"build_volume_mm",
             {{"min", {p.build_min.x, p.build_min.y, p.build_min.z}},
              {"max", {p.build_max.x, p.build_max.y, p.build_max.z}}}}};
}

MachineProfile machine_profile_from_json(const nlohmann::json& j) {
    MachineProfile p;
    try {
        p.name = j.value("name", p.name);
        p.nozzle_diameter_mm = j.value("nozzle_diameter_mm", p.nozzle_diameter_mm);
        p.syringe_capacity_ml = j.value("syringe_capacity_ml", p.syringe_capacity_ml);
        p.flow_multiplier = j.value("flow_multiplier", p.flow_multiplier);
        p.travel_feedrate = j.value("travel_feedrate_mm_min", p.travel_feedrate);
        p.print_feedrate = j.value("print_feedrate_mm_min", p.print_feedrate);
        p.default_standoff_mm = j.value("default_standoff_mm", p.default_standoff_mm);
        if (j.contains("airbrush_offsets_mm")) {
            p.airbrush_offsets.clear();
            for (const auto& o : j.at("airbrush_offsets_mm"))
                p.airbrush_offsets.push_back(quantize_mm(Vec2{o.at(0).get<double>(), o.at(1).get<double>()}));
        }
        if (j.contains("build_volume_mm")) {
            const auto& b = j.at("build_volume_mm");
            p.build_min = {b.at("min").at(0).get<double>(), b.at("min").at(1).get<double>(),
                           b.at("min").at(2).get<double>()};
            p.build_max = {b.at("max").at(0).get<double>(), b.at("max").at(1).get<double>(),
                           b.at("max").at(2).get<double>()};
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed machine profile: ") + e.what());
    }
    p.validate();
    return p;
}

}  // namespace tasteprint
