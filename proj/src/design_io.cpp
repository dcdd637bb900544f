#include "tasteprint/errors.hpp"
#include "tasteprint/hash.hpp"
#include "tasteprint/planner.hpp"

namespace tasteprint {

nlohmann::json to_json(const SprayEvent& e) {
    return {{"channel", e.channel},
            {"position", {e.position.x, e.position.y}},
            {"duration_ms", e.duration_ms},
            {"standoff_mm", e.standoff_mm},
            {"extrapolated", e.extrapolated},
            {"predicted_diameter_mm", e.predicted_diameter_mm},
            {"predicted_mass_mg", e.predicted_mass_mg},
            {"footprint_overflow", e.footprint_overflow}};
}

SprayEvent spray_event_from_json(const nlohmann::json& j) {
    try {
        SprayEvent e;
        e.channel = j.at("channel").get<int>();
        e.position = quantize_mm(Vec2{j.at("position").at(0).get<double>(), j.at("position").at(1).get<double>()});
        e.duration_ms = j.at("duration_ms").get<int>();
        e.standoff_mm = quantize_mm(j.at("standoff_mm").get<double>());
        e.extrapolated = j.value("extrapolated", false);
        e.predicted_diameter_mm = j.value("predicted_diameter_mm", 0.0);
        e.predicted_mass_mg = j.value("predicted_mass_mg", 0.0);
        e.footprint_overflow = j.value("footprint_overflow", false);
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError(std::string("malformed spray event: ") + ex.what());
    }
}

nlohmann::json to_json(const TasteDesign& d) {
    nlohmann::json channels = nlohmann::json::array();
    for (const auto& c : d.channels)
        channels.push_back({{"index", c.index},
                            {"name", c.name},
                            {"solution_concentration", c.solution_concentration},
                            {"color", c.color}});
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t k = 0; k < d.layers.size(); ++k) {
        nlohmann::json events = nlohmann::json::array();
        for (const auto& e : d.layers[k].events) events.push_back(to_json(e));
        layers.push_back(
            {{"index", k}, {"mode", to_string(d.layers[k].mode)}, {"weight", d.layers[k].weight}, {"events", events}});
    }
    return {{"schema_version", d.schema_version},
            {"version", d.version},
            {"mesh_ref", d.mesh_ref},
            {"layer_height", d.layer_height},
            {"calibration_ref", d.calibration_ref},
            {"channels", channels},
            {"layers", layers}};
}

TasteDesign design_from_json(const nlohmann::json& j) {
    try {
        TasteDesign d;
        d.schema_version = j.at("schema_version").get<int>();
        if (d.schema_version != kDesignSchemaVersion)
            throw FormatError("unsupported design schema version " + std::to_string(d.schema_version));
        d.version = j.at("version").get<long>();
        d.mesh_ref = j.at("mesh_ref").get<std::string>();
        d.layer_height = j.at("layer_height").get<double>();
        d.calibration_ref = j.at("calibration_ref").get<std::string>();
        for (const auto& cj : j.at("channels")) {
            TasteChannel c;
            c.index = cj.at("index").get<int>();
            c.name = cj.at("name").get<std::string>();
            c.solution_concentration = cj.value("solution_concentration", 0.0);
            c.color = cj.value("color", std::array<int, 3>{0, 0, 0});
            d.channels.push_back(std::move(c));
        }
        for (const auto& lj : j.at("layers")) {
            LayerPlan p;
            p.mode = design_mode_from_string(lj.value("mode", std::string("none")));
            p.weight = lj.value("weight", 1.0);
            for (const auto& ej : lj.at("events")) p.events.push_back(spray_event_from_json(ej));
            d.layers.push_back(std::move(p));
        }
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed design document: ") + e.what());
    }
}

nlohmann::json to_json(const AllocationReport& r) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : r.layers)
        layers.push_back({{"layer", l.layer},
                          {"area_mm2", l.area_mm2},
                          {"target_mg", l.target_mg},
                          {"achieved_mg", l.achieved_mg},
                          {"events", l.events},
                          {"clamped", l.clamped}});
    return {{"channel", r.channel},
            {"target_mg", r.target_mg},
            {"achieved_mg", r.achieved_mg},
            {"clamped", r.clamped},
            {"layers", layers}};
}

nlohmann::json to_json(const DesignReport& r) {
    nlohmann::json mass = nlohmann::json::object();
    for (const auto& [ch, per_layer] : r.mass_by_channel) {
        double total = 0.0;
        for (double m : per_layer) total += m;
        mass[std::to_string(ch)] = {{"per_layer_mg", per_layer}, {"total_mg", total}};
    }
    return {{"ok", r.ok()}, {"diagnostics", r.diagnostics.to_json()}, {"mass_by_channel", mass}};
}

std::string design_hash(const TasteDesign& d) {
    auto j = to_json(d);
    j.erase("version");
    return content_hash(j.dump());
}

}  // namespace tasteprint
