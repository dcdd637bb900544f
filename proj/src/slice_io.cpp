#include "tasteprint/errors.hpp"
#include "tasteprint/slicer.hpp"

namespace tasteprint {

namespace {

nlohmann::json ring_json(const Ring& ring) {
    auto arr = nlohmann::json::array();
    for (const auto& v : ring) arr.push_back({v.x, v.y});
    return arr;
}

Ring ring_from(const nlohmann::json& j) {
    Ring r;
    for (const auto& v : j) r.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
    if (r.size() < 4 || !(r.front() == r.back())) throw FormatError("slice ring must be closed with >= 3 vertices");
    return r;
}

}  // namespace

nlohmann::json to_json(const SliceStack& stack) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& s : stack.layers) {
        nlohmann::json contours = nlohmann::json::array();
        for (const auto& c : s.contours) {
            nlohmann::json holes = nlohmann::json::array();
            for (const auto& h : c.holes) holes.push_back(ring_json(h));
            contours.push_back({{"outer", ring_json(c.outer)}, {"holes", holes}});
        }
        layers.push_back({{"index", s.index},
                          {"z_bottom", s.z_bottom},
                          {"z_top", s.z_top},
                          {"area", s.area},
                          {"contours", contours}});
    }
    return {{"schema_version", kSliceSchemaVersion},
            {"mesh_ref", stack.mesh_ref},
            {"layer_height", stack.layer_height},
            {"layers", layers}};
}

SliceStack slice_stack_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema_version").get<int>() != kSliceSchemaVersion)
            throw FormatError("unsupported slice schema version");
        SliceStack stack;
        stack.mesh_ref = j.at("mesh_ref").get<std::string>();
        stack.layer_height = j.at("layer_height").get<double>();
        for (const auto& lj : j.at("layers")) {
            LayerSlice s;
            s.index = lj.at("index").get<std::size_t>();
            s.z_bottom = lj.at("z_bottom").get<double>();
            s.z_top = lj.at("z_top").get<double>();
            s.area = lj.at("area").get<double>();
            for (const auto& cj : lj.at("contours")) {
                Contour c;
                c.outer = ring_from(cj.at("outer"));
                for (const auto& hj : cj.at("holes")) c.holes.push_back(ring_from(hj));
                s.contours.push_back(std::move(c));
            }
            if (s.index != stack.layers.size()) throw FormatError("slice layers out of order");
            stack.layers.push_back(std::move(s));
        }
        return stack;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed slice document: ") + e.what());
    }
}

std::string render_slices(const SliceStack& stack) { return to_json(stack).dump(1) + "\n"; }

}  // namespace tasteprint
