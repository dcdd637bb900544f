#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tasteprint/errors.hpp"
#include "tasteprint/imaging.hpp"
#include "tasteprint/simulator.hpp"

namespace tasteprint {

nlohmann::json to_json(const ComparisonReport& r) {
    nlohmann::json masses = nlohmann::json::array();
    for (const auto& m : r.masses)
        masses.push_back({{"layer", m.layer},
                          {"channel", m.channel},
                          {"designed_mg", m.designed_mg},
                          {"simulated_mg", m.simulated_mg},
                          {"relative_deviation", m.relative_deviation},
                          {"flagged", m.flagged}});
    nlohmann::json centroids = nlohmann::json::array();
    for (const auto& c : r.centroids)
        centroids.push_back({{"layer", c.layer},
                             {"event", c.event},
                             {"designed", {c.designed.x, c.designed.y}},
                             {"simulated", {c.simulated.x, c.simulated.y}},
                             {"deviation_mm", c.deviation_mm},
                             {"flagged", c.flagged}});
    return {{"all_clear", r.all_clear()}, {"masses", masses}, {"centroids", centroids}, {"structural", r.structural}};
}

nlohmann::json summary_json(const SimulationResult& sim) {
    nlohmann::json sprays = nlohmann::json::array();
    for (const auto& s : sim.state.spray_log)
        sprays.push_back({{"layer", s.layer},
                          {"channel", s.channel},
                          {"position", {s.position.x, s.position.y}},
                          {"standoff_mm", s.standoff_mm},
                          {"duration_ms", s.duration_ms},
                          {"diameter_mm", s.diameter_mm},
                          {"mass_mg", s.mass_mg},
                          {"covered_area_mm2", s.covered_area_mm2},
                          {"raster_centroid", {s.raster_centroid.x, s.raster_centroid.y}},
                          {"line", s.line}});
    nlohmann::json conservation = nlohmann::json::array();
    double worst = 0.0;
    for (const auto& row : conservation_report(sim)) {
        worst = std::max(worst, row.relative_error);
        conservation.push_back({{"layer", row.layer},
                                {"channel", row.channel},
                                {"expected_mg", row.expected_mg},
                                {"integrated_mg", row.integrated_mg},
                                {"relative_error", row.relative_error}});
    }
    const auto& st = sim.state;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& m : sim.maps) layers.push_back(m.layer_index);
    return {{"layers", layers},
            {"cell_size", sim.maps.empty() ? 0.0 : sim.maps.front().cell_size},
            {"elapsed_s", st.elapsed_s},
            {"final_position", {st.position.x, st.position.y, st.position.z}},
            {"e_axis", st.e_axis},
            {"sprays", sprays},
            {"conservation", conservation},
            {"max_relative_error", worst},
            {"diagnostics", sim.diagnostics.to_json()}};
}

std::string render_mass_csv(const SimulationResult& sim) {
    std::ostringstream out;
    out << "layer,channel,expected_mg,integrated_mg,relative_error\n";
    for (const auto& row : conservation_report(sim))
        out << row.layer << ',' << row.channel << ',' << format_number(row.expected_mg) << ','
            << format_number(row.integrated_mg) << ',' << format_number(row.relative_error) << '\n';
    return out.str();
}

void export_maps(const SimulationResult& sim, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    double peak = 0.0;
    for (const auto& m : sim.maps)
        for (double v : m.density) peak = std::max(peak, v);
    // Gray level g stands for density g * scale.
    const double scale = peak > 0.0 ? peak / 255.0 : 0.0;

    nlohmann::json files = nlohmann::json::array();
    for (const auto& m : sim.maps) {
        for (int c = 0; c < m.channels; ++c) {
            GrayImage img(m.nx, m.ny);
            for (int j = 0; j < m.ny; ++j)
                for (int i = 0; i < m.nx; ++i) {
                    const double v = scale > 0.0 ? m.at(c, i, j) / scale : 0.0;
                    img.at(i, m.ny - 1 - j) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
                }
            const std::string name = "layer" + std::to_string(m.layer_index) + "_ch" + std::to_string(c) + ".pgm";
            write_bytes(dir / name, encode_pgm(img));
            files.push_back({{"file", name},
                             {"layer", m.layer_index},
                             {"channel", c},
                             {"integrated_mg", m.integrated_mass(c)}});
        }
    }
    const auto* first = sim.maps.empty() ? nullptr : &sim.maps.front();
    nlohmann::json sidecar = {{"density_unit", "mg/mm^2"},
                              {"scale_mg_per_mm2_per_level", scale},
                              {"cell_size_mm", first ? first->cell_size : 0.0},
                              {"origin_mm", {first ? first->origin.x : 0.0, first ? first->origin.y : 0.0}},
                              {"nx", first ? first->nx : 0},
                              {"ny", first ? first->ny : 0},
                              {"row_order", "y_descending"},
                              {"maps", files}};
    const std::string text = sidecar.dump(1) + "\n";
    write_bytes(dir / "maps.json", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    const std::string csv = render_mass_csv(sim);
    write_bytes(dir / "masses.csv", std::span(reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size()));
}

}  // namespace tasteprint
