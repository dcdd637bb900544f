#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "tasteprint/calibration.hpp"
#include "tasteprint/diagnostics.hpp"
#include "tasteprint/gcode.hpp"
#include "tasteprint/machine_profile.hpp"
#include "tasteprint/planner.hpp"

namespace tasteprint {

struct SimulationOptions {
    double spread_factor = 0.0;  // static diameter inflation, e.g. 0.04 on an edible substrate
    double cell_size = 0.2;      // mm
    int subsamples = 4;          // per cell edge
};

/// Per-layer seasoning mass density, mg/mm^2, one plane per channel.
struct DepositionMap {
    std::size_t layer_index = 0;
    double cell_size = 0.2;
    Vec2 origin;  // lower-left corner of cell (0, 0)
    int nx = 0;
    int ny = 0;
    int channels = 0;
    std::vector<double> density;  // [(channel * ny + j) * nx + i]

    double at(int channel, int i, int j) const { return density[(std::size_t(channel) * ny + j) * nx + i]; }
    double& at(int channel, int i, int j) { return density[(std::size_t(channel) * ny + j) * nx + i]; }
    /// Sum of density * cell_size^2.
    double integrated_mass(int channel) const;
    bool operator==(const DepositionMap&) const = default;
};

struct SprayRecord {
    std::size_t layer = 0;
    int channel = 0;
    Vec2 position;  // surface position (offset-corrected)
    double standoff_mm = 0.0;
    int duration_ms = 0;
    double diameter_mm = 0.0;
    double mass_mg = 0.0;
    double covered_area_mm2 = 0.0;  // subsampled disc coverage
    Vec2 raster_centroid;
    std::size_t line = 0;
};

struct VirtualPrinterState {
    Vec3 position;
    double e_axis = 0.0;
    double feedrate = 0.0;
    long current_layer = -1;
    std::vector<SprayRecord> spray_log;
    double elapsed_s = 0.0;
};

struct SimulationResult {
    std::vector<DepositionMap> maps;  // one per layer block, in program order
    VirtualPrinterState state;
    Diagnostics diagnostics;
};

/// Executes the program. Each M810 deposits the dose-model mass uniformly
/// over a disc of the footprint-model diameter * (1 + spread_factor),
/// normalised by its rasterised coverage so mass is conserved exactly.
/// Throws SynchronizationError for a spray at or below the layer top and
/// BoundsError for a move leaving the build volume.
SimulationResult simulate(const GcodeProgram& program, const CalibrationSet& cal, const MachineProfile& profile,
                          const SimulationOptions& options = {});

/// Layer-block ordering and height rules for extrude-then-spray programs.
/// Codes: "order", "z-during-extrusion", "standoff", "z-regression",
/// "orphan-spray", "unblocked-spray".
Diagnostics check_synchronization(const GcodeProgram& program);

struct MassComparison {
    std::size_t layer = 0;
    int channel = 0;
    double designed_mg = 0.0;
    double simulated_mg = 0.0;
    double relative_deviation = 0.0;
    bool flagged = false;
};

struct CentroidComparison {
    std::size_t layer = 0;
    std::size_t event = 0;
    Vec2 designed;
    Vec2 simulated;
    double deviation_mm = 0.0;
    bool flagged = false;
};

struct ComparisonReport {
    std::vector<MassComparison> masses;
    std::vector<CentroidComparison> centroids;
    std::vector<std::string> structural;  // layer/event count mismatches
    bool all_clear() const;
};

ComparisonReport compare_to_design(const SimulationResult& sim, const TasteDesign& design, const CalibrationSet& cal);

/// Per-channel integrated mass vs. the dose model summed over the spray log.
struct ConservationRow {
    std::size_t layer = 0;
    int channel = 0;
    double expected_mg = 0.0;
    double integrated_mg = 0.0;
    double relative_error = 0.0;
};
std::vector<ConservationRow> conservation_report(const SimulationResult& sim);

nlohmann::json to_json(const ComparisonReport& r);
nlohmann::json summary_json(const SimulationResult& sim);
std::string render_mass_csv(const SimulationResult& sim);

/// Writes layer<k>_ch<c>.pgm files, masses.csv and maps.json into `dir`.
void export_maps(const SimulationResult& sim, const std::filesystem::path& dir);

}  // namespace tasteprint
