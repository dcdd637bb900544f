#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "tasteprint/calibration.hpp"
#include "tasteprint/gcode.hpp"
#include "tasteprint/machine_profile.hpp"
#include "tasteprint/mesh.hpp"
#include "tasteprint/planner.hpp"
#include "tasteprint/simulator.hpp"
#include "tasteprint/slicer.hpp"

namespace tasteprint {

// Shared pipeline steps. The CLI and the service call exactly these, so the
// same inputs give byte-identical artifacts from either entry point.

/// Slices raw mesh bytes; the stack's mesh_ref is the content hash of `bytes`.
SliceStack slice_bytes(std::span<const std::uint8_t> bytes, MeshFormat format, double layer_height,
                       Diagnostics* diag = nullptr);

struct GcodeSettings {
    double infill_density = 0.2;
    std::optional<double> infill_spacing;  // defaults to the nozzle diameter
};

/// Throws ValidationError when the design belongs to another mesh or layer count.
void check_design_matches(const TasteDesign& design, const SliceStack& stack);

std::string build_gcode(const SliceStack& stack, const TasteDesign& design, const MachineProfile& profile,
                        const CalibrationSet& cal, const GcodeSettings& settings = {});

/// Parse, synchronization check and simulation of G-code text. Sync
/// violations are appended to the result diagnostics as errors.
SimulationResult run_simulation(std::string_view gcode_text, const CalibrationSet& cal,
                                const MachineProfile& profile, const SimulationOptions& options = {});

/// Summary, conservation, and the design comparison when a design is given.
nlohmann::json simulation_report(const SimulationResult& sim, const TasteDesign* design, const CalibrationSet& cal);
bool report_all_clear(const nlohmann::json& report);

nlohmann::json map_json(const DepositionMap& map);

/// "default" or a path to a JSON document.
MachineProfile load_profile(const std::string& source);
CalibrationSet load_calibration(const std::string& source);

nlohmann::json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
/// Writes `<path>.tmp` then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Everything the service holds for one project. Immutable once published.
struct ProjectState {
    std::string mesh_path;
    std::string mesh_hash;
    std::optional<SliceStack> slices;
    std::optional<TasteDesign> design;
    CalibrationSet calibration;
    MachineProfile profile;
    std::optional<std::string> program;
    std::optional<nlohmann::json> simulation;
    std::shared_ptr<const SimulationResult> simulation_result;
};

/// Project directory with versioned design persistence. Readers get
/// immutable snapshots; writers are serialized and check the document version.
class ProjectStore {
public:
    explicit ProjectStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }
    std::shared_ptr<const ProjectState> snapshot() const;

    /// Stores the mesh, slices it and starts a fresh design whose version
    /// continues from the previous one.
    std::shared_ptr<const ProjectState> load_mesh(std::span<const std::uint8_t> bytes, MeshFormat format,
                                                  double layer_height, Diagnostics* diag = nullptr);

    using DesignEdit = std::function<TasteDesign(const TasteDesign&, const ProjectState&)>;
    /// Applies `edit` to the current design. Throws VersionConflictError when
    /// `expected_version` is given and stale, ValidationError when the result
    /// fails planner validation. The committed design gets version + 1.
    TasteDesign edit_design(std::optional<long> expected_version, const DesignEdit& edit);

    std::string generate(const GcodeSettings& settings);
    nlohmann::json simulate(const SimulationOptions& options);

    static std::filesystem::path default_dir();

private:
    void publish(std::shared_ptr<const ProjectState> next);
    void restore();

    std::filesystem::path dir_;
    mutable std::mutex read_mutex_;
    std::mutex write_mutex_;
    std::shared_ptr<const ProjectState> state_;
};

}  // namespace tasteprint
