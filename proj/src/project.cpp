#include "tasteprint/project.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tasteprint/errors.hpp"
#include "tasteprint/hash.hpp"

namespace tasteprint {

namespace fs = std::filesystem;

SliceStack slice_bytes(std::span<const std::uint8_t> bytes, MeshFormat format, double layer_height,
                       Diagnostics* diag) {
    if (!(layer_height > 0.0) || !std::isfinite(layer_height)) throw DomainError("layer height must be positive");
    const TriangleMesh mesh = parse_mesh(bytes, format, diag);
    SliceStack stack;
    stack.mesh_ref = content_hash(bytes);
    stack.layer_height = layer_height;
    stack.layers = slice_mesh(mesh, layer_height);
    return stack;
}

void check_design_matches(const TasteDesign& design, const SliceStack& stack) {
    if (design.mesh_ref != stack.mesh_ref)
        throw ValidationError("design belongs to mesh " + design.mesh_ref + ", loaded mesh is " + stack.mesh_ref);
    if (design.layers.size() != stack.layers.size())
        throw ValidationError("design has " + std::to_string(design.layers.size()) + " layers, slices have " +
                              std::to_string(stack.layers.size()));
}

std::string build_gcode(const SliceStack& stack, const TasteDesign& design, const MachineProfile& profile,
                        const CalibrationSet& cal, const GcodeSettings& settings) {
    check_design_matches(design, stack);
    const double spacing = settings.infill_spacing.value_or(profile.nozzle_diameter_mm);
    const auto paths = plan_paths(stack.layers, settings.infill_density, spacing);
    return render_gcode(generate_gcode(stack.layers, paths, design, profile, cal));
}

SimulationResult run_simulation(std::string_view gcode_text, const CalibrationSet& cal,
                                const MachineProfile& profile, const SimulationOptions& options) {
    const GcodeProgram program = parse_gcode(gcode_text);
    const Diagnostics semantic = validate_program(program, profile);
    if (semantic.has_errors()) throw ValidationError("program failed validation", semantic);
    Diagnostics sync = check_synchronization(program);
    SimulationResult sim = simulate(program, cal, profile, options);
    Diagnostics all = program.warnings;
    all.append(semantic);
    all.append(sync);
    all.append(sim.diagnostics);
    sim.diagnostics = std::move(all);
    return sim;
}

nlohmann::json simulation_report(const SimulationResult& sim, const TasteDesign* design, const CalibrationSet& cal) {
    nlohmann::json report = summary_json(sim);
    bool clear = report.at("max_relative_error").get<double>() <= 1e-9 && !sim.diagnostics.has_errors();
    if (design) {
        const ComparisonReport cmp = compare_to_design(sim, *design, cal);
        report["comparison"] = to_json(cmp);
        clear = clear && cmp.all_clear();
    }
    report["all_clear"] = clear;
    return report;
}

bool report_all_clear(const nlohmann::json& report) { return report.value("all_clear", false); }

nlohmann::json map_json(const DepositionMap& map) {
    nlohmann::json channels = nlohmann::json::array();
    for (int c = 0; c < map.channels; ++c) {
        nlohmann::json rows = nlohmann::json::array();
        for (int j = 0; j < map.ny; ++j) {
            nlohmann::json row = nlohmann::json::array();
            for (int i = 0; i < map.nx; ++i) row.push_back(map.at(c, i, j));
            rows.push_back(std::move(row));
        }
        channels.push_back({{"channel", c}, {"integrated_mg", map.integrated_mass(c)}, {"density", rows}});
    }
    return {{"layer", map.layer_index},
            {"cell_size", map.cell_size},
            {"origin", {map.origin.x, map.origin.y}},
            {"nx", map.nx},
            {"ny", map.ny},
            {"row_order", "y_ascending"},
            {"density_unit", "mg/mm^2"},
            {"channels", channels}};
}

MachineProfile load_profile(const std::string& source) {
    if (source.empty() || source == "default") return default_profile();
    return machine_profile_from_json(read_json_file(source));
}

CalibrationSet load_calibration(const std::string& source) {
    if (source.empty() || source == "default") return default_calibration();
    return calibration_from_json(read_json_file(source));
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json_file(const fs::path& path) {
    const std::string text = read_text_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot replace '" + path.string() + "': " + ec.message());
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kProjectFile = "project.json";
constexpr const char* kMeshFile = "mesh.bin";
constexpr const char* kSlicesFile = "slices.json";
constexpr const char* kDesignFile = "design.json";
constexpr const char* kCalibrationFile = "calibration.json";
constexpr const char* kProfileFile = "profile.json";
constexpr const char* kProgramFile = "program.gcode";
constexpr const char* kSimulationFile = "simulation.json";

std::string dump(const nlohmann::json& j) { return j.dump(1) + "\n"; }

}  // namespace

ProjectStore::ProjectStore(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw IoError("cannot use project directory '" + dir_.string() + "'");
    restore();
}

fs::path ProjectStore::default_dir() {
    if (const char* env = std::getenv("TASTEPRINT_PROJECT_DIR"); env && *env) return env;
    return "tasteprint-project";
}

void ProjectStore::restore() {
    auto st = std::make_shared<ProjectState>();
    st->calibration = fs::exists(dir_ / kCalibrationFile) ? calibration_from_json(read_json_file(dir_ / kCalibrationFile))
                                                          : default_calibration();
    st->profile = fs::exists(dir_ / kProfileFile) ? machine_profile_from_json(read_json_file(dir_ / kProfileFile))
                                                  : default_profile();
    if (fs::exists(dir_ / kProjectFile)) {
        const auto meta = read_json_file(dir_ / kProjectFile);
        st->mesh_path = (dir_ / kMeshFile).string();
        st->mesh_hash = meta.value("mesh_hash", "");
    }
    if (fs::exists(dir_ / kSlicesFile)) st->slices = slice_stack_from_json(read_json_file(dir_ / kSlicesFile));
    if (fs::exists(dir_ / kDesignFile)) {
        TasteDesign d = design_from_json(read_json_file(dir_ / kDesignFile));
        // A design left over from another mesh is stale; keep its version only.
        if (st->slices && (d.mesh_ref != st->slices->mesh_ref || d.layers.size() != st->slices->layers.size())) {
            const long version = d.version;
            d = new_design(*st->slices, st->calibration);
            d.version = version + 1;
        }
        if (st->slices) st->design = std::move(d);
    } else if (st->slices) {
        st->design = new_design(*st->slices, st->calibration);
    }
    if (fs::exists(dir_ / kProgramFile)) st->program = read_text_file(dir_ / kProgramFile);
    if (fs::exists(dir_ / kSimulationFile)) st->simulation = read_json_file(dir_ / kSimulationFile);
    state_ = std::move(st);
}

std::shared_ptr<const ProjectState> ProjectStore::snapshot() const {
    std::lock_guard lock(read_mutex_);
    return state_;
}

void ProjectStore::publish(std::shared_ptr<const ProjectState> next) {
    std::lock_guard lock(read_mutex_);
    state_ = std::move(next);
}

std::shared_ptr<const ProjectState> ProjectStore::load_mesh(std::span<const std::uint8_t> bytes, MeshFormat format,
                                                            double layer_height, Diagnostics* diag) {
    std::lock_guard lock(write_mutex_);
    SliceStack stack = slice_bytes(bytes, format, layer_height, diag);
    const auto cur = snapshot();
    auto next = std::make_shared<ProjectState>();
    next->calibration = cur->calibration;
    next->profile = cur->profile;
    next->mesh_path = (dir_ / kMeshFile).string();
    next->mesh_hash = stack.mesh_ref;
    TasteDesign design = new_design(stack, cur->calibration);
    design.version = cur->design ? cur->design->version + 1 : 1;

    const std::string mesh_text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    write_file_atomic(dir_ / kMeshFile, mesh_text);
    write_file_atomic(dir_ / kSlicesFile, render_slices(stack));
    write_file_atomic(dir_ / kDesignFile, dump(to_json(design)));
    write_file_atomic(dir_ / kProjectFile,
                      dump({{"mesh_hash", stack.mesh_ref}, {"mesh_file", kMeshFile}, {"layer_height", layer_height}}));
    std::error_code ec;
    fs::remove(dir_ / kProgramFile, ec);
    fs::remove(dir_ / kSimulationFile, ec);

    next->slices = std::move(stack);
    next->design = std::move(design);
    publish(next);
    return next;
}

TasteDesign ProjectStore::edit_design(std::optional<long> expected_version, const DesignEdit& edit) {
    std::lock_guard lock(write_mutex_);
    const auto cur = snapshot();
    if (!cur->slices || !cur->design) throw ValidationError("no mesh loaded");
    if (expected_version && *expected_version != cur->design->version)
        throw VersionConflictError("design version " + std::to_string(*expected_version) + " is stale, current is " +
                                       std::to_string(cur->design->version),
                                   cur->design->version);
    TasteDesign next_design = edit(*cur->design, *cur);
    check_design_matches(next_design, *cur->slices);
    DesignReport report = validate_design(next_design, cur->slices->layers, cur->calibration);
    if (!report.ok()) throw ValidationError("design failed validation", report.diagnostics);
    next_design.version = cur->design->version + 1;

    write_file_atomic(dir_ / kDesignFile, dump(to_json(next_design)));
    auto next = std::make_shared<ProjectState>(*cur);
    next->design = next_design;
    publish(next);
    return next_design;
}

std::string ProjectStore::generate(const GcodeSettings& settings) {
    std::lock_guard lock(write_mutex_);
    const auto cur = snapshot();
    if (!cur->slices || !cur->design) throw ValidationError("no mesh loaded");
    std::string text = build_gcode(*cur->slices, *cur->design, cur->profile, cur->calibration, settings);
    write_file_atomic(dir_ / kProgramFile, text);
    std::error_code ec;
    fs::remove(dir_ / kSimulationFile, ec);
    auto next = std::make_shared<ProjectState>(*cur);
    next->program = text;
    next->simulation.reset();
    next->simulation_result.reset();
    publish(next);
    return text;
}

nlohmann::json ProjectStore::simulate(const SimulationOptions& options) {
    std::lock_guard lock(write_mutex_);
    const auto cur = snapshot();
    if (!cur->program) throw ValidationError("no G-code generated");
    auto sim = std::make_shared<SimulationResult>(run_simulation(*cur->program, cur->calibration, cur->profile, options));
    nlohmann::json report = simulation_report(*sim, cur->design ? &*cur->design : nullptr, cur->calibration);
    write_file_atomic(dir_ / kSimulationFile, dump(report));
    auto next = std::make_shared<ProjectState>(*cur);
    next->simulation = report;
    next->simulation_result = std::move(sim);
    publish(next);
    return report;
}

}  // namespace tasteprint
