#include "tasteprint/cli.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <sstream>

#include "tasteprint/errors.hpp"
#include "tasteprint/imaging.hpp"
#include "tasteprint/project.hpp"
#include "tasteprint/server.hpp"

namespace tasteprint {

namespace {

using nlohmann::json;

void print_diagnostics(const Diagnostics& d, std::ostream& err) {
    if (!d.empty()) err << d.to_text();
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-")
        out << text;
    else
        write_file_atomic(path, text);
}

std::string dump(const json& j) { return j.dump(1) + "\n"; }

SliceStack read_slices(const std::string& path) { return slice_stack_from_json(read_json_file(path)); }

Server* g_server = nullptr;
extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

std::string version_string() {
    return std::string("tasteprint ") + TASTEPRINT_VERSION + " (slices schema " + std::to_string(kSliceSchemaVersion) +
           ", design schema " + std::to_string(kDesignSchemaVersion) + ")";
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
        dynamic_cast<const FormatError*>(&e) || dynamic_cast<const EmptyMeshError*>(&e) ||
        dynamic_cast<const nlohmann::json::exception*>(&e) || dynamic_cast<const EmptySpotError*>(&e))
        return kExitIo;
    if (dynamic_cast<const Error*>(&e)) return kExitValidation;
    return kExitIo;
}

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Seasoning-aware slicing, spray planning and G-code toolchain", "tasteprint"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    // slice
    std::string mesh_path, mesh_format, slices_out;
    double layer_height = 1.6;
    auto* slice = app.add_subcommand("slice", "Slice a mesh into layer contours");
    slice->add_option("--mesh", mesh_path, "STL or OBJ file")->required();
    slice->add_option("--layer-height", layer_height, "Layer height in mm")->capture_default_str();
    slice->add_option("--format", mesh_format, "stl_binary, stl_ascii or obj (default: detect)");
    slice->add_option("--out", slices_out, "Output JSON (default: stdout)");

    // plan
    std::string plan_slices, plan_design_in, plan_out, plan_mode, cal_spec = "default";
    std::size_t plan_layer = 0;
    int plan_channel = 0;
    std::optional<int> plan_duration, plan_intensity;
    double plan_x = 0, plan_y = 0, plan_standoff = default_profile().default_standoff_mm, plan_overlap = 0.0;
    double plan_total = 0.0;
    bool plan_validate = false;
    auto* plan = app.add_subcommand("plan", "Add spray events to a taste design");
    plan->add_option("--slices", plan_slices, "Slice JSON")->required();
    plan->add_option("--design", plan_design_in, "Existing design JSON (default: a new empty design)");
    plan->add_option("--out", plan_out, "Output design JSON (default: stdout)");
    plan->add_option("--mode", plan_mode, "free, pattern or total")->check(CLI::IsMember({"free", "pattern", "total"}));
    plan->add_option("--layer", plan_layer, "Layer index");
    plan->add_option("--channel", plan_channel, "Airbrush channel");
    plan->add_option("--x", plan_x, "Event X in mm (free mode)");
    plan->add_option("--y", plan_y, "Event Y in mm (free mode)");
    plan->add_option("--duration", plan_duration, "Spray duration in ms");
    plan->add_option("--intensity", plan_intensity, "Intensity 1-10, mapped onto the calibrated duration range");
    plan->add_option("--standoff", plan_standoff, "Standoff in mm")->capture_default_str();
    plan->add_option("--overlap", plan_overlap, "Footprint overlap fraction (pattern mode)");
    plan->add_option("--total-mg", plan_total, "Whole-model mass in mg (total mode)");
    plan->add_option("--calibration", cal_spec, "'default' or a calibration JSON")->capture_default_str();
    plan->add_flag("--validate", plan_validate, "Only validate --design against --slices");

    // gcode
    std::string g_slices, g_design, g_out, profile_spec = "default";
    GcodeSettings g_settings;
    double g_spacing = 0.0;
    auto* gc = app.add_subcommand("gcode", "Generate G-code with interleaved spray commands");
    gc->add_option("--slices", g_slices, "Slice JSON")->required();
    gc->add_option("--design", g_design, "Design JSON")->required();
    gc->add_option("--profile", profile_spec, "'default' or a machine profile JSON")->capture_default_str();
    gc->add_option("--calibration", cal_spec, "'default' or a calibration JSON")->capture_default_str();
    gc->add_option("--out", g_out, "Output G-code (default: stdout)");
    gc->add_option("--infill-density", g_settings.infill_density, "Infill density 0-1")->capture_default_str();
    auto* spacing_opt = gc->add_option("--infill-spacing", g_spacing, "Infill line spacing in mm (default: nozzle)");

    // simulate
    std::string s_gcode, s_design, s_report, s_maps;
    SimulationOptions s_opt;
    auto* sim = app.add_subcommand("simulate", "Run G-code on the virtual printer");
    sim->add_option("--gcode", s_gcode, "G-code file")->required();
    sim->add_option("--design", s_design, "Design JSON to compare against");
    sim->add_option("--profile", profile_spec, "'default' or a machine profile JSON")->capture_default_str();
    sim->add_option("--calibration", cal_spec, "'default' or a calibration JSON")->capture_default_str();
    sim->add_option("--spread-factor", s_opt.spread_factor, "Static footprint inflation")->capture_default_str();
    sim->add_option("--cell-size", s_opt.cell_size, "Map cell size in mm")->capture_default_str();
    sim->add_option("--report", s_report, "Write the JSON report here");
    sim->add_option("--maps", s_maps, "Directory for PGM maps, masses.csv and maps.json");

    // calibrate fit / measure
    auto* calibrate = app.add_subcommand("calibrate", "Fit calibration models or measure spray spots");
    calibrate->require_subcommand(1);
    std::string f_samples, f_model, f_out, f_write_cal;
    auto* fit = calibrate->add_subcommand("fit", "Least-squares fit of the footprint or dose model");
    fit->add_option("--samples", f_samples, "Sample CSV")->required();
    fit->add_option("--model", f_model, "resolution or amount")->required()->check(CLI::IsMember({"resolution", "amount"}));
    fit->add_option("--out", f_out, "Write the fit report JSON here");
    fit->add_option("--calibration", cal_spec, "Base calibration for --write-calibration")->capture_default_str();
    fit->add_option("--write-calibration", f_write_cal, "Write the base calibration with the fit applied");

    std::string m_image, m_markers, m_channel = "red";
    std::vector<double> m_center;
    SpotOptions m_opt;
    bool m_lighter = false;
    auto* measure = calibrate->add_subcommand("measure", "Equivalent diameter of a spray spot in a photograph");
    measure->add_option("--image", m_image, "Binary PPM/PGM photograph")->required();
    measure->add_option("--markers", m_markers, "Marker correspondences JSON")->required();
    measure->add_option("--center", m_center, "ROI centre in mm: X Y")->required()->expected(2)->delimiter(',');
    measure->add_option("--roi", m_opt.roi_size_mm, "ROI edge in mm")->capture_default_str();
    measure->add_option("--px-per-mm", m_opt.px_per_mm, "Rectified resolution")->capture_default_str();
    measure->add_option("--channel", m_channel, "red, green or blue")->check(CLI::IsMember({"red", "green", "blue"}));
    measure->add_flag("--lighter", m_lighter, "Spot is lighter than the background");

    // serve
    int port = 8080;
    std::string host = "127.0.0.1", project_dir;
    auto* serve = app.add_subcommand("serve", "Run the local HTTP service");
    serve->add_option("--port", port, "TCP port")->capture_default_str();
    serve->add_option("--host", host, "Bind address")->capture_default_str();
    serve->add_option("--project-dir", project_dir, "Project directory (default: $TASTEPRINT_PROJECT_DIR)");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitIo;
    }

    try {
        if (*slice) {
            const auto bytes = read_file_bytes(mesh_path);
            const MeshFormat fmt = mesh_format.empty() ? detect_format(mesh_path, bytes) : parse_format_name(mesh_format);
            Diagnostics diag;
            const SliceStack stack = slice_bytes(bytes, fmt, layer_height, &diag);
            print_diagnostics(diag, err);
            emit(slices_out, render_slices(stack), out);
            if (!slices_out.empty()) {
                double area = 0.0;
                for (const auto& l : stack.layers) area += l.area * l.thickness();
                out << stack.layers.size() << " layers, mesh " << stack.mesh_ref << ", volume "
                    << format_number(area) << " mm^3\n";
            }
            return kExitOk;
        }

        if (*plan) {
            const SliceStack stack = read_slices(plan_slices);
            const CalibrationSet cal = load_calibration(cal_spec);
            TasteDesign design =
                plan_design_in.empty() ? new_design(stack, cal) : design_from_json(read_json_file(plan_design_in));
            check_design_matches(design, stack);
            Diagnostics diag;
            auto duration = [&]() {
                if (plan_duration) return *plan_duration;
                if (plan_intensity) return intensity_to_duration(*plan_intensity, cal);
                throw ValidationError("--duration or --intensity is required");
            };
            if (!plan_validate) {
                if (plan_mode == "free") {
                    SprayEvent e;
                    e.channel = plan_channel;
                    e.position = {plan_x, plan_y};
                    e.duration_ms = duration();
                    e.standoff_mm = plan_standoff;
                    design = add_free_event(design, plan_layer, e, stack.layers, cal, &diag);
                } else if (plan_mode == "pattern") {
                    design = fill_pattern(design, plan_layer, plan_channel, duration(), plan_standoff, plan_overlap,
                                          stack.layers, cal, &diag);
                } else if (plan_mode == "total") {
                    auto r = allocate_total_amount(design, plan_channel, plan_total, plan_standoff, stack.layers, cal,
                                                   &diag);
                    design = std::move(r.design);
                    err << dump(to_json(r.report));
                } else {
                    throw ValidationError("--mode is required unless --validate is given");
                }
            }
            const DesignReport report = validate_design(design, stack.layers, cal);
            diag.append(report.diagnostics);
            print_diagnostics(diag, err);
            if (plan_validate) {
                out << dump(to_json(report));
                return report.ok() ? kExitOk : kExitValidation;
            }
            if (!report.ok()) return kExitValidation;
            emit(plan_out, dump(to_json(design)), out);
            if (!plan_out.empty()) out << design.event_count() << " events over " << design.layers.size() << " layers\n";
            return kExitOk;
        }

        if (*gc) {
            const SliceStack stack = read_slices(g_slices);
            const TasteDesign design = design_from_json(read_json_file(g_design));
            if (*spacing_opt) g_settings.infill_spacing = g_spacing;
            const std::string text =
                build_gcode(stack, design, load_profile(profile_spec), load_calibration(cal_spec), g_settings);
            emit(g_out, text, out);
            if (!g_out.empty())
                out << std::count(text.begin(), text.end(), '\n') << " lines, " << design.event_count()
                    << " sprays\n";
            return kExitOk;
        }

        if (*sim) {
            const CalibrationSet cal = load_calibration(cal_spec);
            const SimulationResult result =
                run_simulation(read_text_file(s_gcode), cal, load_profile(profile_spec), s_opt);
            std::optional<TasteDesign> design;
            if (!s_design.empty()) design = design_from_json(read_json_file(s_design));
            const json report = simulation_report(result, design ? &*design : nullptr, cal);
            print_diagnostics(result.diagnostics, err);
            if (!s_report.empty()) write_file_atomic(s_report, dump(report));
            if (!s_maps.empty()) export_maps(result, s_maps);
            out << render_mass_csv(result);
            out << result.state.spray_log.size() << " sprays, " << result.maps.size() << " layers, max relative error "
                << format_number(report.at("max_relative_error").get<double>()) << ", elapsed "
                << format_number(result.state.elapsed_s) << " s\n";
            const bool clear = report_all_clear(report);
            out << "conservation report: " << (clear ? "all-clear" : "FLAGGED") << "\n";
            return clear ? kExitOk : kExitValidation;
        }

        if (*fit) {
            const auto samples = parse_samples_csv(read_text_file(f_samples));
            const FitReport r = f_model == "resolution" ? fit_resolution_model(samples) : fit_amount_model(samples);
            const std::string text = dump(to_json(r));
            out << text;
            if (!f_out.empty()) write_file_atomic(f_out, text);
            if (!f_write_cal.empty()) write_file_atomic(f_write_cal, dump(to_json(apply_fit(load_calibration(cal_spec), r))));
            out << "R^2 = " << format_number(r.r2) << "\n";
            return kExitOk;
        }

        if (*measure) {
            m_opt.foreground_darker = !m_lighter;
            m_opt.channel = m_channel == "green" ? Channel::Green : m_channel == "blue" ? Channel::Blue : Channel::Red;
            const RasterImage image = read_pnm(m_image);
            const auto markers = markers_from_json(read_json_file(m_markers));
            Diagnostics diag;
            const SpotMeasurement m = measure_spot(image, markers, {m_center[0], m_center[1]}, m_opt, &diag);
            print_diagnostics(diag, err);
            out << dump({{"equivalent_diameter_mm", m.equivalent_diameter_mm},
                         {"area_mm2", m.area_mm2},
                         {"centroid", {m.centroid.x, m.centroid.y}},
                         {"threshold", m.threshold},
                         {"pixel_count", m.pixel_count}});
            return kExitOk;
        }

        if (*serve) {
            ProjectStore store(project_dir.empty() ? ProjectStore::default_dir() : std::filesystem::path(project_dir));
            Server server(store);
            const int bound = server.bind(host, port);
            out << "serving " << store.dir().string() << " on http://" << host << ":" << bound << std::endl;
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            server.listen();
            g_server = nullptr;
            return kExitOk;
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        print_diagnostics(e.diagnostics(), err);
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return kExitIo;
}

int cli_dispatch(int argc, const char* const* argv) {
    return cli_dispatch(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace tasteprint
