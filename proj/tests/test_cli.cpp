#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "support.hpp"
#include "tasteprint/cli.hpp"
#include "tasteprint/simulator.hpp"

using namespace tasteprint;
using namespace fixtures;

namespace {

struct Run {
    int code = -1;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "tasteprint");
    std::ostringstream out, err;
    Run r;
    r.code = cli_dispatch(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& b) {
    std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}
void write_text(const std::filesystem::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

std::string s(const std::filesystem::path& p) { return p.string(); }

}  // namespace

TEST_CASE("version and usage") {
    const Run v = run({"--version"});
    CHECK(v.code == 0);
    CHECK(v.out.find(version_string()) != std::string::npos);
    CHECK(run({}).code == 2);
    CHECK(run({"slice"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
}

TEST_CASE("full pipeline through the command line") {
    TempDir dir("cli");
    const auto stl = to_binary_stl(make_box({40, 40, 0}, {70, 70, 32}));
    write_bytes(dir / "block.stl", stl);

    const Run sl = run({"slice", "--mesh", s(dir / "block.stl"), "--layer-height", "1.6"});
    REQUIRE(sl.code == 0);
    // Byte-identical to the library rendering.
    CHECK(sl.out == render_slices(block_stack()));
    REQUIRE(run({"slice", "--mesh", s(dir / "block.stl"), "--out", s(dir / "slices.json")}).code == 0);
    CHECK(read_text_file(dir / "slices.json") == sl.out);

    Run p = run({"plan", "--slices", s(dir / "slices.json"), "--mode", "free", "--layer", "3", "--channel", "1", "--x",
                 "50", "--y", "55", "--duration", "20", "--out", s(dir / "design.json")});
    REQUIRE(p.code == 0);
    p = run({"plan", "--slices", s(dir / "slices.json"), "--design", s(dir / "design.json"), "--mode", "pattern",
             "--layer", "7", "--channel", "0", "--intensity", "5", "--overlap", "0.1", "--out", s(dir / "design.json")});
    REQUIRE(p.code == 0);
    p = run({"plan", "--slices", s(dir / "slices.json"), "--design", s(dir / "design.json"), "--mode", "total",
             "--channel", "2", "--total-mg", "20", "--out", s(dir / "design.json")});
    REQUIRE(p.code == 0);
    CHECK(p.err.find("\"achieved_mg\"") != std::string::npos);
    const TasteDesign design = design_from_json(read_json_file(dir / "design.json"));
    std::vector<SprayEvent> free_events;
    for (const auto& e : design.layers[3].events)
        if (e.channel == 1) free_events.push_back(e);
    REQUIRE(free_events.size() == 1);
    CHECK(free_events[0].duration_ms == 20);
    CHECK(design.layers[7].events.size() > 10);

    const Run val = run({"plan", "--slices", s(dir / "slices.json"), "--design", s(dir / "design.json"), "--validate"});
    CHECK(val.code == 0);

    const Run g = run({"gcode", "--slices", s(dir / "slices.json"), "--design", s(dir / "design.json")});
    REQUIRE(g.code == 0);
    CHECK(g.out == build_gcode(block_stack(), design, default_profile(), default_calibration(), {}));
    write_text(dir / "program.gcode", g.out);

    const Run sim = run({"simulate", "--gcode", s(dir / "program.gcode"), "--design", s(dir / "design.json"), "--report",
                         s(dir / "report.json"), "--maps", s(dir / "maps")});
    CHECK(sim.code == 0);
    CHECK(sim.out.rfind("layer,channel,expected_mg,integrated_mg,relative_error\n", 0) == 0);
    CHECK(sim.out.find("conservation report: all-clear") != std::string::npos);
    CHECK(read_json_file(dir / "report.json").at("all_clear").get<bool>());
    CHECK(std::filesystem::exists(dir / "maps" / "layer3_ch1.pgm"));

    // A design that no longer matches the program is flagged.
    TasteDesign edited = design;
    for (auto& e : edited.layers[3].events)
        if (e.channel == 1) e.position.x += 2.0;
    write_text(dir / "edited.json", to_json(edited).dump());
    const Run flagged = run({"simulate", "--gcode", s(dir / "program.gcode"), "--design", s(dir / "edited.json")});
    CHECK(flagged.code == 1);
    CHECK(flagged.out.find("conservation report: FLAGGED") != std::string::npos);
}

TEST_CASE("exit codes for bad input") {
    TempDir dir("cli");
    write_bytes(dir / "cube.stl", cube_stl());
    REQUIRE(run({"slice", "--mesh", s(dir / "cube.stl"), "--out", s(dir / "slices.json")}).code == 0);

    // Missing files and malformed data are I/O class.
    CHECK(run({"slice", "--mesh", s(dir / "missing.stl")}).code == 2);
    write_text(dir / "junk.stl", "solid x\nfacet normal 0 0 1\nouter loop\nvertex 1 2\n");
    CHECK(run({"slice", "--mesh", s(dir / "junk.stl"), "--format", "stl_ascii"}).code == 2);
    write_text(dir / "bad.json", "{ nope");
    CHECK(run({"gcode", "--slices", s(dir / "bad.json"), "--design", s(dir / "bad.json")}).code == 2);
    write_text(dir / "bad.gcode", "G1 X1.2.3\n");
    CHECK(run({"simulate", "--gcode", s(dir / "bad.gcode")}).code == 2);

    // Planner refusals are validation class.
    const Run outside = run({"plan", "--slices", s(dir / "slices.json"), "--mode", "free", "--layer", "2", "--x", "50",
                             "--y", "50", "--duration", "20"});
    CHECK(outside.code == 1);
    CHECK(outside.err.find("error:") != std::string::npos);
    CHECK(run({"plan", "--slices", s(dir / "slices.json"), "--mode", "free", "--layer", "2", "--x", "5", "--y", "5"})
              .code == 1);
    CHECK(run({"slice", "--mesh", s(dir / "cube.stl"), "--layer-height", "-1"}).code == 1);
    write_text(dir / "orphan.gcode", "G28\n;LAYER:0\nG0 Z1.6\nG0 X0 Y0\nG1 X5 E1\nM810 C0 D10\nG4 P10\n;END\n");
    CHECK(run({"simulate", "--gcode", s(dir / "orphan.gcode")}).code == 1);
}

TEST_CASE("calibrate fit matches the library") {
    TempDir dir("cli");
    std::mt19937_64 rng(kSeed);
    const auto samples = amount_design(default_calibration(), 0.1, &rng);
    write_text(dir / "samples.csv", render_samples_csv(samples));
    const Run r = run({"calibrate", "fit", "--samples", s(dir / "samples.csv"), "--model", "amount", "--write-calibration",
                       s(dir / "cal.json")});
    REQUIRE(r.code == 0);
    const FitReport lib = fit_amount_model(samples);
    CHECK(r.out.rfind(to_json(lib).dump(1) + "\n", 0) == 0);
    CHECK(r.out.find("R^2 = " + format_number(lib.r2)) != std::string::npos);
    const CalibrationSet cal = load_calibration(s(dir / "cal.json"));
    CHECK(cal.alpha1 == doctest::Approx(lib.coefficients[1]));
    CHECK(run({"calibrate", "fit", "--samples", s(dir / "samples.csv"), "--model", "bogus"}).code == 2);
}

TEST_CASE("calibrate measure on a synthetic photograph") {
    TempDir dir("cli");
    const Homography cam = oblique_camera();
    const Vec2 c{30.0, 25.0};
    const auto bytes = encode_ppm(synth_photo(cam, c, 7.0, 720, 640));
    write_bytes(dir / "spot.ppm", bytes);
    write_text(dir / "markers.json", to_json(std::span<const MarkerCorrespondence>(markers_for(cam, c))).dump());
    const Run r = run({"calibrate", "measure", "--image", s(dir / "spot.ppm"), "--markers", s(dir / "markers.json"),
                       "--center", "30,25", "--roi", "16"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("equivalent_diameter_mm").get<double>() == doctest::Approx(7.0).epsilon(0.01));
    CHECK(j.at("centroid")[0].get<double>() == doctest::Approx(30.0).epsilon(1e-3));

    // Wrong centre: nothing dark inside the ROI.
    const Run miss = run({"calibrate", "measure", "--image", s(dir / "spot.ppm"), "--markers", s(dir / "markers.json"),
                          "--center", "45,40", "--roi", "8"});
    CHECK(miss.code == 2);
}
