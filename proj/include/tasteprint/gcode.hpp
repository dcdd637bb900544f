#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tasteprint/calibration.hpp"
#include "tasteprint/diagnostics.hpp"
#include "tasteprint/machine_profile.hpp"
#include "tasteprint/planner.hpp"
#include "tasteprint/slicer.hpp"

namespace tasteprint {

// Spray dialect: `M810 C<channel> D<duration_ms>` opens one airbrush for the
// given time. Every activation is followed by `G4 P<duration_ms>` so the
// head holds position while the valve is open.

namespace gcode {

/// G0 (rapid) or G1 move; absent axes keep their modal value.
struct Move {
    bool rapid = false;
    std::optional<double> x, y, z, e, f;
    bool operator==(const Move&) const = default;
};
struct Dwell {
    int ms = 0;
    bool operator==(const Dwell&) const = default;
};
struct Spray {
    int channel = 0;
    int duration_ms = 0;
    bool operator==(const Spray&) const = default;
};
struct Home {
    bool operator==(const Home&) const = default;
};
/// Modal machine settings carried through verbatim: G21, G90, M82, M84.
struct Setting {
    std::string code;
    bool operator==(const Setting&) const = default;
};
struct Comment {
    std::string text;  // without the leading ';'
    bool operator==(const Comment&) const = default;
};
/// A line the parser did not recognise, kept verbatim.
struct Opaque {
    std::string text;
    bool operator==(const Opaque&) const = default;
};

}  // namespace gcode

using GcodeCommand =
    std::variant<gcode::Move, gcode::Dwell, gcode::Spray, gcode::Home, gcode::Setting, gcode::Comment, gcode::Opaque>;

struct GcodeProgram {
    std::vector<GcodeCommand> commands;
    /// 1-based source line per command; empty for generated programs.
    std::vector<std::size_t> source_lines;
    Diagnostics warnings;

    std::size_t line_of(std::size_t index) const {
        return index < source_lines.size() ? source_lines[index] : index + 1;
    }
};

/// One `;LAYER:<k>` block, covering commands [begin, end).
struct LayerBlock {
    long layer = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
    /// Z of the first extruding move, else of the first Z move in the block.
    std::optional<double> layer_top;
};

std::vector<LayerBlock> layer_blocks(const GcodeProgram& program);

/// Whether `m` advances E beyond `current_e`.
inline bool is_extruding(const gcode::Move& m, double current_e) { return m.e && *m.e > current_e; }

/// Extrusion paths then sprays, per layer. Validates the design first and
/// throws ValidationError on planner errors, OutOfRangeError when a spray
/// height leaves the build volume.
GcodeProgram generate_gcode(std::span<const LayerSlice> slices, std::span<const ExtrusionPath> paths,
                            const TasteDesign& design, const MachineProfile& profile, const CalibrationSet& cal);

/// Convenience: paths from slices at the given infill settings.
std::vector<ExtrusionPath> plan_paths(std::span<const LayerSlice> slices, double infill_density, double infill_spacing);

/// Deterministic text: 3 decimals for X/Y/Z, 6 for E, integer F/P/C/D, LF endings.
std::string render_gcode(const GcodeProgram& program);
std::string render_command(const GcodeCommand& cmd);

/// Tolerant line parser. Unknown commands are kept as Opaque with a warning;
/// malformed parameters throw ParseError with the line number.
GcodeProgram parse_gcode(std::string_view text);

/// Semantic checks the parser does not make: channel range, durations,
/// monotone E inside layer blocks.
Diagnostics validate_program(const GcodeProgram& program, const MachineProfile& profile);

/// Recovers per-layer spray events (surface position = head position plus
/// the channel's airbrush offset). Throws OrphanSprayError for a spray
/// without its own positioning move.
std::vector<std::vector<SprayEvent>> extract_spray_plan(const GcodeProgram& program, const MachineProfile& profile);

/// Sum over moves of segment length * layer thickness * nozzle * flow, as emitted.
double expected_total_e(std::span<const LayerSlice> slices, std::span<const ExtrusionPath> paths,
                        const MachineProfile& profile);

}  // namespace tasteprint
