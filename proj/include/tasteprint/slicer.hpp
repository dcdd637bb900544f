#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tasteprint/geometry.hpp"
#include "tasteprint/mesh.hpp"

namespace tasteprint {

/// Endpoints closer than this are treated as the same stitching node.
inline constexpr double kStitchTolerance = 1e-6;
/// Distance within which a point counts as lying on a layer boundary.
inline constexpr double kBoundaryTolerance = 1e-6;

struct LayerSlice {
    std::size_t index = 0;
    double z_bottom = 0.0;
    double z_top = 0.0;
    std::vector<Contour> contours;
    double area = 0.0;

    double thickness() const { return z_top - z_bottom; }
    bool operator==(const LayerSlice&) const = default;
};

/// A sliced model: the unit shared by the planner, G-code writer, CLI and service.
struct SliceStack {
    std::string mesh_ref;
    double layer_height = 0.0;
    std::vector<LayerSlice> layers;

    bool operator==(const SliceStack&) const = default;
};

/// Cuts the mesh with the horizontal plane z and returns oriented contours
/// (outer rings CCW, holes CW). Throws OpenContourError tagged with `layer`
/// when segments cannot be stitched into closed rings.
std::vector<Contour> slice_at(const TriangleMesh& mesh, double z, std::size_t layer = 0);

/// Layers of `layer_height` from the bottom of the mesh; each layer is sampled
/// at its mid-plane. The final layer may be thinner.
std::vector<LayerSlice> slice_mesh(const TriangleMesh& mesh, double layer_height);

/// Inside an outer ring and outside every hole; the boundary counts as inside.
bool point_in_layer(const LayerSlice& slice, const Vec2& p);

using Polyline = std::vector<Vec2>;

struct ExtrusionPath {
    std::size_t layer_index = 0;
    /// Perimeter loops (closed) first, then infill lines.
    std::vector<Polyline> segments;
    double total_length = 0.0;
};

double polyline_length(std::span<const Vec2> line);

/// Perimeters plus rectilinear infill at `infill_spacing / infill_density`,
/// vertical lines on even layers and horizontal lines on odd ones.
ExtrusionPath generate_extrusion_paths(const LayerSlice& slice, double infill_density, double infill_spacing);

nlohmann::json to_json(const SliceStack& stack);
SliceStack slice_stack_from_json(const nlohmann::json& j);

/// Canonical serialized form; CLI and service both emit exactly this text.
std::string render_slices(const SliceStack& stack);

inline constexpr int kSliceSchemaVersion = 1;

}  // namespace tasteprint
