#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tasteprint/diagnostics.hpp"
#include "tasteprint/geometry.hpp"

namespace tasteprint {

enum class MeshFormat { StlBinary, StlAscii, Obj };

using Triangle = std::array<Vec3, 3>;

/// Triangle soup in millimetres.
class TriangleMesh {
public:
    TriangleMesh() = default;
    /// Drops zero-area triangles (with a warning) and rejects non-finite vertices.
    explicit TriangleMesh(std::vector<Triangle> triangles, Diagnostics* diag = nullptr);

    const std::vector<Triangle>& triangles() const { return triangles_; }
    std::size_t triangle_count() const { return triangles_.size(); }
    std::size_t vertex_count() const;
    const Box3& bounding_box() const { return bbox_; }
    bool empty() const { return triangles_.empty(); }

    /// Signed volume by the divergence theorem; positive for outward winding.
    double volume() const;

private:
    std::vector<Triangle> triangles_;
    Box3 bbox_;
};

/// Parses mesh bytes. Throws ParseError (byte offset for binary STL, line
/// number for text formats) and EmptyMeshError.
TriangleMesh parse_mesh(std::span<const std::uint8_t> bytes, MeshFormat format, Diagnostics* diag = nullptr);

TriangleMesh load_mesh(const std::filesystem::path& path, MeshFormat format, Diagnostics* diag = nullptr);

/// Guesses the format from the extension, then from content for ".stl".
MeshFormat detect_format(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
MeshFormat parse_format_name(std::string_view name);

std::vector<std::uint8_t> to_binary_stl(const TriangleMesh& mesh);
std::string to_ascii_stl(const TriangleMesh& mesh, std::string_view name = "tasteprint");

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

// Closed primitives with outward (CCW from outside) winding, used as fixtures
// and for command-line demos.
TriangleMesh make_box(const Vec3& min, const Vec3& max);
TriangleMesh make_uv_sphere(const Vec3& center, double radius, int slices, int stacks);
/// Torus around the Z axis.
TriangleMesh make_torus(const Vec3& center, double major_radius, double minor_radius, int major_segments,
                        int minor_segments);
/// Vertical prism over a convex CCW polygon.
TriangleMesh make_prism(std::span<const Vec2> polygon, double z0, double z1);
/// Vertical tube (annular prism) around `center`.
TriangleMesh make_tube(const Vec2& center, double outer_radius, double inner_radius, double z0, double z1,
                       int segments);
/// Concatenates the triangles of several meshes.
TriangleMesh merge(std::span<const TriangleMesh> meshes);

}  // namespace tasteprint
