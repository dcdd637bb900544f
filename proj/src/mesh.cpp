#include "tasteprint/mesh.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "tasteprint/errors.hpp"

namespace tasteprint {

namespace {

constexpr std::size_t kStlHeaderSize = 80;
constexpr std::size_t kStlRecordSize = 50;

bool finite(const Vec3& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

double twice_area(const Triangle& t) { return norm(cross(t[1] - t[0], t[2] - t[0])); }

std::uint32_t read_u32_le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float read_f32_le(const std::uint8_t* p) {
    const std::uint32_t bits = read_u32_le(p);
    return std::bit_cast<float>(bits);
}

void write_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xffu));
}

void write_f32_le(std::vector<std::uint8_t>& out, float f) { write_u32_le(out, std::bit_cast<std::uint32_t>(f)); }

TriangleMesh parse_binary_stl(std::span<const std::uint8_t> bytes, Diagnostics* diag) {
    if (bytes.size() < kStlHeaderSize + 4)
        throw ParseError("binary STL shorter than its 84-byte header", bytes.size(), ParseError::Unit::Byte);
    const std::uint32_t count = read_u32_le(bytes.data() + kStlHeaderSize);
    const std::size_t expected = kStlHeaderSize + 4 + std::size_t{count} * kStlRecordSize;
    if (bytes.size() < expected) {
        const std::size_t whole = (bytes.size() - kStlHeaderSize - 4) / kStlRecordSize;
        throw ParseError("binary STL truncated: header declares " + std::to_string(count) + " triangles",
                         kStlHeaderSize + 4 + whole * kStlRecordSize, ParseError::Unit::Byte);
    }
    if (bytes.size() > expected)
        note(diag, Severity::Warning, "trailing-bytes",
             std::to_string(bytes.size() - expected) + " trailing bytes after last STL record ignored");

    std::vector<Triangle> tris;
    tris.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint8_t* rec = bytes.data() + kStlHeaderSize + 4 + std::size_t{i} * kStlRecordSize;
        Triangle t;
        for (int v = 0; v < 3; ++v) {
            const std::uint8_t* p = rec + 12 + 12 * v;
            t[v] = Vec3{read_f32_le(p), read_f32_le(p + 4), read_f32_le(p + 8)};
            if (!finite(t[v]))
                throw ParseError("non-finite vertex coordinate", static_cast<std::size_t>(p - bytes.data()),
                                 ParseError::Unit::Byte);
        }
        tris.push_back(t);
    }
    return TriangleMesh(std::move(tris), diag);
}

struct LineCursor {
    std::string_view text;
    std::size_t pos = 0;
    std::size_t line_no = 0;

    bool next(std::string_view& line) {
        if (pos >= text.size()) return false;
        const std::size_t end = text.find('\n', pos);
        const std::size_t stop = end == std::string_view::npos ? text.size() : end;
        line = text.substr(pos, stop - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = stop + 1;
        ++line_no;
        return true;
    }
};

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

double parse_double(std::string_view tok, std::size_t line_no) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (!tok.empty() && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v))
        throw ParseError("invalid number '" + std::string(tok) + "'", line_no, ParseError::Unit::Line);
    return v;
}

TriangleMesh parse_ascii_stl(std::string_view text, Diagnostics* diag) {
    enum class State { Start, Solid, Facet, Loop, EndLoop, Done };
    State state = State::Start;
    LineCursor cur{text};
    std::string_view line;
    std::vector<Triangle> tris;
    Triangle tri{};
    int nverts = 0;
    auto fail = [&](const std::string& what) { throw ParseError(what, cur.line_no, ParseError::Unit::Line); };

    while (cur.next(line)) {
        const auto toks = split_ws(line);
        if (toks.empty()) continue;
        const std::string_view kw = toks[0];
        switch (state) {
        case State::Start:
            if (kw != "solid") fail("expected 'solid'");
            state = State::Solid;
            break;
        case State::Solid:
            if (kw == "endsolid") {
                state = State::Done;
            } else if (kw == "facet") {
                if (toks.size() != 5 || toks[1] != "normal") fail("expected 'facet normal nx ny nz'");
                for (int i = 2; i < 5; ++i) parse_double(toks[i], cur.line_no);
                state = State::Facet;
            } else {
                fail("expected 'facet' or 'endsolid'");
            }
            break;
        case State::Facet:
            if (kw != "outer" || toks.size() != 2 || toks[1] != "loop") fail("expected 'outer loop'");
            nverts = 0;
            state = State::Loop;
            break;
        case State::Loop:
            if (kw == "vertex") {
                if (toks.size() != 4) fail("expected 'vertex x y z'");
                if (nverts == 3) fail("facet has more than three vertices");
                tri[nverts++] = Vec3{parse_double(toks[1], cur.line_no), parse_double(toks[2], cur.line_no),
                                     parse_double(toks[3], cur.line_no)};
            } else if (kw == "endloop") {
                if (nverts != 3) fail("facet has fewer than three vertices");
                tris.push_back(tri);
                state = State::EndLoop;
            } else {
                fail("expected 'vertex' or 'endloop'");
            }
            break;
        case State::EndLoop:
            if (kw != "endfacet") fail("expected 'endfacet'");
            state = State::Solid;
            break;
        case State::Done:
            // Some exporters concatenate solids.
            if (kw != "solid") fail("unexpected content after 'endsolid'");
            state = State::Solid;
            break;
        }
    }
    if (state != State::Done) throw ParseError("unterminated ASCII STL", cur.line_no, ParseError::Unit::Line);
    return TriangleMesh(std::move(tris), diag);
}

long parse_obj_index(std::string_view tok, std::size_t vertex_count, std::size_t line_no) {
    const std::size_t slash = tok.find('/');
    const std::string_view head = tok.substr(0, slash);
    long idx = 0;
    const auto res = std::from_chars(head.data(), head.data() + head.size(), idx);
    if (res.ec != std::errc{} || res.ptr != head.data() + head.size() || idx == 0)
        throw ParseError("invalid face index '" + std::string(tok) + "'", line_no, ParseError::Unit::Line);
    const long resolved = idx > 0 ? idx - 1 : static_cast<long>(vertex_count) + idx;
    if (resolved < 0 || resolved >= static_cast<long>(vertex_count))
        throw ParseError("face index out of range '" + std::string(tok) + "'", line_no, ParseError::Unit::Line);
    return resolved;
}

TriangleMesh parse_obj(std::string_view text, Diagnostics* diag) {
    LineCursor cur{text};
    std::string_view line;
    std::vector<Vec3> verts;
    std::vector<Triangle> tris;
    while (cur.next(line)) {
        const auto toks = split_ws(line);
        if (toks.empty() || toks[0].front() == '#') continue;
        if (toks[0] == "v") {
            if (toks.size() < 4 || toks.size() > 5)
                throw ParseError("expected 'v x y z [w]'", cur.line_no, ParseError::Unit::Line);
            verts.push_back(Vec3{parse_double(toks[1], cur.line_no), parse_double(toks[2], cur.line_no),
                                 parse_double(toks[3], cur.line_no)});
        } else if (toks[0] == "f") {
            if (toks.size() < 4)
                throw ParseError("face needs at least three vertices", cur.line_no, ParseError::Unit::Line);
            std::vector<long> idx;
            for (std::size_t i = 1; i < toks.size(); ++i) idx.push_back(parse_obj_index(toks[i], verts.size(), cur.line_no));
            for (std::size_t i = 1; i + 1 < idx.size(); ++i)
                tris.push_back(Triangle{verts[idx[0]], verts[idx[i]], verts[idx[i + 1]]});
        }
        // vn, vt, o, g, s, usemtl, mtllib and anything else are ignored.
    }
    return TriangleMesh(std::move(tris), diag);
}

std::string_view as_text(std::span<const std::uint8_t> bytes) {
    return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

}  // namespace

TriangleMesh::TriangleMesh(std::vector<Triangle> triangles, Diagnostics* diag) {
    triangles_.reserve(triangles.size());
    std::size_t dropped = 0;
    for (const auto& t : triangles) {
        for (const auto& v : t)
            if (!finite(v)) throw Error("triangle vertex is not finite");
        if (twice_area(t) <= 0.0) {
            ++dropped;
            continue;
        }
        triangles_.push_back(t);
        for (const auto& v : t) bbox_.include(v);
    }
    if (dropped > 0)
        note(diag, Severity::Warning, "degenerate-triangle", std::to_string(dropped) + " zero-area triangles dropped");
}

std::size_t TriangleMesh::vertex_count() const { return triangles_.size() * 3; }

double TriangleMesh::volume() const {
    double six_v = 0.0;
    for (const auto& t : triangles_) {
        const Vec3 c = cross(t[1], t[2]);
        six_v += t[0].x * c.x + t[0].y * c.y + t[0].z * c.z;
    }
    return six_v / 6.0;
}

TriangleMesh parse_mesh(std::span<const std::uint8_t> bytes, MeshFormat format, Diagnostics* diag) {
    TriangleMesh mesh;
    switch (format) {
    case MeshFormat::StlBinary: mesh = parse_binary_stl(bytes, diag); break;
    case MeshFormat::StlAscii: mesh = parse_ascii_stl(as_text(bytes), diag); break;
    case MeshFormat::Obj: mesh = parse_obj(as_text(bytes), diag); break;
    }
    if (mesh.empty()) throw EmptyMeshError("mesh contains no triangles");
    return mesh;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

TriangleMesh load_mesh(const std::filesystem::path& path, MeshFormat format, Diagnostics* diag) {
    const auto bytes = read_file_bytes(path);
    return parse_mesh(bytes, format, diag);
}

MeshFormat detect_format(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".obj") return MeshFormat::Obj;
    // Binary files may also begin with "solid"; trust the record count when it fits exactly.
    if (bytes.size() >= kStlHeaderSize + 4) {
        const std::uint32_t count = read_u32_le(bytes.data() + kStlHeaderSize);
        if (bytes.size() == kStlHeaderSize + 4 + std::size_t{count} * kStlRecordSize) return MeshFormat::StlBinary;
    }
    const auto text = as_text(bytes);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && text.substr(first, 5) == "solid") return MeshFormat::StlAscii;
    return MeshFormat::StlBinary;
}

MeshFormat parse_format_name(std::string_view name) {
    if (name == "stl_binary") return MeshFormat::StlBinary;
    if (name == "stl_ascii") return MeshFormat::StlAscii;
    if (name == "obj") return MeshFormat::Obj;
    throw Error("unknown mesh format '" + std::string(name) + "'");
}

std::vector<std::uint8_t> to_binary_stl(const TriangleMesh& mesh) {
    std::vector<std::uint8_t> out(kStlHeaderSize, 0);
    const char tag[] = "tasteprint binary STL";
    std::memcpy(out.data(), tag, sizeof(tag) - 1);
    write_u32_le(out, static_cast<std::uint32_t>(mesh.triangle_count()));
    for (const auto& t : mesh.triangles()) {
        Vec3 n = cross(t[1] - t[0], t[2] - t[0]);
        const double len = norm(n);
        if (len > 0) n = n * (1.0 / len);
        for (double c : {n.x, n.y, n.z}) write_f32_le(out, static_cast<float>(c));
        for (const auto& v : t)
            for (double c : {v.x, v.y, v.z}) write_f32_le(out, static_cast<float>(c));
        out.push_back(0);
        out.push_back(0);
    }
    return out;
}

std::string to_ascii_stl(const TriangleMesh& mesh, std::string_view name) {
    std::ostringstream os;
    os.precision(17);
    os << "solid " << name << "\n";
    for (const auto& t : mesh.triangles()) {
        Vec3 n = cross(t[1] - t[0], t[2] - t[0]);
        const double len = norm(n);
        if (len > 0) n = n * (1.0 / len);
        os << "  facet normal " << n.x << ' ' << n.y << ' ' << n.z << "\n    outer loop\n";
        for (const auto& v : t) os << "      vertex " << v.x << ' ' << v.y << ' ' << v.z << "\n";
        os << "    endloop\n  endfacet\n";
    }
    os << "endsolid " << name << "\n";
    return os.str();
}

TriangleMesh make_box(const Vec3& lo, const Vec3& hi) {
    const Vec3 p[8] = {{lo.x, lo.y, lo.z}, {hi.x, lo.y, lo.z}, {hi.x, hi.y, lo.z}, {lo.x, hi.y, lo.z},
                       {lo.x, lo.y, hi.z}, {hi.x, lo.y, hi.z}, {hi.x, hi.y, hi.z}, {lo.x, hi.y, hi.z}};
    // Each face as a CCW quad seen from outside.
    const int quads[6][4] = {{0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4}, {1, 2, 6, 5}, {2, 3, 7, 6}, {3, 0, 4, 7}};
    std::vector<Triangle> tris;
    for (const auto& q : quads) {
        tris.push_back({p[q[0]], p[q[1]], p[q[2]]});
        tris.push_back({p[q[0]], p[q[2]], p[q[3]]});
    }
    return TriangleMesh(std::move(tris));
}

TriangleMesh make_uv_sphere(const Vec3& c, double r, int slices, int stacks) {
    using std::numbers::pi;
    auto at = [&](int i, int j) {
        if (j == 0) return Vec3{c.x, c.y, c.z - r};
        if (j == stacks) return Vec3{c.x, c.y, c.z + r};
        const double theta = pi * j / stacks;  // from the south pole
        const double phi = 2.0 * pi * (i % slices) / slices;
        return Vec3{c.x + r * std::sin(theta) * std::cos(phi), c.y + r * std::sin(theta) * std::sin(phi),
                    c.z - r * std::cos(theta)};
    };
    std::vector<Triangle> tris;
    for (int j = 0; j < stacks; ++j) {
        for (int i = 0; i < slices; ++i) {
            const Vec3 a = at(i, j), b = at(i + 1, j), cc = at(i + 1, j + 1), d = at(i, j + 1);
            if (j > 0) tris.push_back({a, b, cc});
            if (j + 1 < stacks) tris.push_back({a, cc, d});
        }
    }
    return TriangleMesh(std::move(tris));
}

TriangleMesh make_torus(const Vec3& c, double R, double r, int nu, int nv) {
    using std::numbers::pi;
    auto at = [&](int i, int j) {
        const double u = 2.0 * pi * (i % nu) / nu;
        const double v = 2.0 * pi * (j % nv) / nv;
        const double w = R + r * std::cos(v);
        return Vec3{c.x + w * std::cos(u), c.y + w * std::sin(u), c.z + r * std::sin(v)};
    };
    std::vector<Triangle> tris;
    for (int i = 0; i < nu; ++i) {
        for (int j = 0; j < nv; ++j) {
            const Vec3 a = at(i, j), b = at(i + 1, j), cc = at(i + 1, j + 1), d = at(i, j + 1);
            tris.push_back({a, b, cc});
            tris.push_back({a, cc, d});
        }
    }
    return TriangleMesh(std::move(tris));
}

TriangleMesh make_prism(std::span<const Vec2> poly, double z0, double z1) {
    std::vector<Triangle> tris;
    const std::size_t n = poly.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        tris.push_back({Vec3{poly[0].x, poly[0].y, z0}, Vec3{poly[i + 1].x, poly[i + 1].y, z0},
                        Vec3{poly[i].x, poly[i].y, z0}});
        tris.push_back({Vec3{poly[0].x, poly[0].y, z1}, Vec3{poly[i].x, poly[i].y, z1},
                        Vec3{poly[i + 1].x, poly[i + 1].y, z1}});
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = poly[i], b = poly[(i + 1) % n];
        tris.push_back({Vec3{a.x, a.y, z0}, Vec3{b.x, b.y, z0}, Vec3{b.x, b.y, z1}});
        tris.push_back({Vec3{a.x, a.y, z0}, Vec3{b.x, b.y, z1}, Vec3{a.x, a.y, z1}});
    }
    return TriangleMesh(std::move(tris));
}

TriangleMesh make_tube(const Vec2& c, double ro, double ri, double z0, double z1, int n) {
    using std::numbers::pi;
    auto ring = [&](double r, int i, double z) {
        const double a = 2.0 * pi * (i % n) / n;
        return Vec3{c.x + r * std::cos(a), c.y + r * std::sin(a), z};
    };
    std::vector<Triangle> tris;
    for (int i = 0; i < n; ++i) {
        const int k = i + 1;
        // outer wall, facing out
        tris.push_back({ring(ro, i, z0), ring(ro, k, z0), ring(ro, k, z1)});
        tris.push_back({ring(ro, i, z0), ring(ro, k, z1), ring(ro, i, z1)});
        // inner wall, facing the axis
        tris.push_back({ring(ri, i, z0), ring(ri, k, z1), ring(ri, k, z0)});
        tris.push_back({ring(ri, i, z0), ring(ri, i, z1), ring(ri, k, z1)});
        // top and bottom annuli
        tris.push_back({ring(ri, i, z1), ring(ro, k, z1), ring(ri, k, z1)});
        tris.push_back({ring(ri, i, z1), ring(ro, i, z1), ring(ro, k, z1)});
        tris.push_back({ring(ri, i, z0), ring(ri, k, z0), ring(ro, k, z0)});
        tris.push_back({ring(ri, i, z0), ring(ro, k, z0), ring(ro, i, z0)});
    }
    return TriangleMesh(std::move(tris));
}

TriangleMesh merge(std::span<const TriangleMesh> meshes) {
    std::vector<Triangle> tris;
    for (const auto& m : meshes) tris.insert(tris.end(), m.triangles().begin(), m.triangles().end());
    return TriangleMesh(std::move(tris));
}

}  // namespace tasteprint
