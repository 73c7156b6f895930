#pragma once

// Polygonal mesh model: raw topology in, derived geometry out.
//
// A cell is a counter-clockwise vertex loop. Nonconforming contacts are
// expressed as edge splits: hanging vertices inserted between two corners,
// so that every face (segment between consecutive loop vertices) ends up
// with one or two adjacent cells.

#include <sushi/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sushi {

using Index = int;
inline constexpr Index no_index = -1;

using Vec = Eigen::Vector2d;
using Mat = Eigen::Matrix2d;

/// Hanging vertices strictly inside the segment [a, b], ordered from a to b.
struct EdgeSplit {
    Index a = no_index;
    Index b = no_index;
    std::vector<Index> inner;

    bool operator==(const EdgeSplit&) const = default;
};

struct RawMesh {
    int dim = 2;
    std::vector<Vec> vertices;
    std::vector<std::vector<Index>> cells; // corner loops, counter-clockwise
    std::vector<Vec> cell_points;          // empty: centres of mass
    std::vector<EdgeSplit> splits;
    std::vector<int> regions; // optional per-cell region tags
};

using RegionMap = std::vector<int>;

struct Face {
    Index id = no_index;
    std::array<Index, 2> vertices{no_index, no_index};
    double measure = 0.0;
    Vec barycentre = Vec::Zero();
    std::array<Index, 2> cells{no_index, no_index};
    bool boundary = false;

    Index other(Index cell) const { return cells[0] == cell ? cells[1] : cells[0]; }
};

struct Cell {
    Index id = no_index;
    std::vector<Index> vertices; // loop including hanging vertices
    std::vector<Index> faces;    // E_K, aligned with the per-face arrays below
    Vec point = Vec::Zero();     // x_K
    Vec centroid = Vec::Zero();
    double measure = 0.0;
    double diameter = 0.0;
    std::vector<Vec> normals;          // outward unit normals n_{K,s}
    std::vector<double> distances;     // d_{K,s}
    std::vector<double> cone_measures; // |s| d_{K,s} / dim

    std::size_t size() const { return faces.size(); }

    /// Position of `face` in E_K.
    std::size_t local(Index face) const {
        auto it = std::find(faces.begin(), faces.end(), face);
        if (it == faces.end()) throw InvalidTopology("face not in cell");
        return static_cast<std::size_t>(it - faces.begin());
    }
};

struct Box {
    Vec lo = Vec::Zero();
    Vec hi = Vec::Zero();
    double area() const { return (hi - lo).prod(); }
    double diameter() const { return (hi - lo).norm(); }
};

/// Immutable after compute_geometry(); all members are read-only by contract.
struct Mesh {
    int dim = 2;
    std::vector<Vec> vertices;
    std::vector<Cell> cells;
    std::vector<Face> faces;
    Box domain;
    double h = 0.0; // h_D = max h_K
    RawMesh source;

    std::size_t n_cells() const { return cells.size(); }
    std::size_t n_faces() const { return faces.size(); }
    std::size_t n_interior_faces() const {
        return static_cast<std::size_t>(
            std::count_if(faces.begin(), faces.end(), [](const Face& f) { return !f.boundary; }));
    }
    const RegionMap& regions() const { return source.regions; }
    double total_measure() const {
        double s = 0.0;
        for (const auto& c : cells) s += c.measure;
        return s;
    }
};

enum class CellPointRule { FromSource, CentreOfMass };

namespace detail {

using SplitLookup = std::map<std::pair<Index, Index>, const EdgeSplit*>;

inline std::vector<Index> expand_loop(const RawMesh& raw, const SplitLookup& lookup, std::size_t c) {
    const auto& corners = raw.cells[c];
    std::vector<Index> loop;
    for (std::size_t i = 0; i < corners.size(); ++i) {
        const Index a = corners[i];
        const Index b = corners[(i + 1) % corners.size()];
        loop.push_back(a);
        if (auto it = lookup.find({a, b}); it != lookup.end()) {
            loop.insert(loop.end(), it->second->inner.begin(), it->second->inner.end());
        } else if (auto jt = lookup.find({b, a}); jt != lookup.end()) {
            loop.insert(loop.end(), jt->second->inner.rbegin(), jt->second->inner.rend());
        }
    }
    return loop;
}

inline double cross(const Vec& a, const Vec& b) { return a.x() * b.y() - a.y() * b.x(); }

} // namespace detail

/// Derive all geometric quantities. Throws on topology or star-shapedness
/// violations; cell points default to centres of mass.
inline Mesh compute_geometry(const RawMesh& raw, CellPointRule rule = CellPointRule::FromSource) {
    if (raw.dim != 2) throw InvalidTopology("only dim 2 geometry is implemented");
    Mesh mesh;
    mesh.dim = raw.dim;
    mesh.vertices = raw.vertices;
    mesh.source = raw;
    const auto nv = static_cast<Index>(raw.vertices.size());

    if (raw.vertices.empty()) throw InvalidTopology("mesh has no vertices");
    mesh.domain.lo = mesh.domain.hi = raw.vertices.front();
    for (const auto& v : raw.vertices) {
        if (!v.allFinite()) throw InvalidTopology("non-finite vertex coordinate");
        mesh.domain.lo = mesh.domain.lo.cwiseMin(v);
        mesh.domain.hi = mesh.domain.hi.cwiseMax(v);
    }
    for (const auto& s : raw.splits) {
        if (s.a < 0 || s.a >= nv || s.b < 0 || s.b >= nv) throw InvalidTopology("split references a missing vertex");
        for (Index v : s.inner)
            if (v < 0 || v >= nv) throw InvalidTopology("split references a missing vertex");
    }
    if (!raw.cell_points.empty() && raw.cell_points.size() != raw.cells.size())
        throw InvalidTopology("cell point count differs from cell count");
    if (!raw.regions.empty() && raw.regions.size() != raw.cells.size())
        throw InvalidTopology("region tag count differs from cell count");

    detail::SplitLookup splits;
    for (const auto& s : raw.splits) splits[{s.a, s.b}] = &s;
    std::map<std::pair<Index, Index>, Index> face_of_edge;
    mesh.cells.resize(raw.cells.size());
    for (std::size_t c = 0; c < raw.cells.size(); ++c) {
        Cell& cell = mesh.cells[c];
        cell.id = static_cast<Index>(c);
        for (Index v : raw.cells[c])
            if (v < 0 || v >= nv) throw InvalidTopology("cell " + std::to_string(c) + " references a missing vertex");
        if (raw.cells[c].size() < 3) throw InvalidTopology("cell " + std::to_string(c) + " has fewer than 3 vertices");
        cell.vertices = detail::expand_loop(raw, splits, c);
        const auto& loop = cell.vertices;
        const std::size_t m = loop.size();

        // fan triangulation from the vertex average
        Vec avg = Vec::Zero();
        for (Index v : loop) avg += raw.vertices[v];
        avg /= static_cast<double>(m);
        double area = 0.0;
        Vec moment = Vec::Zero();
        for (std::size_t i = 0; i < m; ++i) {
            const Vec& p = raw.vertices[loop[i]];
            const Vec& q = raw.vertices[loop[(i + 1) % m]];
            const double a = 0.5 * detail::cross(p - avg, q - avg);
            area += a;
            moment += a * (avg + p + q) / 3.0;
        }
        if (!(area > 0.0))
            throw InvalidTopology("cell " + std::to_string(c) + " is degenerate or not counter-clockwise");
        cell.measure = area;
        cell.centroid = moment / area;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                cell.diameter = std::max(cell.diameter, (raw.vertices[loop[i]] - raw.vertices[loop[j]]).norm());
        cell.point = (rule == CellPointRule::FromSource && !raw.cell_points.empty()) ? raw.cell_points[c] : cell.centroid;

        for (std::size_t i = 0; i < m; ++i) {
            const Index a = loop[i];
            const Index b = loop[(i + 1) % m];
            const Vec& p = raw.vertices[a];
            const Vec& q = raw.vertices[b];
            const double len = (q - p).norm();
            if (!(len > 1e-14 * cell.diameter))
                throw DegenerateFace("cell " + std::to_string(c) + " has a zero-length face");
            const auto key = std::minmax(a, b);
            Index fid;
            if (auto it = face_of_edge.find(key); it != face_of_edge.end()) {
                fid = it->second;
                Face& f = mesh.faces[fid];
                if (f.cells[1] != no_index)
                    throw InvalidTopology("face shared by more than two cells at cell " + std::to_string(c));
                if (f.vertices[0] != b || f.vertices[1] != a)
                    throw InvalidTopology("adjacent cells " + std::to_string(f.cells[0]) + " and " + std::to_string(c) +
                                          " traverse a shared face in the same direction");
                f.cells[1] = cell.id;
            } else {
                fid = static_cast<Index>(mesh.faces.size());
                Face f;
                f.id = fid;
                f.vertices = {a, b};
                f.measure = len;
                f.barycentre = 0.5 * (p + q);
                f.cells = {cell.id, no_index};
                mesh.faces.push_back(f);
                face_of_edge.emplace(key, fid);
            }
            cell.faces.push_back(fid);
            cell.normals.emplace_back(Vec((q - p).y(), -(q - p).x()) / len);
        }
    }

    for (auto& f : mesh.faces) f.boundary = f.cells[1] == no_index;

    for (auto& cell : mesh.cells) {
        const double tol = 1e-12 * cell.diameter;
        for (std::size_t i = 0; i < cell.faces.size(); ++i) {
            const Face& f = mesh.faces[cell.faces[i]];
            const double dist = (f.barycentre - cell.point).dot(cell.normals[i]);
            if (!(dist >= tol))
                throw NonStarShaped("cell " + std::to_string(cell.id) + ": d_{K,s} = " + std::to_string(dist) +
                                    " for face " + std::to_string(f.id));
            cell.distances.push_back(dist);
            cell.cone_measures.push_back(f.measure * dist / mesh.dim);
        }
        mesh.h = std::max(mesh.h, cell.diameter);
    }
    return mesh;
}

/// Sides of an axis-aligned rectangular domain.
enum class Side { Left = 0, Right = 1, Bottom = 2, Top = 3 };

inline const char* side_name(Side s) {
    switch (s) {
    case Side::Left: return "x=lo";
    case Side::Right: return "x=hi";
    case Side::Bottom: return "y=lo";
    case Side::Top: return "y=hi";
    }
    return "?";
}

/// Side of the domain box carrying boundary face `f`, if both endpoints lie on it.
inline std::optional<Side> boundary_side(const Mesh& mesh, const Face& f) {
    const double tol = 1e-12 * mesh.domain.diameter();
    const Vec& p = mesh.vertices[f.vertices[0]];
    const Vec& q = mesh.vertices[f.vertices[1]];
    auto on = [tol](double a, double b, double c) { return std::abs(a - c) <= tol && std::abs(b - c) <= tol; };
    if (on(p.x(), q.x(), mesh.domain.lo.x())) return Side::Left;
    if (on(p.x(), q.x(), mesh.domain.hi.x())) return Side::Right;
    if (on(p.y(), q.y(), mesh.domain.lo.y())) return Side::Bottom;
    if (on(p.y(), q.y(), mesh.domain.hi.y())) return Side::Top;
    return std::nullopt;
}

struct CellResidual {
    Index cell = no_index;
    double identity = 0.0; // |sum |s| n (x_s - x_K)^t - |K| Id|_inf / |K|
    double volume = 0.0;   // |sum |s| d_{K,s} - d |K|| / |K|
    double closure = 0.0;  // |sum |s| n| / h_K
};

struct ValidationReport {
    double tolerance = 1e-10;
    std::vector<CellResidual> cells;
    double area_residual = 0.0; // |sum |K| - |domain|| / |domain|
    std::vector<std::string> topology_errors;

    double max_identity() const {
        double m = 0.0;
        for (const auto& r : cells) m = std::max(m, r.identity);
        return m;
    }
    double max_volume() const {
        double m = 0.0;
        for (const auto& r : cells) m = std::max(m, r.volume);
        return m;
    }
    double max_closure() const {
        double m = 0.0;
        for (const auto& r : cells) m = std::max(m, r.closure);
        return m;
    }
    std::vector<CellResidual> failures() const {
        std::vector<CellResidual> out;
        for (const auto& r : cells)
            if (r.identity > tolerance || r.volume > tolerance || r.closure > tolerance) out.push_back(r);
        return out;
    }
    bool passed() const {
        return topology_errors.empty() && area_residual <= tolerance && failures().empty();
    }
};

/// Residuals of the per-cell geometric identities plus topology checks.
/// Uses the stored derived quantities, so a tampered Mesh is reported.
inline ValidationReport validate(const Mesh& mesh, double tolerance = 1e-10) {
    ValidationReport rep;
    rep.tolerance = tolerance;
    for (const auto& cell : mesh.cells) {
        Mat sum = Mat::Zero();
        Vec closure = Vec::Zero();
        double vol = 0.0;
        for (std::size_t i = 0; i < cell.faces.size(); ++i) {
            const Face& f = mesh.faces[cell.faces[i]];
            sum += f.measure * cell.normals[i] * (f.barycentre - cell.point).transpose();
            closure += f.measure * cell.normals[i];
            vol += f.measure * cell.distances[i];
        }
        CellResidual r;
        r.cell = cell.id;
        r.identity = (sum - cell.measure * Mat::Identity()).cwiseAbs().maxCoeff() / cell.measure;
        r.volume = std::abs(vol - mesh.dim * cell.measure) / cell.measure;
        r.closure = closure.norm() / cell.diameter;
        rep.cells.push_back(r);
    }
    const double dom = mesh.domain.area();
    rep.area_residual = std::abs(mesh.total_measure() - dom) / dom;
    for (const auto& f : mesh.faces) {
        if (f.boundary) {
            if (!boundary_side(mesh, f))
                rep.topology_errors.push_back("boundary face " + std::to_string(f.id) + " does not lie on the domain boundary");
        } else if (f.cells[0] == f.cells[1]) {
            rep.topology_errors.push_back("interior face " + std::to_string(f.id) + " has a single repeated cell");
        }
    }
    return rep;
}

} // namespace sushi
