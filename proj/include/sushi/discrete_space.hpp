#pragma once

// Discrete unknown spaces: which interior faces keep an unknown (hybrid)
// and which are eliminated through barycentric weights.

#include <sushi/errors.hpp>
#include <sushi/log.hpp>
#include <sushi/mesh.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace sushi {

using ScalarField = std::function<double(const Vec&)>;
using VectorField = std::function<Vec(const Vec&)>;

enum class FaceKind : std::uint8_t { Boundary, Hybrid, Barycentric };

enum class PartitionPolicy { AllHybrid, AllBarycentric, DiscontinuityAligned };

inline const char* policy_name(PartitionPolicy p) {
    switch (p) {
    case PartitionPolicy::AllHybrid: return "all-hybrid";
    case PartitionPolicy::AllBarycentric: return "all-barycentric";
    case PartitionPolicy::DiscontinuityAligned: return "discontinuity";
    }
    return "?";
}

inline PartitionPolicy parse_policy(const std::string& s) {
    if (s == "all-hybrid") return PartitionPolicy::AllHybrid;
    if (s == "all-barycentric") return PartitionPolicy::AllBarycentric;
    if (s == "discontinuity") return PartitionPolicy::DiscontinuityAligned;
    throw InputError("unknown partition policy '" + s + "' (all-hybrid | all-barycentric | discontinuity)");
}

struct EdgePartition {
    std::vector<FaceKind> kind; // one per face

    bool hybrid(Index f) const { return kind[f] == FaceKind::Hybrid; }
    bool barycentric(Index f) const { return kind[f] == FaceKind::Barycentric; }
    std::size_t count(FaceKind k) const {
        std::size_t n = 0;
        for (auto x : kind) n += x == k;
        return n;
    }
    std::size_t n_hybrid() const { return count(FaceKind::Hybrid); }
    std::size_t n_barycentric() const { return count(FaceKind::Barycentric); }
};

/// Retained unknowns: all cells first (index = cell id), then hybrid faces
/// in increasing face id.
struct UnknownNumbering {
    std::size_t n_cells = 0;
    std::vector<Index> face_unknown; // per face, no_index unless hybrid
    std::vector<Index> unknown_face; // per hybrid unknown

    std::size_t size() const { return n_cells + unknown_face.size(); }
    Index cell(Index K) const { return K; }
    Index face(Index f) const { return face_unknown[f]; }
};

inline UnknownNumbering number_unknowns(const Mesh& mesh, const EdgePartition& part) {
    UnknownNumbering num;
    num.n_cells = mesh.n_cells();
    num.face_unknown.assign(mesh.n_faces(), no_index);
    for (const auto& f : mesh.faces)
        if (part.hybrid(f.id)) {
            num.face_unknown[f.id] = static_cast<Index>(num.n_cells + num.unknown_face.size());
            num.unknown_face.push_back(f.id);
        }
    return num;
}

enum class PointKind : std::uint8_t { Cell, Face };

/// One term of u_s = sum beta * u_point; face points are hybrid faces.
struct WeightTerm {
    PointKind kind = PointKind::Cell;
    Index id = no_index;
    double beta = 0.0;
};

struct BarycentricWeights {
    std::vector<std::vector<WeightTerm>> terms; // per face; empty unless barycentric

    const std::vector<WeightTerm>& operator[](Index f) const { return terms[f]; }
    bool has(Index f) const { return f >= 0 && static_cast<std::size_t>(f) < terms.size() && !terms[f].empty(); }
};

inline Vec point_of(const Mesh& mesh, const WeightTerm& t) {
    return t.kind == PointKind::Cell ? mesh.cells[t.id].point : mesh.faces[t.id].barycentre;
}

namespace detail {

inline std::vector<std::vector<Index>> cells_of_vertices(const Mesh& mesh) {
    std::vector<std::vector<Index>> out(mesh.vertices.size());
    for (const auto& c : mesh.cells)
        for (Index v : c.vertices) out[v].push_back(c.id);
    return out;
}

// Cells sharing a vertex with face f, together with the face neighbours of
// its two cells, sorted by id, optionally restricted to one region.
inline std::vector<Index> candidate_cells(const Mesh& mesh, const std::vector<std::vector<Index>>& vcells, const Face& f,
                                          const RegionMap* regions, int region) {
    std::set<Index> s;
    auto add = [&](Index c) {
        if (c != no_index && (!regions || (*regions)[c] == region)) s.insert(c);
    };
    for (Index v : f.vertices)
        for (Index c : vcells[v]) add(c);
    for (Index K : f.cells) {
        if (K == no_index) continue;
        add(K);
        for (Index g : mesh.cells[K].faces) add(mesh.faces[g].other(K));
    }
    return {s.begin(), s.end()};
}

struct Candidate {
    PointKind kind;
    Index id;
    Vec x;
};

inline bool affinely_degenerate(const std::vector<Candidate>& pts, double scale) {
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            for (std::size_t k = j + 1; k < pts.size(); ++k)
                if (std::abs(cross(pts[j].x - pts[i].x, pts[k].x - pts[i].x)) > 1e-10 * scale * scale) return false;
    return true;
}

// Non-degenerate triple reproducing x_s with the smallest sum |beta| (the
// least extrapolation), ties broken by the smaller sum |beta| |x - x_s|^2 and
// then by enumeration order. Empty if no triple exists.
inline std::vector<WeightTerm> best_triple(const std::vector<Candidate>& pts, const Vec& xs, double scale) {
    std::vector<WeightTerm> best;
    double best_mass = std::numeric_limits<double>::infinity();
    double best_spread = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            for (std::size_t k = j + 1; k < pts.size(); ++k) {
                const Vec a = pts[j].x - pts[i].x, b = pts[k].x - pts[i].x;
                const double det = cross(a, b);
                if (std::abs(det) <= 1e-10 * scale * scale) continue;
                const Vec r = xs - pts[i].x;
                const double bj = cross(r, b) / det;
                const double bk = cross(a, r) / det;
                const double bi = 1.0 - bj - bk;
                const double mass = std::abs(bi) + std::abs(bj) + std::abs(bk);
                const double spread = std::abs(bi) * (pts[i].x - xs).squaredNorm() +
                                      std::abs(bj) * (pts[j].x - xs).squaredNorm() +
                                      std::abs(bk) * (pts[k].x - xs).squaredNorm();
                const bool lighter = mass < best_mass - 1e-12;
                const bool tied = !lighter && mass <= best_mass + 1e-12;
                if (lighter || (tied && spread < best_spread * (1.0 - 1e-12))) {
                    best_mass = mass;
                    best_spread = spread;
                    best = {{pts[i].kind, pts[i].id, bi}, {pts[j].kind, pts[j].id, bj}, {pts[k].kind, pts[k].id, bk}};
                }
            }
    return best;
}

// Two-point weights when x_s lies on the segment [x_K, x_L].
inline std::vector<WeightTerm> segment_weights(const Mesh& mesh, const Face& f) {
    const Vec& xk = mesh.cells[f.cells[0]].point;
    const Vec& xl = mesh.cells[f.cells[1]].point;
    const Vec e = xl - xk;
    const double len2 = e.squaredNorm();
    const double t = (f.barycentre - xk).dot(e) / len2;
    const double off = std::abs(cross(e, f.barycentre - xk)) / std::sqrt(len2);
    const double scale = std::min(mesh.cells[f.cells[0]].diameter, mesh.cells[f.cells[1]].diameter);
    if (off > 1e-12 * scale || t < 0.0 || t > 1.0) return {};
    return {{PointKind::Cell, f.cells[0], 1.0 - t}, {PointKind::Cell, f.cells[1], t}};
}

} // namespace detail

/// Face partition. DiscontinuityAligned keeps unknowns on faces between cells
/// of different regions; with `promote_thin_layers`, it also keeps them on
/// interior faces of a region that is one cell thick there, i.e. whose
/// same-region cells around the face are collinear.
inline EdgePartition partition_faces(const Mesh& mesh, PartitionPolicy policy, const RegionMap* regions = nullptr,
                                     bool promote_thin_layers = true) {
    if (policy == PartitionPolicy::DiscontinuityAligned && (!regions || regions->empty()))
        throw MissingRegionMap("the discontinuity policy needs a region map");
    if (regions && !regions->empty() && regions->size() != mesh.n_cells())
        throw MissingRegionMap("region map size differs from the cell count");
    EdgePartition part;
    part.kind.resize(mesh.n_faces());
    const auto vcells = detail::cells_of_vertices(mesh);
    for (const auto& f : mesh.faces) {
        if (f.boundary) {
            part.kind[f.id] = FaceKind::Boundary;
            continue;
        }
        switch (policy) {
        case PartitionPolicy::AllHybrid: part.kind[f.id] = FaceKind::Hybrid; break;
        case PartitionPolicy::AllBarycentric: part.kind[f.id] = FaceKind::Barycentric; break;
        case PartitionPolicy::DiscontinuityAligned: {
            const int rk = (*regions)[f.cells[0]], rl = (*regions)[f.cells[1]];
            bool keep = rk != rl;
            if (!keep && promote_thin_layers) {
                std::vector<detail::Candidate> pts;
                for (Index c : detail::candidate_cells(mesh, vcells, f, regions, rk))
                    pts.push_back({PointKind::Cell, c, mesh.cells[c].point});
                keep = detail::affinely_degenerate(pts, mesh.cells[f.cells[0]].diameter);
            }
            part.kind[f.id] = keep ? FaceKind::Hybrid : FaceKind::Barycentric;
            break;
        }
        }
    }
    return part;
}

/// Barycentric weights for every barycentric face.
///
/// The two-point combination on [x_K, x_L] is used when x_s lies on that
/// segment. Otherwise the cheapest triple of candidate points (cells sharing a
/// vertex with the face) is chosen. With a region map and both neighbours in
/// the same region, candidates are restricted to that region; if those cells
/// are collinear, barycentres of hybrid faces of the candidate cells are added.
inline BarycentricWeights compute_weights(const Mesh& mesh, const EdgePartition& part,
                                          const RegionMap* regions = nullptr, double warn_beta = 4.0) {
    if (regions && regions->empty()) regions = nullptr;
    BarycentricWeights w;
    w.terms.resize(mesh.n_faces());
    const auto vcells = detail::cells_of_vertices(mesh);
    for (const auto& f : mesh.faces) {
        if (!part.barycentric(f.id)) continue;
        const double scale = mesh.cells[f.cells[0]].diameter;
        std::vector<WeightTerm> terms = detail::segment_weights(mesh, f);
        if (terms.empty()) {
            const bool same_region = regions && (*regions)[f.cells[0]] == (*regions)[f.cells[1]];
            const RegionMap* filter = same_region ? regions : nullptr;
            const int region = same_region ? (*regions)[f.cells[0]] : 0;
            std::vector<detail::Candidate> pts;
            const auto cells = detail::candidate_cells(mesh, vcells, f, filter, region);
            for (Index c : cells) pts.push_back({PointKind::Cell, c, mesh.cells[c].point});
            terms = detail::best_triple(pts, f.barycentre, scale);
            if (terms.empty() && same_region) {
                std::set<Index> hfaces;
                for (Index c : cells)
                    for (Index g : mesh.cells[c].faces)
                        if (part.hybrid(g)) hfaces.insert(g);
                for (Index g : hfaces) pts.push_back({PointKind::Face, g, mesh.faces[g].barycentre});
                terms = detail::best_triple(pts, f.barycentre, scale);
            }
        }
        if (terms.empty())
            throw NoValidCombination("no affine combination of nearby points reproduces the barycentre of face " +
                                     std::to_string(f.id));
        std::erase_if(terms, [](const WeightTerm& t) { return std::abs(t.beta) <= 1e-13; });
        double max_beta = 0.0;
        for (const auto& t : terms) max_beta = std::max(max_beta, std::abs(t.beta));
        if (max_beta > warn_beta)
            warn("face " + std::to_string(f.id) + ": barycentric weight " + std::to_string(max_beta) + " exceeds " +
                 std::to_string(warn_beta));
        w.terms[f.id] = std::move(terms);
    }
    return w;
}

struct WeightResidual {
    double sum = 0.0;   // max |sum beta - 1|
    double point = 0.0; // max |sum beta x - x_s| / h_D
};

inline WeightResidual weight_residuals(const Mesh& mesh, const BarycentricWeights& w) {
    WeightResidual r;
    for (const auto& f : mesh.faces) {
        if (!w.has(f.id)) continue;
        double s = 0.0;
        Vec x = Vec::Zero();
        for (const auto& t : w[f.id]) {
            s += t.beta;
            x += t.beta * point_of(mesh, t);
        }
        r.sum = std::max(r.sum, std::abs(s - 1.0));
        r.point = std::max(r.point, (x - f.barycentre).norm() / mesh.h);
    }
    return r;
}

/// CSV: face,kind,point,beta
inline void write_weights_csv(const BarycentricWeights& w, std::ostream& os) {
    char buf[64];
    os << "face,kind,point,beta\n";
    for (std::size_t f = 0; f < w.terms.size(); ++f)
        for (const auto& t : w.terms[f]) {
            std::snprintf(buf, sizeof buf, "%.17g", t.beta);
            os << f << "," << (t.kind == PointKind::Cell ? "cell" : "face") << "," << t.id << "," << buf << "\n";
        }
}

/// Values per cell and per face. Face values cover every face: hybrid and
/// boundary values are data, barycentric ones are filled from the weights.
struct DiscreteFunction {
    std::vector<double> cell;
    std::vector<double> face;
};

inline double combine(const BarycentricWeights& w, Index f, const DiscreteFunction& u) {
    double s = 0.0;
    for (const auto& t : w[f]) s += t.beta * (t.kind == PointKind::Cell ? u.cell[t.id] : u.face[t.id]);
    return s;
}

/// Overwrites barycentric face values with their weighted combinations.
inline void fill_barycentric_faces(const Mesh& mesh, const EdgePartition& part, const BarycentricWeights& w,
                                   DiscreteFunction& u) {
    for (const auto& f : mesh.faces) {
        if (!part.barycentric(f.id)) continue;
        if (!w.has(f.id)) throw MissingWeights("no weights for barycentric face " + std::to_string(f.id));
        u.face[f.id] = combine(w, f.id, u);
    }
}

/// P_D phi: phi at cell points and at every face barycentre.
inline DiscreteFunction interpolate(const Mesh& mesh, const ScalarField& phi) {
    DiscreteFunction u;
    u.cell.reserve(mesh.n_cells());
    u.face.reserve(mesh.n_faces());
    for (const auto& c : mesh.cells) u.cell.push_back(phi(c.point));
    for (const auto& f : mesh.faces) u.face.push_back(phi(f.barycentre));
    return u;
}

/// P_{D,B} phi: cell and hybrid values sampled, barycentric faces combined,
/// boundary faces from `boundary` (zero when not given).
inline DiscreteFunction interpolate(const Mesh& mesh, const EdgePartition& part, const BarycentricWeights& w,
                                    const ScalarField& phi, const ScalarField& boundary = {}) {
    DiscreteFunction u = interpolate(mesh, phi);
    for (const auto& f : mesh.faces)
        if (f.boundary) u.face[f.id] = boundary ? boundary(f.barycentre) : 0.0;
    fill_barycentric_faces(mesh, part, w, u);
    return u;
}

} // namespace sushi
