#pragma once

// Face reconstruction, composite fluxes, error measures and exporters.

#include <sushi/assembly.hpp>
#include <sushi/discrete_space.hpp>
#include <sushi/errors.hpp>
#include <sushi/gradient.hpp>
#include <sushi/mesh.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace sushi {

/// Cell and hybrid values from the solution vector, barycentric values from
/// the weights, boundary values from g (0 when g is empty).
inline DiscreteFunction reconstruct_faces(const Mesh& mesh, const EdgePartition& part, const BarycentricWeights& w,
                                          const UnknownNumbering& num, const std::vector<double>& x,
                                          const ScalarField& boundary = {}) {
    DiscreteFunction u;
    u.cell.resize(mesh.n_cells());
    u.face.assign(mesh.n_faces(), 0.0);
    for (std::size_t k = 0; k < mesh.n_cells(); ++k) u.cell[k] = x[num.cell(static_cast<Index>(k))];
    for (const auto& f : mesh.faces) {
        if (part.hybrid(f.id)) u.face[f.id] = x[num.face(f.id)];
        else if (f.boundary && boundary) u.face[f.id] = boundary(f.barycentre);
    }
    fill_barycentric_faces(mesh, part, w, u);
    return u;
}

struct FluxReport {
    std::vector<std::vector<double>> cell_face;     // F_{K,s} per cell and local face
    std::map<std::pair<Index, Index>, double> pair; // F_{K,L} over N_D, both orientations
    std::vector<double> balance_residual;           // per cell: outflow minus integral of f
    std::vector<double> hybrid_residual;            // per face: F_{K,s} + F_{L,s} (+ extended terms) on hybrid faces
    double max_flux = 0.0;

    double max_balance_residual() const {
        double m = 0.0;
        for (double r : balance_residual) m = std::max(m, std::abs(r));
        return m;
    }
    double max_hybrid_residual() const {
        double m = 0.0;
        for (double r : hybrid_residual) m = std::max(m, std::abs(r));
        return m;
    }
    double max_antisymmetry() const {
        double m = 0.0;
        for (const auto& [kl, v] : pair) m = std::max(m, std::abs(v + pair.at({kl.second, kl.first})));
        return m;
    }
};

inline std::vector<std::vector<double>> all_fluxes(const Mesh& mesh, const TensorField& tensor,
                                                   const DiscreteFunction& u, double alpha) {
    std::vector<std::vector<double>> F(mesh.n_cells());
    parallel_for(mesh.n_cells(), [&](std::size_t k) {
        const auto L = local_matrix(mesh, static_cast<Index>(k), tensor, alpha);
        const Eigen::VectorXd v = cell_fluxes(mesh, L, u);
        F[k].assign(v.data(), v.data() + v.size());
    });
    return F;
}

/// Pairwise fluxes F_{K,L} = sum_{s in E_K cap B} F_{K,s} beta_s^L - sum_{s in E_L cap B} F_{L,s} beta_s^K,
/// together with the per-cell balance and hybrid-face conservativity residuals.
inline FluxReport composite_fluxes(const Mesh& mesh, const EdgePartition& part, const BarycentricWeights& w,
                                   const TensorField& tensor, const DiscreteFunction& u, const ScalarField& source,
                                   double alpha) {
    FluxReport rep;
    rep.cell_face = all_fluxes(mesh, tensor, u, alpha);
    rep.balance_residual.assign(mesh.n_cells(), 0.0);
    rep.hybrid_residual.assign(mesh.n_faces(), 0.0);
    std::vector<double> to_face(mesh.n_faces(), 0.0); // flux routed into hybrid faces by extended weights

    for (const auto& cell : mesh.cells)
        for (std::size_t i = 0; i < cell.size(); ++i) {
            const Index f = cell.faces[i];
            const double F = rep.cell_face[cell.id][i];
            rep.max_flux = std::max(rep.max_flux, std::abs(F));
            if (!part.barycentric(f)) {
                rep.balance_residual[cell.id] += F;
                if (part.hybrid(f)) rep.hybrid_residual[f] += F;
                continue;
            }
            for (const auto& t : w[f]) {
                if (t.kind == PointKind::Face) {
                    rep.balance_residual[cell.id] += F * t.beta;
                    to_face[t.id] += F * t.beta;
                } else if (t.id != cell.id) {
                    rep.pair[{cell.id, t.id}] += F * t.beta;
                    rep.pair[{t.id, cell.id}] -= F * t.beta;
                }
            }
        }
    for (const auto& [kl, v] : rep.pair) rep.balance_residual[kl.first] += v;
    for (const auto& cell : mesh.cells)
        if (source) rep.balance_residual[cell.id] -= rhs_cell_integral(mesh, cell.id, source);
    for (const auto& f : mesh.faces)
        if (part.hybrid(f.id)) rep.hybrid_residual[f.id] -= to_face[f.id];
    return rep;
}

/// Outward normal flux integral of Lambda grad u per side (left, right, bottom, top),
/// approximated by the sum of -F_{K,s} over the boundary faces of that side.
inline std::array<double, 4> boundary_flux_totals(const Mesh& mesh, const std::vector<std::vector<double>>& cell_face) {
    std::array<double, 4> total{};
    for (const auto& cell : mesh.cells)
        for (std::size_t i = 0; i < cell.size(); ++i) {
            const Face& f = mesh.faces[cell.faces[i]];
            if (!f.boundary) continue;
            const auto side = boundary_side(mesh, f);
            if (!side) throw UnclassifiedBoundaryFace("boundary face " + std::to_string(f.id) + " lies on no side of the domain");
            total[static_cast<std::size_t>(*side)] -= cell_face[cell.id][i];
        }
    return total;
}

/// Discrete seminorm |v|_X^2 = sum_K sum_s |s|/d_{K,s} (v_s - v_K)^2.
inline double seminorm_X(const Mesh& mesh, const DiscreteFunction& v) {
    double s = 0.0;
    for (const auto& cell : mesh.cells)
        for (std::size_t i = 0; i < cell.size(); ++i) {
            const Face& f = mesh.faces[cell.faces[i]];
            const double d = v.face[f.id] - v.cell[cell.id];
            s += f.measure / cell.distances[i] * d * d;
        }
    return std::sqrt(s);
}

/// ||v||_{1,p,M}^p = sum_s |s| (D_s v)^p / d_s^{p-1}, with d_s = d_{K,s} + d_{L,s}
/// and D_s v = |v_K - v_L| on interior faces, d_s = d_{K,s} and D_s v = |v_K| on the boundary.
inline double norm_1pM(const Mesh& mesh, const std::vector<double>& cell_values, double p) {
    if (!(p >= 1.0)) throw InputError("norm exponent must be at least 1");
    double s = 0.0;
    for (const auto& f : mesh.faces) {
        const Cell& K = mesh.cells[f.cells[0]];
        double d = K.distances[K.local(f.id)];
        double jump = std::abs(cell_values[K.id]);
        if (!f.boundary) {
            const Cell& L = mesh.cells[f.cells[1]];
            d += L.distances[L.local(f.id)];
            jump = std::abs(cell_values[K.id] - cell_values[L.id]);
        }
        s += f.measure * std::pow(jump, p) / std::pow(d, p - 1.0);
    }
    return std::pow(s, 1.0 / p);
}

struct ErrorReport {
    double eps_u = 0.0;
    double eps_grad = 0.0;              // stabilised cone gradients against grad u at cone centroids
    double eps_grad_cell = 0.0;         // cell gradients grad_K u against grad u(x_K)
    double eps_u_rel = 0.0;             // eps_u / (sum_K |K| u(x_K)^2)^{1/2}
    double eps_grad_cell_rel = 0.0;     // eps_grad_cell / (sum_K |K| |grad u(x_K)|^2)^{1/2}
    double seminorm = 0.0;              // |u - P_D u_exact|_X
    std::vector<std::pair<double, double>> norm_1p; // (p, ||Pi(u - u_exact)||_{1,p,M})
    std::optional<double> E;
};

/// eps(u)^2 = sum_K |K| (u_K - u(x_K))^2; eps(grad u)^2 = sum over cones of |D| |grad_{K,s} u - grad u(centroid)|^2;
/// the cell-gradient variant uses sum_K |K| |grad_K u - grad u(x_K)|^2.
inline ErrorReport error_norms(const Mesh& mesh, const DiscreteFunction& u, double alpha, const ScalarField& exact,
                               const VectorField& exact_grad, const std::vector<double>& exponents = {2.0}) {
    ErrorReport rep;
    const GradientField g = gradient_field(mesh, u, alpha);
    DiscreteFunction err = u;
    double su = 0.0, sg = 0.0, sc = 0.0, nu = 0.0, nc = 0.0;
    for (const auto& cell : mesh.cells) {
        const double ue = exact(cell.point);
        const Vec ge = exact_grad(cell.point);
        const double e = u.cell[cell.id] - ue;
        err.cell[cell.id] = e;
        su += cell.measure * e * e;
        nu += cell.measure * ue * ue;
        sc += cell.measure * (cell_gradient(mesh, u, cell.id) - ge).squaredNorm();
        nc += cell.measure * ge.squaredNorm();
        for (std::size_t i = 0; i < cell.size(); ++i)
            sg += cell.cone_measures[i] * (g.cone[cell.id][i] - exact_grad(cone_centroid(mesh, cell.id, i))).squaredNorm();
    }
    for (const auto& f : mesh.faces) err.face[f.id] = u.face[f.id] - exact(f.barycentre);
    rep.eps_u = std::sqrt(su);
    rep.eps_grad = std::sqrt(sg);
    rep.eps_grad_cell = std::sqrt(sc);
    rep.eps_u_rel = nu > 0.0 ? std::sqrt(su / nu) : 0.0;
    rep.eps_grad_cell_rel = nc > 0.0 ? std::sqrt(sc / nc) : 0.0;
    rep.seminorm = seminorm_X(mesh, err);
    for (double p : exponents) rep.norm_1p.emplace_back(p, norm_1pM(mesh, err.cell, p));
    return rep;
}

/// Integral of a function over a face by 3-point Gauss.
inline double face_integral(const Mesh& mesh, const Face& f, const std::function<double(const Vec&)>& fn) {
    static constexpr std::array<double, 3> node{0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
    static constexpr std::array<double, 3> weight{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    const Vec a = mesh.vertices[f.vertices[0]], b = mesh.vertices[f.vertices[1]];
    double s = 0.0;
    for (std::size_t q = 0; q < 3; ++q) s += weight[q] * fn(a + node[q] * (b - a));
    return s * f.measure;
}

/// E(u) = (sum_K sum_s d_{K,s}/|s| (F_{K,s}(P_{D,B} u) + int_s grad u . n)^2)^{1/2}, Lambda = Id only.
inline double flux_consistency_E(const Mesh& mesh, const EdgePartition& part, const BarycentricWeights& w,
                                 const TensorField& tensor, const ScalarField& exact, const VectorField& exact_grad,
                                 double alpha) {
    if (!tensor.is_identity(mesh)) throw RequiresIdentityTensor("E(u) is defined for the identity tensor only");
    const DiscreteFunction Pu = interpolate(mesh, part, w, exact, exact);
    const auto F = all_fluxes(mesh, tensor, Pu, alpha);
    double s = 0.0;
    for (const auto& cell : mesh.cells)
        for (std::size_t i = 0; i < cell.size(); ++i) {
            const Face& f = mesh.faces[cell.faces[i]];
            const Vec n = cell.normals[i];
            const double exact_flux = face_integral(mesh, f, [&](const Vec& x) { return exact_grad(x).dot(n); });
            const double r = F[cell.id][i] + exact_flux;
            s += cell.distances[i] / f.measure * r * r;
        }
    return std::sqrt(s);
}

/// Least-squares slope of log(error) against log(h).
inline double convergence_order(const std::vector<std::pair<double, double>>& series) {
    if (series.size() < 3) throw InsufficientLevels("convergence order needs at least 3 refinement levels");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [h, e] : series) {
        if (!(h > 0.0) || !(e > 0.0)) throw InputError("convergence series needs positive h and error");
        const double x = std::log(h), y = std::log(e);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(series.size());
    const double den = n * sxx - sx * sx;
    if (den <= 1e-12 * n * sxx) throw InputError("convergence series needs distinct mesh sizes");
    return (n * sxy - sx * sy) / den;
}

namespace detail {
inline std::string real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}
} // namespace detail

/// Legacy ASCII VTK: polygons with cell data u, the cone-averaged gradient and the region tag when present.
inline void export_vtk(const Mesh& mesh, const DiscreteFunction& u, const GradientField& g, std::ostream& os) {
    os << "# vtk DataFile Version 3.0\nsushi solution\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << mesh.vertices.size() << " double\n";
    for (const auto& v : mesh.vertices) os << detail::real(v.x()) << ' ' << detail::real(v.y()) << " 0\n";
    std::size_t total = 0;
    for (const auto& c : mesh.cells) total += c.vertices.size() + 1;
    os << "CELLS " << mesh.n_cells() << ' ' << total << '\n';
    for (const auto& c : mesh.cells) {
        os << c.vertices.size();
        for (Index v : c.vertices) os << ' ' << v;
        os << '\n';
    }
    os << "CELL_TYPES " << mesh.n_cells() << '\n';
    for (std::size_t k = 0; k < mesh.n_cells(); ++k) os << "7\n";
    os << "CELL_DATA " << mesh.n_cells() << "\nSCALARS u double 1\nLOOKUP_TABLE default\n";
    for (double x : u.cell) os << detail::real(x) << '\n';
    os << "VECTORS grad_u double\n";
    for (const auto& c : mesh.cells) {
        const Vec a = g.cell_average(mesh, c.id);
        os << detail::real(a.x()) << ' ' << detail::real(a.y()) << " 0\n";
    }
    if (!mesh.regions().empty()) {
        os << "SCALARS region int 1\nLOOKUP_TABLE default\n";
        for (int r : mesh.regions()) os << r << '\n';
    }
}

inline void export_vtk(const Mesh& mesh, const DiscreteFunction& u, const GradientField& g, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path);
    export_vtk(mesh, u, g, os);
}

/// One CSV row per run.
struct RunRecord {
    std::string mesh;
    std::string policy;
    double alpha = 0.0;
    std::size_t N = 0;
    std::size_t NM = 0;
    double h = 0.0;
    double eps_u = 0.0;
    double eps_grad = 0.0;
    double eps_grad_cell = 0.0;
    std::array<double, 4> flux{};
};

inline const char* run_csv_header() {
    return "mesh,policy,alpha,N,NM,h,eps_u,eps_grad,eps_grad_cell,flux_left,flux_right,flux_bottom,flux_top";
}

inline void export_csv(const std::vector<RunRecord>& rows, std::ostream& os) {
    os << run_csv_header() << '\n';
    for (const auto& r : rows) {
        os << r.mesh << ',' << r.policy << ',' << detail::real(r.alpha) << ',' << r.N << ',' << r.NM << ','
           << detail::real(r.h) << ',' << detail::real(r.eps_u) << ',' << detail::real(r.eps_grad) << ','
           << detail::real(r.eps_grad_cell);
        for (double f : r.flux) os << ',' << detail::real(f);
        os << '\n';
    }
}

inline void export_csv(const std::vector<RunRecord>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path);
    export_csv(rows, os);
}

inline std::vector<RunRecord> read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != run_csv_header()) throw ParseError("unexpected CSV header", 1);
    std::vector<RunRecord> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
        if (cols.size() != 13) throw ParseError("expected 13 columns", lineno);
        try {
            RunRecord r;
            r.mesh = cols[0];
            r.policy = cols[1];
            r.alpha = std::stod(cols[2]);
            r.N = std::stoul(cols[3]);
            r.NM = std::stoul(cols[4]);
            r.h = std::stod(cols[5]);
            r.eps_u = std::stod(cols[6]);
            r.eps_grad = std::stod(cols[7]);
            r.eps_grad_cell = std::stod(cols[8]);
            for (std::size_t s = 0; s < 4; ++s) r.flux[s] = std::stod(cols[9 + s]);
            rows.push_back(r);
        } catch (const std::logic_error&) {
            throw ParseError("malformed number", lineno);
        }
    }
    return rows;
}

} // namespace sushi
