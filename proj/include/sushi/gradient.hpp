#pragma once

// Stabilised discrete gradient, piecewise constant on the cones D_{K,s}.

#include <sushi/discrete_space.hpp>
#include <sushi/mesh.hpp>
#include <sushi/parallel.hpp>

#include <cmath>
#include <vector>

namespace sushi {

inline double default_alpha(int dim = 2) { return std::sqrt(static_cast<double>(dim)); }

inline void check_alpha(double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InputError("stabilisation coefficient must be positive");
}

/// grad_K u = (1/|K|) sum_s |s| (u_s - u_K) n_{K,s}
inline Vec cell_gradient(const Mesh& mesh, const DiscreteFunction& u, Index K) {
    const Cell& c = mesh.cells[K];
    Vec g = Vec::Zero();
    for (std::size_t i = 0; i < c.size(); ++i) {
        const Index f = c.faces[i];
        g += mesh.faces[f].measure * (u.face[f] - u.cell[K]) * c.normals[i];
    }
    return g / c.measure;
}

/// R_{K,s} u = (alpha / d_{K,s}) (u_s - u_K - grad_K u . (x_s - x_K)), `local`
/// being the position of s in E_K.
inline double stabilization_residual(const Mesh& mesh, const DiscreteFunction& u, Index K, std::size_t local,
                                     double alpha) {
    const Cell& c = mesh.cells[K];
    const Face& f = mesh.faces[c.faces[local]];
    const Vec g = cell_gradient(mesh, u, K);
    return alpha / c.distances[local] * (u.face[f.id] - u.cell[K] - g.dot(f.barycentre - c.point));
}

struct GradientField {
    double alpha = 0.0;
    std::vector<std::vector<Vec>> cone; // [cell][local face]

    /// Cone-measure-weighted average over each cell.
    Vec cell_average(const Mesh& mesh, Index K) const {
        const Cell& c = mesh.cells[K];
        Vec s = Vec::Zero();
        for (std::size_t i = 0; i < c.size(); ++i) s += c.cone_measures[i] * cone[K][i];
        return s / c.measure;
    }
    double l2_norm(const Mesh& mesh) const {
        double s = 0.0;
        for (const auto& c : mesh.cells)
            for (std::size_t i = 0; i < c.size(); ++i) s += c.cone_measures[i] * cone[c.id][i].squaredNorm();
        return std::sqrt(s);
    }
};

/// Gradient on every cone of a function whose face values are all set.
inline GradientField gradient_field(const Mesh& mesh, const DiscreteFunction& u, double alpha) {
    check_alpha(alpha);
    GradientField g;
    g.alpha = alpha;
    g.cone.resize(mesh.n_cells());
    parallel_for(mesh.n_cells(), [&](std::size_t k) {
        const Cell& c = mesh.cells[k];
        const Vec gk = cell_gradient(mesh, u, c.id);
        auto& out = g.cone[k];
        out.resize(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) {
            const Face& f = mesh.faces[c.faces[i]];
            const double r = alpha / c.distances[i] * (u.face[f.id] - u.cell[k] - gk.dot(f.barycentre - c.point));
            out[i] = gk + r * c.normals[i];
        }
    });
    return g;
}

/// Same, after reconstructing barycentric face values from the weights.
inline GradientField gradient_field(const Mesh& mesh, const EdgePartition& part, const BarycentricWeights& w,
                                    DiscreteFunction u, double alpha) {
    fill_barycentric_faces(mesh, part, w, u);
    return gradient_field(mesh, u, alpha);
}

/// y^{s s'} for one cell: grad_{K,s} u = sum_{s'} (u_{s'} - u_K) y^{s s'}.
struct YVectors {
    std::size_t m = 0;
    std::vector<Vec> y; // row-major [s][s']

    const Vec& operator()(std::size_t s, std::size_t sp) const { return y[s * m + sp]; }
};

inline YVectors y_vectors(const Mesh& mesh, Index K, double alpha) {
    const Cell& c = mesh.cells[K];
    YVectors Y;
    Y.m = c.size();
    Y.y.resize(Y.m * Y.m);
    for (std::size_t s = 0; s < Y.m; ++s) {
        const Vec xs = mesh.faces[c.faces[s]].barycentre - c.point;
        const double stab = alpha / c.distances[s];
        for (std::size_t sp = 0; sp < Y.m; ++sp) {
            const double area_ratio = mesh.faces[c.faces[sp]].measure / c.measure;
            const Vec& np = c.normals[sp];
            const double delta = (s == sp) ? 1.0 : 0.0;
            Y.y[s * Y.m + sp] = area_ratio * np + stab * (delta - area_ratio * np.dot(xs)) * c.normals[s];
        }
    }
    return Y;
}

} // namespace sushi
