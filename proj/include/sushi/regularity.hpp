#pragma once

#include <sushi/discrete_space.hpp>
#include <sushi/mesh.hpp>

#include <algorithm>
#include <optional>
#include <vector>

namespace sushi {

struct RegularityReport {
    double theta_D = 1.0;
    std::optional<double> theta_DB;
    std::vector<double> cell_ratio;   // per cell: max(h_K / d_{K,s}, d_{K,s} / d_{L,s})
    std::vector<double> cell_spread;  // per cell: max over barycentric faces of the weight spread term
};

/// Mesh regularity: max of d_{K,s}/d_{L,s} over interior faces and of
/// h_K/d_{K,s} over all cell-face pairs.
inline RegularityReport regularity(const Mesh& mesh) {
    RegularityReport rep;
    rep.cell_ratio.assign(mesh.n_cells(), 0.0);
    for (const auto& cell : mesh.cells) {
        double worst = 0.0;
        for (std::size_t i = 0; i < cell.size(); ++i) {
            const Face& f = mesh.faces[cell.faces[i]];
            worst = std::max(worst, cell.diameter / cell.distances[i]);
            if (!f.boundary) {
                const Cell& other = mesh.cells[f.other(cell.id)];
                worst = std::max(worst, cell.distances[i] / other.distances[other.local(f.id)]);
            }
        }
        rep.cell_ratio[cell.id] = worst;
        rep.theta_D = std::max(rep.theta_D, worst);
    }
    return rep;
}

inline double theta_D(const Mesh& mesh) { return regularity(mesh).theta_D; }

/// Adds the barycentric spread term sum_L |beta_s^L| |x_L - x_s|^2 / h_K^2
/// for every cell K and barycentric face s of K.
inline RegularityReport regularity(const Mesh& mesh, const EdgePartition& part, const BarycentricWeights& w) {
    RegularityReport rep = regularity(mesh);
    rep.cell_spread.assign(mesh.n_cells(), 0.0);
    double spread = 0.0;
    for (const auto& cell : mesh.cells)
        for (Index f : cell.faces) {
            if (!part.barycentric(f)) continue;
            if (!w.has(f)) throw MissingWeights("no weights for barycentric face " + std::to_string(f));
            double s = 0.0;
            for (const auto& t : w[f]) s += std::abs(t.beta) * (point_of(mesh, t) - mesh.faces[f].barycentre).squaredNorm();
            s /= cell.diameter * cell.diameter;
            rep.cell_spread[cell.id] = std::max(rep.cell_spread[cell.id], s);
            spread = std::max(spread, s);
        }
    rep.theta_DB = std::max(rep.theta_D, spread);
    return rep;
}

inline double theta_DB(const Mesh& mesh, const EdgePartition& part, const BarycentricWeights& w) {
    return *regularity(mesh, part, w).theta_DB;
}

} // namespace sushi
