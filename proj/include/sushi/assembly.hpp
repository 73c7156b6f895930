#pragma once

// Local flux matrices, numerical fluxes and the global SPD system.

#include <sushi/discrete_space.hpp>
#include <sushi/errors.hpp>
#include <sushi/gradient.hpp>
#include <sushi/mesh.hpp>
#include <sushi/parallel.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

namespace sushi {

using TensorFunction = std::function<Mat(const Vec&)>;

/// Eigenvalue range of a symmetric 2x2 matrix; throws unless symmetric positive definite.
inline std::pair<double, double> tensor_bounds(const Mat& t) {
    const double scale = t.cwiseAbs().maxCoeff();
    if (!t.allFinite() || std::abs(t(0, 1) - t(1, 0)) > 1e-12 * scale)
        throw NonSymmetricTensor("diffusion tensor is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> eig(t);
    const double lo = eig.eigenvalues()(0), hi = eig.eigenvalues()(1);
    if (!(lo > 0.0)) throw NonPositiveTensor("diffusion tensor has a non-positive eigenvalue " + std::to_string(lo));
    return {lo, hi};
}

/// Diffusion tensor, either constant per cell or a field sampled at cone centroids.
class TensorField {
public:
    static TensorField piecewise(std::vector<Mat> per_cell) {
        TensorField t;
        for (const auto& m : per_cell) t.extend(tensor_bounds(m));
        t.per_cell_ = std::move(per_cell);
        return t;
    }
    static TensorField constant(const Mesh& mesh, const Mat& value) {
        return piecewise(std::vector<Mat>(mesh.n_cells(), value));
    }
    static TensorField sampled(TensorFunction fn) {
        TensorField t;
        t.fn_ = std::move(fn);
        return t;
    }

    bool is_piecewise() const { return !per_cell_.empty(); }
    double lambda_min() const { return lo_; }
    double lambda_max() const { return hi_; }

    /// Value used on cone (K, local); sampled fields are checked on use.
    Mat on_cone(const Mesh& mesh, Index K, std::size_t local) const {
        if (is_piecewise()) return per_cell_.at(K);
        const Cell& c = mesh.cells[K];
        const Face& f = mesh.faces[c.faces[local]];
        const Vec centroid = (c.point + mesh.vertices[f.vertices[0]] + mesh.vertices[f.vertices[1]]) / 3.0;
        const Mat m = fn_(centroid);
        tensor_bounds(m);
        return m;
    }

    /// Lambda_{K,s} = integral of Lambda over the cone.
    Mat cone_integral(const Mesh& mesh, Index K, std::size_t local) const {
        return mesh.cells[K].cone_measures[local] * on_cone(mesh, K, local);
    }

    bool is_identity(const Mesh& mesh) const {
        for (const auto& c : mesh.cells)
            for (std::size_t i = 0; i < c.size(); ++i)
                if ((on_cone(mesh, c.id, i) - Mat::Identity()).cwiseAbs().maxCoeff() > 1e-14) return false;
        return true;
    }

private:
    void extend(std::pair<double, double> b) {
        lo_ = std::min(lo_, b.first);
        hi_ = std::max(hi_, b.second);
    }
    std::vector<Mat> per_cell_;
    TensorFunction fn_;
    double lo_ = std::numeric_limits<double>::infinity();
    double hi_ = 0.0;
};

struct LocalFluxMatrix {
    Index cell = no_index;
    Eigen::MatrixXd A; // over E_K x E_K
};

/// A_K^{s s'} = sum_{s''} y^{s'' s} . Lambda_{K,s''} y^{s'' s'}
inline LocalFluxMatrix local_matrix(const Mesh& mesh, Index K, const TensorField& tensor, double alpha) {
    check_alpha(alpha);
    const YVectors Y = y_vectors(mesh, K, alpha);
    const std::size_t m = Y.m;
    LocalFluxMatrix L;
    L.cell = K;
    L.A = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t k = 0; k < m; ++k) {
        const Mat lam = tensor.cone_integral(mesh, K, k);
        for (std::size_t i = 0; i < m; ++i) {
            const Vec li = lam * Y(k, i);
            for (std::size_t j = i; j < m; ++j) L.A(i, j) += Y(k, j).dot(li);
        }
    }
    L.A.triangularView<Eigen::StrictlyLower>() = L.A.transpose().triangularView<Eigen::StrictlyLower>();
    return L;
}

/// F_{K,s}(u) = sum_{s'} A_K^{s s'} (u_K - u_{s'}) for every s in E_K.
inline Eigen::VectorXd cell_fluxes(const Mesh& mesh, const LocalFluxMatrix& L, const DiscreteFunction& u) {
    const Cell& c = mesh.cells[L.cell];
    Eigen::VectorXd diff(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) diff(j) = u.cell[c.id] - u.face[c.faces[j]];
    return L.A * diff;
}

inline double flux(const Mesh& mesh, const LocalFluxMatrix& L, std::size_t local, const DiscreteFunction& u) {
    return cell_fluxes(mesh, L, u)(static_cast<Eigen::Index>(local));
}

inline Vec cone_centroid(const Mesh& mesh, Index K, std::size_t local) {
    const Cell& c = mesh.cells[K];
    const Face& f = mesh.faces[c.faces[local]];
    return (c.point + mesh.vertices[f.vertices[0]] + mesh.vertices[f.vertices[1]]) / 3.0;
}

/// sum over cones of |D_{K,s}| f(cone centroid); exact for affine f.
inline double rhs_cell_integral(const Mesh& mesh, Index K, const ScalarField& f) {
    const Cell& c = mesh.cells[K];
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s += c.cone_measures[i] * f(cone_centroid(mesh, K, i));
    return s;
}

/// Symmetric sparse matrix stored as its upper triangle (diagonal included) in CSR.
struct SymmetricMatrix {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr{0};
    std::vector<Index> col;
    std::vector<double> val;

    /// Nonzeros of the full matrix: both off-diagonal triangles plus the diagonal.
    std::size_t nnz_full() const {
        std::size_t diag = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) diag += static_cast<std::size_t>(col[k]) == i;
        return 2 * (val.size() - diag) + diag;
    }

    double operator()(std::size_t i, std::size_t j) const {
        if (i > j) std::swap(i, j);
        auto first = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
        auto last = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
        auto it = std::lower_bound(first, last, static_cast<Index>(j));
        return (it != last && *it == static_cast<Index>(j)) ? val[static_cast<std::size_t>(it - col.begin())] : 0.0;
    }

    double diagonal(std::size_t i) const { return (*this)(i, i); }

    void multiply(const std::vector<double>& x, std::vector<double>& y) const {
        y.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
                const auto j = static_cast<std::size_t>(col[k]);
                y[i] += val[k] * x[j];
                if (j != i) y[j] += val[k] * x[i];
            }
    }

    Eigen::MatrixXd dense() const {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
                const auto j = static_cast<Eigen::Index>(col[k]);
                M(static_cast<Eigen::Index>(i), j) = val[k];
                M(j, static_cast<Eigen::Index>(i)) = val[k];
            }
        return M;
    }
};

struct LinearSystem {
    UnknownNumbering numbering;
    SymmetricMatrix matrix;
    std::vector<double> rhs;
    std::size_t nnz = 0;        // structural nonzeros of the full matrix
    double asymmetry = 0.0;     // max |M_ij - M_ji| / max |M| before symmetric storage

    std::size_t size() const { return numbering.size(); }
};

namespace detail {

struct Triplet {
    Index row, col;
    double val;
};

// u_s as an affine expression of the retained unknowns.
struct FaceExpression {
    std::vector<std::pair<Index, double>> terms;
    double constant = 0.0;
};

inline FaceExpression face_expression(const Mesh& mesh, const EdgePartition& part, const BarycentricWeights& w,
                                      const UnknownNumbering& num, Index f, const ScalarField& boundary) {
    FaceExpression e;
    switch (part.kind[f]) {
    case FaceKind::Boundary: e.constant = boundary ? boundary(mesh.faces[f].barycentre) : 0.0; break;
    case FaceKind::Hybrid: e.terms.emplace_back(num.face(f), 1.0); break;
    case FaceKind::Barycentric:
        if (!w.has(f)) throw InconsistentWeights("barycentric face " + std::to_string(f) + " has no weights");
        for (const auto& t : w[f]) {
            if (t.kind == PointKind::Cell) {
                if (t.id < 0 || static_cast<std::size_t>(t.id) >= mesh.n_cells())
                    throw InconsistentWeights("weight references a missing cell");
                e.terms.emplace_back(num.cell(t.id), t.beta);
            } else {
                if (t.id < 0 || static_cast<std::size_t>(t.id) >= mesh.n_faces() || !part.hybrid(t.id))
                    throw InconsistentWeights("weight of face " + std::to_string(f) + " references a non-hybrid face");
                e.terms.emplace_back(num.face(t.id), t.beta);
            }
        }
        break;
    }
    return e;
}

} // namespace detail

/// Assemble the retained-unknown system by the cell/face increment loop:
/// each F_{K,s} is written over the retained unknowns after eliminating the
/// barycentric face values, added to row K, and subtracted from the rows the
/// test value v_s depends on. Dirichlet values go to the right-hand side.
inline LinearSystem assemble(const Mesh& mesh, const EdgePartition& part, const BarycentricWeights& w,
                             const TensorField& tensor, const ScalarField& source, const ScalarField& boundary,
                             double alpha) {
    check_alpha(alpha);
    LinearSystem sys;
    sys.numbering = number_unknowns(mesh, part);
    const auto& num = sys.numbering;
    const std::size_t n = num.size();
    sys.rhs.assign(n, 0.0);

    std::vector<LocalFluxMatrix> local(mesh.n_cells());
    parallel_for(mesh.n_cells(), [&](std::size_t k) { local[k] = local_matrix(mesh, static_cast<Index>(k), tensor, alpha); });

    std::vector<detail::FaceExpression> expr(mesh.n_faces());
    for (const auto& f : mesh.faces) expr[f.id] = detail::face_expression(mesh, part, w, num, f.id, boundary);

    std::vector<detail::Triplet> trip;
    std::vector<std::pair<Index, double>> a;
    for (const auto& cell : mesh.cells) {
        const auto& A = local[cell.id].A;
        const Index rowK = num.cell(cell.id);
        if (source) sys.rhs[rowK] += rhs_cell_integral(mesh, cell.id, source);
        for (std::size_t i = 0; i < cell.size(); ++i) {
            // F_{K,s_i}(u) = sum_r a_r u_r + c
            a.clear();
            double c = 0.0;
            a.emplace_back(rowK, A.row(static_cast<Eigen::Index>(i)).sum());
            for (std::size_t j = 0; j < cell.size(); ++j) {
                const double Aij = A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                const auto& e = expr[cell.faces[j]];
                for (const auto& [r, coef] : e.terms) a.emplace_back(r, -Aij * coef);
                c -= Aij * e.constant;
            }
            auto add_row = [&](Index row, double factor) {
                for (const auto& [col, v] : a) trip.push_back({row, col, factor * v});
                sys.rhs[row] -= factor * c;
            };
            add_row(rowK, 1.0);
            const Index f = cell.faces[i];
            if (part.kind[f] != FaceKind::Boundary)
                for (const auto& [r, coef] : expr[f].terms) add_row(r, -coef);
        }
    }

    // deterministic merge: stable sort keeps insertion order within an entry
    std::stable_sort(trip.begin(), trip.end(),
                     [](const auto& x, const auto& y) { return std::tie(x.row, x.col) < std::tie(y.row, y.col); });
    std::vector<detail::Triplet> merged;
    for (const auto& t : trip) {
        if (!merged.empty() && merged.back().row == t.row && merged.back().col == t.col)
            merged.back().val += t.val;
        else
            merged.push_back(t);
    }
    sys.nnz = merged.size();

    double scale = 0.0;
    for (const auto& t : merged) scale = std::max(scale, std::abs(t.val));
    auto& M = sys.matrix;
    M.n = n;
    M.row_ptr.assign(n + 1, 0);
    std::vector<double> diag(n, 0.0);
    std::vector<bool> has_diag(n, false);
    for (const auto& t : merged) {
        if (t.row == t.col) {
            diag[t.row] = t.val;
            has_diag[t.row] = true;
        }
        if (t.row < t.col) {
            // partner (col, row) exists structurally; look it up for the asymmetry diagnostic
            auto it = std::lower_bound(merged.begin(), merged.end(), std::make_pair(t.col, t.row), [](const auto& x, const auto& key) {
                return std::tie(x.row, x.col) < std::tie(key.first, key.second);
            });
            const double partner = (it != merged.end() && it->row == t.col && it->col == t.row) ? it->val : 0.0;
            sys.asymmetry = std::max(sys.asymmetry, std::abs(t.val - partner) / scale);
        }
        if (t.row <= t.col) {
            M.col.push_back(t.col);
            M.val.push_back(t.val);
            ++M.row_ptr[static_cast<std::size_t>(t.row) + 1];
        }
    }
    for (std::size_t i = 0; i < n; ++i) M.row_ptr[i + 1] += M.row_ptr[i];
    for (std::size_t i = 0; i < n; ++i)
        if (!has_diag[i] || !(diag[i] > 0.0))
            throw SingularAfterElimination("row " + std::to_string(i) + " has no positive diagonal after elimination");
    if (sys.asymmetry > 1e-10)
        throw InconsistentWeights("assembled matrix is not symmetric (relative asymmetry " + std::to_string(sys.asymmetry) + ")");
    return sys;
}

} // namespace sushi
