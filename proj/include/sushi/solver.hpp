#pragma once

#include <sushi/assembly.hpp>
#include <sushi/errors.hpp>

#include <Eigen/Cholesky>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace sushi {

enum class Preconditioner { None, Jacobi };

struct SolveReport {
    std::string method;
    std::size_t iterations = 0;
    double residual = 0.0; // ||b - Mx|| / ||b||
    double seconds = 0.0;
};

struct Solution {
    std::vector<double> x;
    SolveReport report;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double true_residual(const SymmetricMatrix& M, const std::vector<double>& b, const std::vector<double>& x,
                            std::vector<double>& r) {
    M.multiply(x, r);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    return std::sqrt(dot(r, r));
}

} // namespace detail

/// Preconditioned conjugate gradient on the stored symmetric matrix.
/// max_iters = 0 selects 10 N.
inline Solution solve_cg(const SymmetricMatrix& M, const std::vector<double>& b, double tol = 1e-12,
                         std::size_t max_iters = 0, Preconditioner pc = Preconditioner::Jacobi) {
    if (!(tol > 0.0)) throw InputError("solver tolerance must be positive");
    if (b.size() != M.n) throw InputError("right-hand side size does not match the matrix");
    const auto start = std::chrono::steady_clock::now();
    const std::size_t n = M.n;
    if (max_iters == 0) max_iters = 10 * n;

    Solution sol;
    sol.report.method = pc == Preconditioner::Jacobi ? "cg-jacobi" : "cg";
    sol.x.assign(n, 0.0);
    const double bnorm = std::sqrt(detail::dot(b, b));
    auto finish = [&](double res) {
        sol.report.residual = res;
        sol.report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return sol;
    };
    if (bnorm == 0.0) return finish(0.0);

    std::vector<double> inv_diag(n, 1.0);
    if (pc == Preconditioner::Jacobi)
        for (std::size_t i = 0; i < n; ++i) {
            const double d = M.diagonal(i);
            if (!(d > 0.0)) throw BreakdownNonSPD("non-positive diagonal entry at row " + std::to_string(i));
            inv_diag[i] = 1.0 / d;
        }

    std::vector<double> r(b), z(n), p(n), q(n);
    std::size_t it = 0;
    // restart from the true residual when the recursive one has drifted
    while (true) {
        for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        p = z;
        double rz = detail::dot(r, z);
        double rnorm = std::sqrt(detail::dot(r, r));
        while (rnorm > tol * bnorm) {
            if (it >= max_iters)
                throw MaxIterations("conjugate gradient did not converge in " + std::to_string(max_iters) +
                                    " iterations (relative residual " + std::to_string(rnorm / bnorm) + ")");
            M.multiply(p, q);
            const double curv = detail::dot(p, q);
            if (!(curv > 0.0)) throw BreakdownNonSPD("non-positive curvature in conjugate gradient");
            const double a = rz / curv;
            for (std::size_t i = 0; i < n; ++i) {
                sol.x[i] += a * p[i];
                r[i] -= a * q[i];
            }
            ++it;
            for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
            const double rz_new = detail::dot(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
            rnorm = std::sqrt(detail::dot(r, r));
        }
        const double true_norm = detail::true_residual(M, b, sol.x, r);
        if (true_norm <= tol * bnorm) {
            sol.report.iterations = it;
            return finish(true_norm / bnorm);
        }
        if (it >= max_iters)
            throw MaxIterations("conjugate gradient did not reach the requested true residual");
    }
}

inline Solution solve_cg(const LinearSystem& sys, double tol = 1e-12, std::size_t max_iters = 0,
                         Preconditioner pc = Preconditioner::Jacobi) {
    return solve_cg(sys.matrix, sys.rhs, tol, max_iters, pc);
}

struct DenseSolution {
    std::vector<double> x;
    std::vector<double> pivots; // L_ii^2 of the Cholesky factor
    double min_pivot() const {
        double m = pivots.empty() ? 0.0 : pivots[0];
        for (double p : pivots) m = std::min(m, p);
        return m;
    }
};

/// Dense Cholesky solve; the squared diagonal of the factor certifies definiteness.
inline DenseSolution solve_dense(const Eigen::MatrixXd& M, const std::vector<double>& b) {
    if (M.rows() > 5000) throw InputError("dense solve limited to N <= 5000");
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("Cholesky factorisation failed");
    DenseSolution out;
    const Eigen::MatrixXd L = llt.matrixL();
    out.pivots.resize(static_cast<std::size_t>(M.rows()));
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        out.pivots[static_cast<std::size_t>(i)] = L(i, i) * L(i, i);
        if (!(L(i, i) > 0.0)) throw NotPositiveDefinite("non-positive pivot at row " + std::to_string(i));
    }
    const Eigen::VectorXd x = llt.solve(Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
    out.x.assign(x.data(), x.data() + x.size());
    return out;
}

inline DenseSolution solve_dense(const LinearSystem& sys) { return solve_dense(sys.matrix.dense(), sys.rhs); }

/// MatrixMarket coordinate real symmetric (lower triangle, 1-based).
inline void write_matrix_market(const SymmetricMatrix& M, std::ostream& os) {
    os << "%%MatrixMarket matrix coordinate real symmetric\n";
    os << M.n << ' ' << M.n << ' ' << M.val.size() << '\n';
    char buf[64];
    for (std::size_t i = 0; i < M.n; ++i)
        for (std::size_t k = M.row_ptr[i]; k < M.row_ptr[i + 1]; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", M.val[k]);
            os << M.col[k] + 1 << ' ' << i + 1 << ' ' << buf << '\n';
        }
}

inline void write_matrix_market(const SymmetricMatrix& M, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path);
    write_matrix_market(M, os);
}

inline void write_vector_market(const std::vector<double>& v, std::ostream& os) {
    os << "%%MatrixMarket matrix array real general\n" << v.size() << " 1\n";
    char buf[64];
    for (double x : v) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        os << buf << '\n';
    }
}

} // namespace sushi
