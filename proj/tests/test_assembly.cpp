#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <random>

using namespace sushi;

namespace {

const double alpha = std::sqrt(2.0);

Mat aniso() {
    Mat m;
    m << 1.5, 0.5, 0.5, 1.5;
    return m;
}

struct Discretisation {
    Mesh mesh;
    EdgePartition part;
    BarycentricWeights w;
};

Discretisation setup(Mesh m, PartitionPolicy policy, const RegionMap* regions = nullptr) {
    Discretisation s{std::move(m), {}, {}};
    s.part = partition_faces(s.mesh, policy, regions);
    s.w = compute_weights(s.mesh, s.part, regions);
    return s;
}

const ScalarField zero = [](const Vec&) { return 0.0; };

// Maps retained unknowns of `part` to the all-hybrid unknowns (cells, then every interior face).
Eigen::MatrixXd prolongation(const Mesh& m, const EdgePartition& part, const BarycentricWeights& w) {
    const auto num = number_unknowns(m, part);
    const auto full = number_unknowns(m, partition_faces(m, PartitionPolicy::AllHybrid));
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(full.size(), num.size());
    for (std::size_t k = 0; k < m.n_cells(); ++k) P(k, k) = 1.0;
    for (const auto& f : m.faces) {
        if (f.boundary) continue;
        const Index row = full.face(f.id);
        if (part.hybrid(f.id)) {
            P(row, num.face(f.id)) = 1.0;
            continue;
        }
        for (const auto& t : w[f.id]) P(row, t.kind == PointKind::Cell ? num.cell(t.id) : num.face(t.id)) += t.beta;
    }
    return P;
}

DiscreteFunction expand(const Mesh& m, const EdgePartition& part, const BarycentricWeights& w,
                        const UnknownNumbering& num, const Eigen::VectorXd& x) {
    std::vector<double> v(x.data(), x.data() + x.size());
    return reconstruct_faces(m, part, w, num, v);
}

} // namespace

TEST(LocalMatrix, UnitSquare) {
    RawMesh raw;
    raw.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    raw.cells = {{0, 1, 2, 3}};
    const Mesh m = compute_geometry(raw);
    const auto id = TensorField::constant(m, Mat::Identity());
    const auto A = local_matrix(m, 0, id, alpha).A;
    EXPECT_LE((A - 2.0 * Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-14);
    // alpha = 1: opposite faces couple with -1/2
    Eigen::MatrixXd B(4, 4);
    B << 1.5, 0, -0.5, 0, 0, 1.5, 0, -0.5, -0.5, 0, 1.5, 0, 0, -0.5, 0, 1.5;
    EXPECT_LE((local_matrix(m, 0, id, 1.0).A - B).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(LocalMatrix, QuadraticFormIsTheConeSum) {
    std::mt19937 rng(1);
    for (const Mesh& m : {gen_tri(3), gen_nonconforming_rect(1), gen_tilted_barrier(1)}) {
        const auto tensor = TensorField::constant(m, aniso());
        DiscreteFunction u{oracle::random_vector(m.n_cells(), rng), oracle::random_vector(m.n_faces(), rng)};
        const auto g = gradient_field(m, u, alpha);
        for (const auto& c : m.cells) {
            const auto L = local_matrix(m, c.id, tensor, alpha);
            Eigen::VectorXd d(c.size());
            for (std::size_t j = 0; j < c.size(); ++j) d(j) = u.cell[c.id] - u.face[c.faces[j]];
            double cones = 0.0;
            for (std::size_t i = 0; i < c.size(); ++i)
                cones += g.cone[c.id][i].dot(tensor.cone_integral(m, c.id, i) * g.cone[c.id][i]);
            EXPECT_NEAR(d.dot(L.A * d), cones, 1e-10 * (1.0 + cones));
            EXPECT_LE((L.A - L.A.transpose()).cwiseAbs().maxCoeff(), 0.0);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(L.A);
            EXPECT_GT(eig.eigenvalues()(0), 0.0);
        }
    }
}

TEST(Fluxes, AffineFunctionsGiveExactFluxes) {
    const Vec G(0.8, -1.7);
    auto phi = [&G](const Vec& x) { return 2.0 + G.dot(x); };
    for (const Mesh& m : {gen_tri(4), gen_nonconforming_rect(1), gen_tilted_barrier(3)}) {
        const auto tensor = TensorField::constant(m, aniso());
        const auto u = interpolate(m, phi);
        for (const auto& c : m.cells) {
            const auto F = cell_fluxes(m, local_matrix(m, c.id, tensor, alpha), u);
            for (std::size_t i = 0; i < c.size(); ++i) {
                const double exact = -m.faces[c.faces[i]].measure * (aniso() * G).dot(c.normals[i]);
                EXPECT_NEAR(F(i), exact, 1e-10);
                EXPECT_DOUBLE_EQ(flux(m, local_matrix(m, c.id, tensor, alpha), i, u), F(i));
            }
        }
    }
}

TEST(Fluxes, ConstantsCarryNoFlux) {
    const Mesh m = gen_nonconforming_rect(1);
    const auto tensor = TensorField::constant(m, aniso());
    const auto u = interpolate(m, [](const Vec&) { return -4.0; });
    for (const auto& c : m.cells) EXPECT_LE(cell_fluxes(m, local_matrix(m, c.id, tensor, alpha), u).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Rhs, ConeQuadrature) {
    const Mesh m = gen_nonconforming_rect(1);
    for (const auto& c : m.cells) {
        EXPECT_NEAR(rhs_cell_integral(m, c.id, [](const Vec&) { return 1.0; }), c.measure, 1e-15);
        // exact for affine integrands: integral = |K| f(centroid)
        auto f = [](const Vec& x) { return 1.0 + 3.0 * x.x() - 2.0 * x.y(); };
        EXPECT_NEAR(rhs_cell_integral(m, c.id, f), c.measure * f(c.centroid), 1e-14);
    }
}

TEST(Assembly, Table1Counts) {
    struct Row {
        Mesh mesh;
        std::size_t n_h, nm_h, n_b, nm_b;
    };
    const Row rows[] = {{gen_rect(8, 6), 130, 874, 48, 488},
                        {gen_nonconforming_rect(2), 182, 1334, 64, 724},
                        {gen_rect(8, 10), 222, 1542, 80, 864}};
    for (const auto& r : rows) {
        const auto tensor = TensorField::constant(r.mesh, aniso());
        const auto h = setup(r.mesh, PartitionPolicy::AllHybrid);
        const auto sh = assemble(h.mesh, h.part, h.w, tensor, zero, zero, alpha);
        EXPECT_EQ(sh.size(), r.n_h);
        EXPECT_EQ(sh.nnz, r.nm_h);
        EXPECT_EQ(sh.matrix.nnz_full(), r.nm_h);
        const auto b = setup(r.mesh, PartitionPolicy::AllBarycentric);
        const auto sb = assemble(b.mesh, b.part, b.w, tensor, zero, zero, alpha);
        EXPECT_EQ(sb.size(), r.n_b);
        EXPECT_EQ(sb.nnz, r.nm_b);
        EXPECT_EQ(sb.matrix.nnz_full(), r.nm_b);
    }
}

TEST(Assembly, MatrixIsTheBilinearForm) {
    for (const Mesh& mesh : {gen_rect(4, 4), gen_tri(2), gen_nonconforming_rect(1)}) {
        for (auto policy : {PartitionPolicy::AllHybrid, PartitionPolicy::AllBarycentric}) {
            const auto s = setup(mesh, policy);
            const auto tensor = TensorField::constant(s.mesh, aniso());
            const auto sys = assemble(s.mesh, s.part, s.w, tensor, zero, zero, alpha);
            const Eigen::MatrixXd M = sys.matrix.dense();
            for (int trial = 0; trial < 3; ++trial) {
                const Eigen::VectorXd x = Eigen::VectorXd::Random(M.rows()), y = Eigen::VectorXd::Random(M.rows());
                const auto u = expand(s.mesh, s.part, s.w, sys.numbering, x);
                const auto v = expand(s.mesh, s.part, s.w, sys.numbering, y);
                const double form = oracle::cone_bilinear(s.mesh, tensor, u, v, alpha);
                EXPECT_NEAR(x.dot(M * y), form, 1e-10 * (1.0 + std::abs(form)));
            }
        }
    }
}

TEST(Assembly, EliminationMatchesProlongedHybridSystem) {
    auto source = [](const Vec& x) { return 1.0 + x.x() * x.y(); };
    for (const Mesh& mesh : {gen_tri(4), gen_nonconforming_rect(1), gen_tilted_barrier(1)}) {
        const auto tensor = TensorField::constant(mesh, aniso());
        const auto h = setup(mesh, PartitionPolicy::AllHybrid);
        const auto full = assemble(h.mesh, h.part, h.w, tensor, source, zero, alpha);
        const Eigen::MatrixXd MH = full.matrix.dense();
        const Eigen::VectorXd bH = Eigen::Map<const Eigen::VectorXd>(full.rhs.data(), full.rhs.size());
        std::vector<Discretisation> composites;
        composites.push_back(setup(mesh, PartitionPolicy::AllBarycentric));
        if (!mesh.regions().empty())
            composites.push_back(setup(mesh, PartitionPolicy::DiscontinuityAligned, &mesh.regions()));
        for (const auto& s : composites) {
            const auto sys = assemble(s.mesh, s.part, s.w, tensor, source, zero, alpha);
            const Eigen::MatrixXd P = prolongation(s.mesh, s.part, s.w);
            const Eigen::MatrixXd ref = P.transpose() * MH * P;
            const Eigen::VectorXd rhs = P.transpose() * bH;
            const double scale = oracle::max_abs(ref);
            EXPECT_LE(oracle::max_abs(sys.matrix.dense() - ref), 1e-12 * scale);
            for (std::size_t i = 0; i < sys.size(); ++i) EXPECT_NEAR(sys.rhs[i], rhs(i), 1e-12 * (1.0 + rhs.cwiseAbs().maxCoeff()));
            EXPECT_LE(sys.asymmetry, 1e-12);
        }
    }
}

TEST(Assembly, TwoPointOracleOnSuperadmissibleMeshes) {
    const Mesh m = gen_rect(8, 6);
    for (auto [ll, lr] : {std::pair{1.0, 1.0}, std::pair{1.0, 100.0}}) {
        const ProblemSpec p = superadmissible_oracle(ll, lr);
        const RegionMap regions = p.regions(m);
        const TensorField tensor = p.tensor(m);
        std::vector<double> lambda(m.n_cells());
        for (const auto& c : m.cells) lambda[c.id] = c.point.x() < 0.5 ? ll : lr;
        for (auto policy : {PartitionPolicy::AllHybrid, PartitionPolicy::AllBarycentric, PartitionPolicy::DiscontinuityAligned}) {
            const auto s = setup(m, policy, policy == PartitionPolicy::DiscontinuityAligned ? &regions : nullptr);
            const auto sys = assemble(s.mesh, s.part, s.w, tensor, zero, zero, alpha);
            std::vector<bool> hybrid(m.n_faces());
            for (const auto& f : m.faces) hybrid[f.id] = s.part.hybrid(f.id);
            const Eigen::MatrixXd ref = oracle::two_point_matrix(m, lambda, hybrid);
            ASSERT_EQ(static_cast<std::size_t>(ref.rows()), sys.size());
            EXPECT_LE(oracle::max_abs(sys.matrix.dense() - ref), 1e-12 * oracle::max_abs(ref)) << policy_name(policy);
            if (policy == PartitionPolicy::DiscontinuityAligned) {
                // eliminating the interface unknowns gives harmonic averaging there
                const Eigen::MatrixXd schur = oracle::eliminate_faces(sys.matrix.dense(), static_cast<Index>(m.n_cells()));
                const Eigen::MatrixXd harm = oracle::harmonic_two_point_matrix(m, lambda);
                for (const auto& f : m.faces) {
                    if (f.boundary || !s.part.hybrid(f.id)) continue;
                    EXPECT_NEAR(schur(f.cells[0], f.cells[1]), harm(f.cells[0], f.cells[1]), 1e-12 * oracle::max_abs(harm));
                }
            }
        }
    }
}

TEST(Assembly, DirichletAffineSolutionIsReproduced) {
    auto g = [](const Vec& x) { return 1.0 - 0.5 * x.x() + 2.0 * x.y(); };
    for (const Mesh& mesh : {gen_tri(4), gen_nonconforming_rect(1)}) {
        for (auto policy : {PartitionPolicy::AllHybrid, PartitionPolicy::AllBarycentric}) {
            const auto s = setup(mesh, policy);
            const auto tensor = TensorField::constant(s.mesh, aniso());
            const auto sys = assemble(s.mesh, s.part, s.w, tensor, zero, g, alpha);
            const Eigen::MatrixXd M = sys.matrix.dense();
            const Eigen::VectorXd x = M.ldlt().solve(Eigen::Map<const Eigen::VectorXd>(sys.rhs.data(), sys.rhs.size()));
            for (const auto& c : s.mesh.cells) EXPECT_NEAR(x(c.id), g(c.point), 1e-10);
        }
    }
}

TEST(Assembly, SpdAndSymmetricStorage) {
    const auto s = setup(gen_nonconforming_rect(1), PartitionPolicy::AllBarycentric);
    const auto sys = assemble(s.mesh, s.part, s.w, TensorField::constant(s.mesh, aniso()), zero, zero, alpha);
    const auto& M = sys.matrix;
    for (std::size_t i = 0; i < M.n; ++i)
        for (std::size_t k = M.row_ptr[i]; k < M.row_ptr[i + 1]; ++k) {
            EXPECT_GE(static_cast<std::size_t>(M.col[k]), i);
            if (k > M.row_ptr[i]) { EXPECT_LT(M.col[k - 1], M.col[k]); }
        }
    const Eigen::MatrixXd D = M.dense();
    EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(D).info(), Eigen::Success);
    std::vector<double> x(M.n), y;
    for (std::size_t i = 0; i < M.n; ++i) x[i] = std::sin(double(i));
    M.multiply(x, y);
    const Eigen::VectorXd ref = D * Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
    for (std::size_t i = 0; i < M.n; ++i) EXPECT_NEAR(y[i], ref(i), 1e-12);
    EXPECT_EQ(M(3, 1), M(1, 3));
    EXPECT_EQ(M.diagonal(0), D(0, 0));
}

TEST(Assembly, TensorErrors) {
    Mat ns;
    ns << 1.0, 0.2, 0.0, 1.0;
    EXPECT_THROW(tensor_bounds(ns), NonSymmetricTensor);
    Mat neg;
    neg << 1.0, 2.0, 2.0, 1.0;
    EXPECT_THROW(tensor_bounds(neg), NonPositiveTensor);
    EXPECT_THROW(TensorField::piecewise({Mat::Identity(), neg}), NonPositiveTensor);
    const auto [lo, hi] = tensor_bounds(aniso());
    EXPECT_NEAR(lo, 1.0, 1e-14);
    EXPECT_NEAR(hi, 2.0, 1e-14);

    const auto s = setup(gen_rect(2, 2), PartitionPolicy::AllHybrid);
    const auto bad = TensorField::sampled([&neg](const Vec& x) { return x.x() > 0.7 ? neg : Mat(Mat::Identity()); });
    EXPECT_THROW(assemble(s.mesh, s.part, s.w, bad, zero, zero, alpha), NonPositiveTensor);
    const auto good = TensorField::sampled([](const Vec& x) { return Mat((1.0 + x.x()) * Mat::Identity()); });
    EXPECT_NO_THROW(assemble(s.mesh, s.part, s.w, good, zero, zero, alpha));
    EXPECT_THROW(local_matrix(s.mesh, 0, good, 0.0), InputError);
}

TEST(Assembly, InconsistentWeights) {
    const Mesh m = gen_rect(3, 3);
    const auto tensor = TensorField::constant(m, Mat::Identity());
    const auto part = partition_faces(m, PartitionPolicy::AllBarycentric);
    BarycentricWeights empty;
    empty.terms.resize(m.n_faces());
    EXPECT_THROW(assemble(m, part, empty, tensor, zero, zero, alpha), InconsistentWeights);

    BarycentricWeights w = compute_weights(m, part);
    const Index f = [&] {
        for (const auto& face : m.faces)
            if (!face.boundary) return face.id;
        return no_index;
    }();
    w.terms[f] = {{PointKind::Face, f, 1.0}};
    EXPECT_THROW(assemble(m, part, w, tensor, zero, zero, alpha), InconsistentWeights);
}

TEST(Assembly, DeterministicAcrossThreadCounts) {
    const auto s = setup(gen_tri(16), PartitionPolicy::AllBarycentric);
    const auto tensor = TensorField::constant(s.mesh, aniso());
    auto source = [](const Vec& x) { return std::cos(x.x()) + x.y(); };
    setenv("SUSHI_THREADS", "1", 1);
    const auto a = assemble(s.mesh, s.part, s.w, tensor, source, zero, alpha);
    setenv("SUSHI_THREADS", "4", 1);
    const auto b = assemble(s.mesh, s.part, s.w, tensor, source, zero, alpha);
    unsetenv("SUSHI_THREADS");
    EXPECT_EQ(a.matrix.col, b.matrix.col);
    EXPECT_EQ(a.matrix.val, b.matrix.val);
    EXPECT_EQ(a.rhs, b.rhs);
}
