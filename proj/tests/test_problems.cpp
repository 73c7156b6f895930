#include <sushi/sushi.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace sushi;

namespace {

// -div(Lambda grad u) by central differences
double fd_source(const ScalarField& u, const Mat& L, const Vec& p, double h = 1e-4) {
    const Vec ex(h, 0), ey(0, h);
    const double uxx = (u(p + ex) - 2 * u(p) + u(p - ex)) / (h * h);
    const double uyy = (u(p + ey) - 2 * u(p) + u(p - ey)) / (h * h);
    const double uxy = (u(p + ex + ey) - u(p + ex - ey) - u(p - ex + ey) + u(p - ex - ey)) / (4 * h * h);
    return -(L(0, 0) * uxx + 2 * L(0, 1) * uxy + L(1, 1) * uyy);
}

Vec fd_grad(const ScalarField& u, const Vec& p, double h = 1e-6) {
    return {(u(p + Vec(h, 0)) - u(p - Vec(h, 0))) / (2 * h), (u(p + Vec(0, h)) - u(p - Vec(0, h))) / (2 * h)};
}

std::vector<Vec> sample_points(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> d(0.05, 0.95);
    std::vector<Vec> pts;
    for (int i = 0; i < n; ++i) pts.emplace_back(d(rng), d(rng));
    return pts;
}

void check_source(const ProblemSpec& p, const Mat& L) {
    for (const Vec& x : sample_points(25, 1)) {
        const double f = p.source(x);
        EXPECT_NEAR(f, fd_source(p.exact, L, x), 1e-6 * (1.0 + std::abs(f))) << p.name;
        EXPECT_NEAR((p.exact_grad(x) - fd_grad(p.exact, x)).norm(), 0.0, 1e-7) << p.name;
    }
}

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << text;
    return path;
}

} // namespace

TEST(Problems, SmoothSourcesMatchTheExactSolution) {
    Mat aniso;
    aniso << 1.5, 0.5, 0.5, 1.5;
    check_source(anisotropic_smooth(), aniso);
    check_source(isotropic_smooth(), Mat::Identity());
    const Mesh m = gen_rect(2, 2);
    EXPECT_TRUE(isotropic_smooth().tensor(m).is_identity(m));
    EXPECT_FALSE(anisotropic_smooth().tensor(m).is_identity(m));
    for (const auto& c : m.faces)
        if (c.boundary) { EXPECT_NEAR(anisotropic_smooth().exact(c.barycentre), 0.0, 1e-15); }
}

TEST(Problems, BarrierExactSolution) {
    using G = BarrierGeometry;
    EXPECT_DOUBLE_EQ(barrier_exact(Vec(0, 0)), 0.375);
    for (double x : {0.0, 0.13, 0.5, 0.77, 1.0}) {
        const double y1 = G::lower(x), y2 = G::upper(x);
        const double eps = 1e-12;
        EXPECT_NEAR(barrier_exact(Vec(x, y1 - eps)), barrier_exact(Vec(x, y1 + eps)), 1e-9);
        EXPECT_NEAR(barrier_exact(Vec(x, y2 - eps)), barrier_exact(Vec(x, y2 + eps)), 1e-9);
        EXPECT_NEAR(barrier_exact(Vec(x, y2 + eps)), -5.0, 1e-9);
        // normal flux continuity: lambda grad u . n across both lines
        const Vec n = Vec(-G::slope, 1.0).normalized();
        for (double y : {y1, y2}) {
            const double below = barrier_exact_grad(Vec(x, y - 1e-9)).dot(n) * (G::region(x, y - 1e-9) == 2 ? 1e-2 : 1.0);
            const double above = barrier_exact_grad(Vec(x, y + 1e-9)).dot(n) * (G::region(x, y + 1e-9) == 2 ? 1e-2 : 1.0);
            EXPECT_NEAR(below, above, 1e-12);
        }
    }
    for (const Vec& p : sample_points(40, 2)) {
        // away from the lines the gradient is the finite-difference gradient
        if (std::abs(G::phi1(p.x(), p.y())) < 1e-3 || std::abs(G::phi2(p.x(), p.y())) < 1e-3) continue;
        EXPECT_NEAR((barrier_exact_grad(p) - fd_grad(barrier_exact, p)).norm(), 0.0, 1e-5);
    }
}

TEST(Problems, BarrierSideFluxes) {
    const auto p = tilted_barrier();
    ASSERT_TRUE(p.exact_fluxes.has_value());
    const Mesh m = gen_tilted_barrier(2);
    const RegionMap r = p.regions(m);
    std::array<double, 4> total{};
    for (const auto& f : m.faces) {
        if (!f.boundary) continue;
        const Cell& c = m.cells[f.cells[0]];
        const Vec n = c.normals[c.local(f.id)];
        const double lambda = r[c.id] == 2 ? 1e-2 : 1.0;
        const double q = face_integral(m, f, [&](const Vec& x) { return lambda * barrier_exact_grad(x).dot(n); });
        total[static_cast<std::size_t>(*boundary_side(m, f))] += q;
    }
    for (std::size_t s = 0; s < 4; ++s) EXPECT_NEAR(total[s], (*p.exact_fluxes)[s], 1e-12);
    EXPECT_THROW(p.tensor(gen_rect(2, 2)), MissingRegionMap);
}

TEST(Problems, SuperadmissibleOracle) {
    const auto p = superadmissible_oracle(1.0, 100.0);
    const Mesh m = gen_rect(4, 2);
    const RegionMap r = p.regions(m);
    const TensorField t = p.tensor(m);
    for (const auto& c : m.cells) {
        EXPECT_EQ(r[c.id], c.point.x() < 0.5 ? 1 : 2);
        EXPECT_EQ(t.on_cone(m, c.id, 0), (c.point.x() < 0.5 ? 1.0 : 100.0) * Mat::Identity());
    }
    EXPECT_EQ(t.lambda_min(), 1.0);
    EXPECT_EQ(t.lambda_max(), 100.0);
    EXPECT_FALSE(p.has_exact());
    EXPECT_THROW(superadmissible_oracle(0.0, 1.0), NonPositiveTensor);
}

TEST(Problems, MakeProblemNames) {
    EXPECT_EQ(make_problem("anisotropic-smooth").name, "anisotropic-smooth");
    EXPECT_EQ(make_problem("isotropic-smooth").name, "isotropic-smooth");
    EXPECT_EQ(make_problem("tilted-barrier").name, "tilted-barrier");
    EXPECT_EQ(make_problem("superadmissible:1,100").tensor(gen_rect(2, 1)).lambda_max(), 100.0);
    EXPECT_THROW(make_problem("superadmissible:1"), InputError);
    EXPECT_THROW(make_problem("superadmissible:a,b"), InputError);
    EXPECT_THROW(make_problem("poisson"), InputError);
    EXPECT_THROW(make_problem("/nonexistent/problem.json"), IoError);
}

TEST(ProblemJson, PolynomialExactSolution) {
    const auto j = nlohmann::json::parse(R"({"name": "quad", "tensor": [[2.0, 0.3], [0.3, 1.0]],
                                              "exact": [[2, 0, 1.0], [1, 1, -0.5], [0, 3, 2.0], [0, 0, 1.0]]})");
    const auto p = problem_from_json(j);
    EXPECT_EQ(p.name, "quad");
    Mat L;
    L << 2.0, 0.3, 0.3, 1.0;
    check_source(p, L);
    EXPECT_DOUBLE_EQ(p.exact(Vec(1.0, 2.0)), 1.0 - 1.0 + 16.0 + 1.0);
    EXPECT_DOUBLE_EQ(p.boundary(Vec(0.5, 0.5)), p.exact(Vec(0.5, 0.5)));
}

TEST(ProblemJson, SplitTensorAndConstants) {
    const auto j = nlohmann::json::parse(R"({"tensor": {"split_x": 0.5, "left": [[1, 0], [0, 1]], "right": [[10, 0], [0, 10]]},
                                              "source": 2.0, "boundary": -1.0})");
    const auto p = problem_from_json(j);
    EXPECT_EQ(p.name, "custom");
    EXPECT_FALSE(p.has_exact());
    EXPECT_EQ(p.source(Vec(0.3, 0.3)), 2.0);
    EXPECT_EQ(p.boundary(Vec(0.0, 0.3)), -1.0);
    const Mesh m = gen_rect(4, 1);
    const RegionMap r = p.regions(m);
    EXPECT_EQ(r, RegionMap({1, 1, 2, 2}));
    EXPECT_EQ(p.tensor(m).lambda_max(), 10.0);
}

TEST(ProblemJson, Errors) {
    EXPECT_THROW(problem_from_json(nlohmann::json::parse(R"({"source": 1})")), InputError);
    EXPECT_THROW(problem_from_json(nlohmann::json::parse(R"({"tensor": [[1, 0, 0], [0, 1, 0]]})")), InputError);
    EXPECT_THROW(problem_from_json(nlohmann::json::parse(R"({"tensor": [[1, 0], [0, -1]]})")), NonPositiveTensor);
    EXPECT_THROW(problem_from_json(nlohmann::json::parse(R"({"tensor": [[1, 0.5], [0, 1]]})")), NonSymmetricTensor);
    EXPECT_THROW(problem_from_json(nlohmann::json::parse(R"({"tensor": [[1, 0], [0, 1]], "exact": [[-1, 0, 1]]})")),
                 InputError);
    EXPECT_THROW(problem_from_json(nlohmann::json::parse(R"({"tensor": "identity"})")), InputError);
    const auto bad = write_temp("sushi_bad_problem.json", "{\"tensor\": [[1, 0], [0, 1]]");
    EXPECT_THROW(read_problem(bad.string()), ParseError);
    std::filesystem::remove(bad);
}

TEST(ProblemJson, RunReproducesAnAffineSolution) {
    const auto path = write_temp("sushi_affine.json",
                                 R"({"name": "plane", "tensor": [[1, 0], [0, 1]], "exact": [[1, 0, 2], [0, 1, -1], [0, 0, 0.5]]})");
    RunConfig cfg;
    cfg.problem = path.string();
    for (const std::string mesh : {"tri:4", "ncrect:1"}) {
        for (auto policy : {PartitionPolicy::AllHybrid, PartitionPolicy::AllBarycentric}) {
            cfg.mesh = mesh;
            cfg.policy = policy;
            const RunResult r = run(cfg);
            ASSERT_TRUE(r.errors.has_value());
            EXPECT_LE(r.errors->eps_u, 1e-10);
            EXPECT_LE(r.errors->eps_grad, 1e-9);
            ASSERT_TRUE(r.errors->E.has_value());
            EXPECT_LE(*r.errors->E, 1e-10);
        }
    }
    std::filesystem::remove(path);
}
