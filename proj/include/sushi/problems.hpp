#pragma once

// Benchmark problems: tensor, source, Dirichlet data and exact solution.

#include <sushi/assembly.hpp>
#include <sushi/discrete_space.hpp>
#include <sushi/errors.hpp>
#include <sushi/mesh.hpp>
#include <sushi/mesh_gen.hpp>

#include <json.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sushi {

struct ProblemSpec {
    std::string name;
    std::function<TensorField(const Mesh&)> tensor;
    ScalarField source;
    ScalarField boundary;
    ScalarField exact;
    VectorField exact_grad;
    std::function<RegionMap(const Mesh&)> regions; // empty when the tensor is continuous
    std::optional<std::array<double, 4>> exact_fluxes; // left, right, bottom, top

    bool has_exact() const { return static_cast<bool>(exact) && static_cast<bool>(exact_grad); }
};

inline double bubble(const Vec& p) { return 16.0 * p.x() * (1.0 - p.x()) * p.y() * (1.0 - p.y()); }
inline Vec bubble_grad(const Vec& p) {
    const double x = p.x(), y = p.y();
    return {16.0 * (1.0 - 2.0 * x) * y * (1.0 - y), 16.0 * x * (1.0 - x) * (1.0 - 2.0 * y)};
}

/// Lambda = [[1.5, .5], [.5, 1.5]], u = 16 x(1-x) y(1-y), homogeneous Dirichlet.
inline ProblemSpec anisotropic_smooth() {
    ProblemSpec p;
    p.name = "anisotropic-smooth";
    Mat lam;
    lam << 1.5, 0.5, 0.5, 1.5;
    p.tensor = [lam](const Mesh& m) { return TensorField::constant(m, lam); };
    p.source = [](const Vec& q) {
        const double x = q.x(), y = q.y();
        return 48.0 * y * (1.0 - y) + 48.0 * x * (1.0 - x) - 16.0 * (1.0 - 2.0 * x) * (1.0 - 2.0 * y);
    };
    p.boundary = [](const Vec&) { return 0.0; };
    p.exact = bubble;
    p.exact_grad = bubble_grad;
    return p;
}

/// Same exact solution with Lambda = Id.
inline ProblemSpec isotropic_smooth() {
    ProblemSpec p;
    p.name = "isotropic-smooth";
    p.tensor = [](const Mesh& m) { return TensorField::constant(m, Mat::Identity()); };
    p.source = [](const Vec& q) {
        const double x = q.x(), y = q.y();
        return 32.0 * y * (1.0 - y) + 32.0 * x * (1.0 - x);
    };
    p.boundary = [](const Vec&) { return 0.0; };
    p.exact = bubble;
    p.exact_grad = bubble_grad;
    return p;
}

inline double barrier_exact(const Vec& q) {
    using G = BarrierGeometry;
    const double x = q.x(), y = q.y();
    switch (G::region(x, y)) {
    case 1: return -G::phi1(x, y);
    case 2: return -G::phi1(x, y) / 1e-2;
    default: return -G::phi2(x, y) - G::thickness / 1e-2;
    }
}

inline Vec barrier_exact_grad(const Vec& q) {
    const Vec g(BarrierGeometry::slope, -1.0);
    return BarrierGeometry::region(q.x(), q.y()) == 2 ? Vec(g / 1e-2) : g;
}

/// Three layers with lambda = 1, 1e-2, 1 separated by the lines phi1 = 0 and phi2 = 0.
inline ProblemSpec tilted_barrier() {
    ProblemSpec p;
    p.name = "tilted-barrier";
    p.regions = [](const Mesh& m) {
        if (m.regions().size() != m.n_cells()) throw MissingRegionMap("tilted barrier needs a mesh with a region map");
        return m.regions();
    };
    p.tensor = [regions = p.regions](const Mesh& m) {
        const RegionMap r = regions(m);
        std::vector<Mat> lam(m.n_cells());
        for (std::size_t k = 0; k < m.n_cells(); ++k) lam[k] = (r[k] == 2 ? 1e-2 : 1.0) * Mat::Identity();
        return TensorField::piecewise(std::move(lam));
    };
    p.source = [](const Vec&) { return 0.0; };
    p.boundary = barrier_exact;
    p.exact = barrier_exact;
    p.exact_grad = barrier_exact_grad;
    p.exact_fluxes = std::array<double, 4>{-0.2, 0.2, 1.0, -1.0};
    return p;
}

/// Isotropic lambda_left on x < 1/2 and lambda_right on x > 1/2, f = 0, g = 0.
inline ProblemSpec superadmissible_oracle(double lambda_left, double lambda_right) {
    if (!(lambda_left > 0.0) || !(lambda_right > 0.0)) throw NonPositiveTensor("lambda values must be positive");
    ProblemSpec p;
    p.name = "superadmissible";
    p.regions = [](const Mesh& m) {
        RegionMap r(m.n_cells());
        for (const auto& c : m.cells) r[c.id] = c.point.x() < 0.5 ? 1 : 2;
        return r;
    };
    p.tensor = [lambda_left, lambda_right](const Mesh& m) {
        std::vector<Mat> lam(m.n_cells());
        for (const auto& c : m.cells) lam[c.id] = (c.point.x() < 0.5 ? lambda_left : lambda_right) * Mat::Identity();
        return TensorField::piecewise(std::move(lam));
    };
    p.source = [](const Vec&) { return 0.0; };
    p.boundary = [](const Vec&) { return 0.0; };
    return p;
}

namespace detail {

struct Monomial {
    int i, j;
    double c;
};

inline double poly_eval(const std::vector<Monomial>& p, const Vec& q) {
    double s = 0.0;
    for (const auto& m : p) s += m.c * std::pow(q.x(), m.i) * std::pow(q.y(), m.j);
    return s;
}

// d^{a+b} / dx^a dy^b of sum c x^i y^j
inline double poly_derivative(const std::vector<Monomial>& p, int a, int b, const Vec& q) {
    double s = 0.0;
    for (const auto& m : p) {
        if (m.i < a || m.j < b) continue;
        double c = m.c;
        for (int k = 0; k < a; ++k) c *= m.i - k;
        for (int k = 0; k < b; ++k) c *= m.j - k;
        s += c * std::pow(q.x(), m.i - a) * std::pow(q.y(), m.j - b);
    }
    return s;
}

inline Mat read_tensor(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2 || j[0].size() != 2 || j[1].size() != 2)
        throw InputError("tensor must be a 2x2 array");
    Mat m;
    m << j[0][0].get<double>(), j[0][1].get<double>(), j[1][0].get<double>(), j[1][1].get<double>();
    tensor_bounds(m);
    return m;
}

} // namespace detail

/// Problem from a JSON descriptor:
///   {"name": ..., "tensor": [[a,b],[b,c]]                                   constant
///                 or {"split_x": s, "left": [[..]], "right": [[..]]},       two regions
///    "exact": [[i, j, c], ...]      u = sum c x^i y^j, source and boundary derived
///    or "source": value, "boundary": value}
inline ProblemSpec problem_from_json(const nlohmann::json& j) {
    ProblemSpec p;
    try {
        p.name = j.value("name", std::string("custom"));
        const auto& t = j.at("tensor");
        std::function<Mat(const Vec&)> lam_at;
        if (t.is_object()) {
            const double split = t.at("split_x").get<double>();
            const Mat left = detail::read_tensor(t.at("left")), right = detail::read_tensor(t.at("right"));
            lam_at = [=](const Vec& x) { return x.x() < split ? left : right; };
            p.regions = [split](const Mesh& m) {
                RegionMap r(m.n_cells());
                for (const auto& c : m.cells) r[c.id] = c.point.x() < split ? 1 : 2;
                return r;
            };
            p.tensor = [=](const Mesh& m) {
                std::vector<Mat> v(m.n_cells());
                for (const auto& c : m.cells) v[c.id] = lam_at(c.point);
                return TensorField::piecewise(std::move(v));
            };
        } else {
            const Mat lam = detail::read_tensor(t);
            lam_at = [lam](const Vec&) { return lam; };
            p.tensor = [lam](const Mesh& m) { return TensorField::constant(m, lam); };
        }
        if (j.contains("exact")) {
            std::vector<detail::Monomial> poly;
            for (const auto& m : j.at("exact")) poly.push_back({m.at(0).get<int>(), m.at(1).get<int>(), m.at(2).get<double>()});
            for (const auto& m : poly)
                if (m.i < 0 || m.j < 0) throw InputError("negative exponent in exact solution");
            p.exact = [poly](const Vec& q) { return detail::poly_eval(poly, q); };
            p.exact_grad = [poly](const Vec& q) {
                return Vec(detail::poly_derivative(poly, 1, 0, q), detail::poly_derivative(poly, 0, 1, q));
            };
            p.source = [poly, lam_at](const Vec& q) {
                const Mat L = lam_at(q);
                return -(L(0, 0) * detail::poly_derivative(poly, 2, 0, q) + 2.0 * L(0, 1) * detail::poly_derivative(poly, 1, 1, q) +
                         L(1, 1) * detail::poly_derivative(poly, 0, 2, q));
            };
            p.boundary = p.exact;
        } else {
            const double f = j.value("source", 0.0), g = j.value("boundary", 0.0);
            p.source = [f](const Vec&) { return f; };
            p.boundary = [g](const Vec&) { return g; };
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("invalid problem descriptor: ") + e.what());
    }
    return p;
}

inline ProblemSpec read_problem(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    try {
        return problem_from_json(nlohmann::json::parse(is));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what(), 0);
    }
}

/// anisotropic-smooth | isotropic-smooth | tilted-barrier | superadmissible:L,R | JSON path
inline ProblemSpec make_problem(const std::string& name) {
    if (name == "anisotropic-smooth") return anisotropic_smooth();
    if (name == "isotropic-smooth") return isotropic_smooth();
    if (name == "tilted-barrier") return tilted_barrier();
    const std::string prefix = "superadmissible:";
    if (name.rfind(prefix, 0) == 0) {
        const std::string rest = name.substr(prefix.size());
        const auto comma = rest.find(',');
        if (comma == std::string::npos) throw InputError("expected superadmissible:LEFT,RIGHT");
        try {
            return superadmissible_oracle(std::stod(rest.substr(0, comma)), std::stod(rest.substr(comma + 1)));
        } catch (const std::logic_error&) {
            throw InputError("expected superadmissible:LEFT,RIGHT");
        }
    }
    if (name.size() > 5 && name.substr(name.size() - 5) == ".json") return read_problem(name);
    throw InputError("unknown problem '" + name + "'");
}

} // namespace sushi
