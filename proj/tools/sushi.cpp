#include <sushi/sushi.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace sushi;

namespace {

std::string g6(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

fs::path prepare_out(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
    return fs::path(dir);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << text;
}

struct SolveOptions {
    RunConfig cfg;
    std::string policy = "all-hybrid";
    std::string out = "sushi-out";
    unsigned seed = 0;
};

int cmd_solve(SolveOptions& o) {
    o.cfg.policy = parse_policy(o.policy);
    const RunResult r = run(o.cfg);
    const fs::path dir = prepare_out(o.out);

    export_vtk(r.mesh, r.u, r.gradient, (dir / "solution.vtk").string());
    export_csv({r.record}, (dir / "report.csv").string());
    write_matrix_market(r.system.matrix, (dir / "system.mtx").string());

    nlohmann::ordered_json m;
    m["problem"] = o.cfg.problem;
    m["mesh"] = o.cfg.mesh;
    m["policy"] = o.policy;
    m["alpha"] = o.cfg.alpha;
    m["tol"] = o.cfg.tol;
    m["cells"] = r.mesh.n_cells();
    m["faces"] = r.mesh.n_faces();
    m["hybrid_faces"] = r.partition.n_hybrid();
    m["barycentric_faces"] = r.partition.n_barycentric();
    m["N"] = r.system.size();
    m["NM"] = r.system.nnz;
    m["h"] = r.mesh.h;
    m["theta_D"] = theta_D(r.mesh);
    m["solver"] = {{"method", r.solution.report.method},
                   {"iterations", r.solution.report.iterations},
                   {"residual", r.solution.report.residual}};
    m["boundary_flux"] = {{"left", r.boundary_flux[0]},
                          {"right", r.boundary_flux[1]},
                          {"bottom", r.boundary_flux[2]},
                          {"top", r.boundary_flux[3]}};
    m["max_cell_balance_residual"] = r.fluxes.max_balance_residual();
    m["max_hybrid_conservation_residual"] = r.fluxes.max_hybrid_residual();
    if (r.errors) {
        m["errors"] = {{"eps_u", r.errors->eps_u},
                       {"eps_grad_u", r.errors->eps_grad},
                       {"eps_grad_u_cell", r.errors->eps_grad_cell},
                       {"eps_u_relative", r.errors->eps_u_rel},
                       {"eps_grad_u_cell_relative", r.errors->eps_grad_cell_rel},
                       {"seminorm_X", r.errors->seminorm},
                       {"eps_u_sampling", "cell points"},
                       {"eps_grad_u_sampling", "cone centroids"}};
    }
    write_text(dir / "manifest.json", m.dump(2) + "\n");

    std::cout << "mesh " << o.cfg.mesh << ", policy " << o.policy << ", alpha " << g6(o.cfg.alpha) << "\n";
    std::cout << "N=" << r.system.size() << " NM=" << r.system.nnz << "\n";
    std::cout << "iterations=" << r.solution.report.iterations << " residual=" << g6(r.solution.report.residual) << "\n";
    if (r.errors)
        std::cout << "eps(u)=" << g6(r.errors->eps_u) << " eps(grad u)=" << g6(r.errors->eps_grad)
                  << " eps_K(grad u)=" << g6(r.errors->eps_grad_cell) << "\n";
    std::cout << "boundary fluxes (x=0 x=1 y=0 y=1): " << g6(r.boundary_flux[0]) << ' ' << g6(r.boundary_flux[1]) << ' '
              << g6(r.boundary_flux[2]) << ' ' << g6(r.boundary_flux[3]) << "\n";
    std::cout << "wrote " << dir.string() << "/{solution.vtk,report.csv,system.mtx,manifest.json}\n";
    return 0;
}

struct ConvergenceOptions {
    SolveOptions solve;
    std::string family = "tri";
    std::vector<int> levels{4, 8, 16, 32};
    std::string replay;
    bool synthetic = false;
};

std::string level_mesh(const std::string& family, int n) {
    if (family == "rect") return "rect:" + std::to_string(n) + "x" + std::to_string(n);
    if (family == "tri" || family == "ncrect") return family + ":" + std::to_string(n);
    throw InputError("unknown mesh family '" + family + "' (expected rect, tri or ncrect)");
}

void print_slopes(const std::vector<RunRecord>& rows) {
    std::vector<std::pair<double, double>> su, sg, sc;
    for (const auto& r : rows) {
        su.emplace_back(r.h, r.eps_u);
        if (r.eps_grad > 0.0) sg.emplace_back(r.h, r.eps_grad);
        if (r.eps_grad_cell > 0.0) sc.emplace_back(r.h, r.eps_grad_cell);
    }
    std::cout << "slope eps(u)=" << g6(convergence_order(su));
    if (sg.size() == su.size()) std::cout << " slope eps(grad u)=" << g6(convergence_order(sg));
    if (sc.size() == su.size()) std::cout << " slope eps_K(grad u)=" << g6(convergence_order(sc));
    std::cout << "\n";
}

int cmd_convergence(ConvergenceOptions& o) {
    std::vector<RunRecord> rows;
    if (o.synthetic) {
        for (int n : {4, 8, 16, 32}) {
            RunRecord r;
            r.mesh = "synthetic:" + std::to_string(n);
            r.policy = "none";
            r.h = 1.0 / n;
            r.eps_u = 0.5 * r.h * r.h;
            rows.push_back(r);
        }
    } else if (!o.replay.empty()) {
        std::ifstream is(o.replay);
        if (!is) throw IoError("cannot open " + o.replay);
        rows = read_csv(is);
    } else {
        o.solve.cfg.policy = parse_policy(o.solve.policy);
        for (int n : o.levels) {
            RunConfig cfg = o.solve.cfg;
            cfg.mesh = level_mesh(o.family, n);
            const RunResult r = run(cfg);
            if (!r.errors) throw InputError("problem '" + cfg.problem + "' has no exact solution");
            rows.push_back(r.record);
            std::cout << cfg.mesh << ": N=" << r.record.N << " h=" << g6(r.record.h) << " eps(u)=" << g6(r.record.eps_u)
                      << " eps(grad u)=" << g6(r.record.eps_grad) << " eps_K(grad u)=" << g6(r.record.eps_grad_cell) << "\n";
        }
        const fs::path dir = prepare_out(o.solve.out);
        export_csv(rows, (dir / "convergence.csv").string());
    }
    for (const auto& r : rows)
        if (o.synthetic || !o.replay.empty())
            std::cout << r.mesh << ": h=" << g6(r.h) << " eps(u)=" << g6(r.eps_u) << "\n";
    print_slopes(rows);
    return 0;
}

int cmd_mesh_check(const std::string& spec) {
    const Mesh mesh = make_mesh(spec);
    const ValidationReport v = validate(mesh);
    const RegularityReport reg = regularity(mesh);
    std::cout << "cells=" << mesh.n_cells() << " faces=" << mesh.n_faces() << " h=" << g6(mesh.h) << "\n";
    std::cout << "theta_D=" << g6(reg.theta_D) << "\n";
    std::cout << "max identity residual=" << g6(v.max_identity()) << " max volume residual=" << g6(v.max_volume())
              << " area residual=" << g6(v.area_residual) << "\n";
    if (reg.theta_D > 100.0) std::cout << "warning: theta_D is large (thin or stretched cells)\n";
    for (const auto& e : v.topology_errors) std::cout << "topology: " << e << "\n";
    for (const auto& c : v.failures())
        std::cout << "cell " << c.cell << ": identity " << g6(c.identity) << " volume " << g6(c.volume) << " closure "
                  << g6(c.closure) << "\n";
    std::cout << (v.passed() ? "PASS" : "FAIL") << "\n";
    return v.passed() ? 0 : 1;
}

void add_run_options(CLI::App* app, SolveOptions& o) {
    app->add_option("--problem", o.cfg.problem,
                    "anisotropic-smooth | isotropic-smooth | tilted-barrier | superadmissible:L,R | FILE.json")
        ->capture_default_str();
    app->add_option("--policy", o.policy, "all-hybrid | all-barycentric | discontinuity")->capture_default_str();
    app->add_option("--alpha", o.cfg.alpha, "stabilisation coefficient")->capture_default_str();
    app->add_option("--tol", o.cfg.tol, "relative residual tolerance of the solver")->capture_default_str();
    app->add_option("--out", o.out, "output directory")->capture_default_str();
    app->add_option("--seed", o.seed, "random seed (property tests only)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SUSHI finite-volume schemes for anisotropic diffusion"};
    app.require_subcommand(1);

    SolveOptions solve;
    auto* s = app.add_subcommand("solve", "assemble and solve one problem on one mesh");
    add_run_options(s, solve);
    s->add_option("--mesh", solve.cfg.mesh, "rect:NxM | tri:N | ncrect:N | barrier:V | file:PATH")->capture_default_str();

    ConvergenceOptions conv;
    auto* c = app.add_subcommand("convergence", "refinement study with fitted orders");
    add_run_options(c, conv.solve);
    c->add_option("--family", conv.family, "rect | tri | ncrect")->capture_default_str();
    c->add_option("--levels", conv.levels, "refinement levels")->delimiter(',');
    c->add_option("--replay", conv.replay, "fit slopes from a stored convergence CSV");
    c->add_flag("--synthetic", conv.synthetic, "fit slopes on a synthetic C h^2 series");

    std::string check_mesh;
    auto* m = app.add_subcommand("mesh-check", "geometric identities and regularity of a mesh");
    m->add_option("--mesh", check_mesh, "rect:NxM | tri:N | ncrect:N | barrier:V | file:PATH")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (s->parsed()) return cmd_solve(solve);
        if (c->parsed()) return cmd_convergence(conv);
        return cmd_mesh_check(check_mesh);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
