#pragma once

// End-to-end pipeline: mesh, partition, weights, assembly, solve, post-processing.

#include <sushi/assembly.hpp>
#include <sushi/discrete_space.hpp>
#include <sushi/errors.hpp>
#include <sushi/gradient.hpp>
#include <sushi/mesh.hpp>
#include <sushi/mesh_gen.hpp>
#include <sushi/postproc.hpp>
#include <sushi/problems.hpp>
#include <sushi/regularity.hpp>
#include <sushi/solver.hpp>

#include <optional>
#include <regex>
#include <string>

namespace sushi {

/// rect:NxM | tri:N | ncrect:N | barrier:V | file:PATH
inline Mesh make_mesh(const std::string& spec) {
    std::smatch m;
    static const std::regex rect(R"(rect:(\d+)x(\d+))"), one(R"((tri|ncrect|barrier):(\d+))");
    auto count = [&spec](const std::string& s) {
        const long v = std::stol(s);
        if (v < 1 || v > 4096) throw InputError("mesh size out of range in '" + spec + "'");
        return static_cast<int>(v);
    };
    if (std::regex_match(spec, m, rect)) return gen_rect(count(m[1]), count(m[2]));
    if (std::regex_match(spec, m, one)) {
        const int n = count(m[2]);
        if (m[1] == "tri") return gen_tri(n);
        if (m[1] == "ncrect") return gen_nonconforming_rect(n);
        return gen_tilted_barrier(n);
    }
    if (spec.rfind("file:", 0) == 0) return read_mesh(spec.substr(5));
    throw InputError("unrecognised mesh '" + spec + "' (expected rect:NxM, tri:N, ncrect:N, barrier:V or file:PATH)");
}

struct RunConfig {
    std::string problem = "anisotropic-smooth";
    std::string mesh = "rect:8x6";
    PartitionPolicy policy = PartitionPolicy::AllHybrid;
    double alpha = default_alpha();
    double tol = 1e-12;
};

struct RunResult {
    Mesh mesh;
    ProblemSpec problem;
    RegionMap regions;
    EdgePartition partition;
    BarycentricWeights weights;
    LinearSystem system;
    Solution solution;
    DiscreteFunction u;
    GradientField gradient;
    FluxReport fluxes;
    std::array<double, 4> boundary_flux{};
    std::optional<ErrorReport> errors;
    RunRecord record;
};

inline RunResult run(const RunConfig& cfg, Mesh mesh) {
    check_alpha(cfg.alpha);
    RunResult r;
    r.mesh = std::move(mesh);
    r.problem = make_problem(cfg.problem);
    if (r.problem.regions) r.regions = r.problem.regions(r.mesh);
    const bool aligned = cfg.policy == PartitionPolicy::DiscontinuityAligned;
    const RegionMap* regions = aligned ? &r.regions : nullptr;
    r.partition = partition_faces(r.mesh, cfg.policy, regions);
    r.weights = compute_weights(r.mesh, r.partition, regions);
    const TensorField tensor = r.problem.tensor(r.mesh);
    r.system = assemble(r.mesh, r.partition, r.weights, tensor, r.problem.source, r.problem.boundary, cfg.alpha);
    r.solution = solve_cg(r.system, cfg.tol);
    r.u = reconstruct_faces(r.mesh, r.partition, r.weights, r.system.numbering, r.solution.x, r.problem.boundary);
    r.gradient = gradient_field(r.mesh, r.u, cfg.alpha);
    r.fluxes = composite_fluxes(r.mesh, r.partition, r.weights, tensor, r.u, r.problem.source, cfg.alpha);
    r.boundary_flux = boundary_flux_totals(r.mesh, r.fluxes.cell_face);
    if (r.problem.has_exact()) {
        r.errors = error_norms(r.mesh, r.u, cfg.alpha, r.problem.exact, r.problem.exact_grad);
        if (tensor.is_identity(r.mesh))
            r.errors->E = flux_consistency_E(r.mesh, r.partition, r.weights, tensor, r.problem.exact,
                                             r.problem.exact_grad, cfg.alpha);
    }

    r.record.mesh = cfg.mesh;
    r.record.policy = policy_name(cfg.policy);
    r.record.alpha = cfg.alpha;
    r.record.N = r.system.size();
    r.record.NM = r.system.nnz;
    r.record.h = r.mesh.h;
    if (r.errors) {
        r.record.eps_u = r.errors->eps_u;
        r.record.eps_grad = r.errors->eps_grad;
        r.record.eps_grad_cell = r.errors->eps_grad_cell;
    }
    r.record.flux = r.boundary_flux;
    return r;
}

inline RunResult run(const RunConfig& cfg) { return run(cfg, make_mesh(cfg.mesh)); }

} // namespace sushi
