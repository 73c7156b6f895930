#include <sushi/discrete_space.hpp>
#include <sushi/mesh_gen.hpp>
#include <sushi/regularity.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace sushi;

namespace {

double affine(const Vec& x) { return 0.7 - 1.3 * x.x() + 2.1 * x.y(); }

RegionMap split_regions(const Mesh& m, double x) {
    RegionMap r(m.n_cells());
    for (const auto& c : m.cells) r[c.id] = c.point.x() < x ? 1 : 2;
    return r;
}

} // namespace

TEST(Partition, PolicyCounts) {
    const Mesh m = gen_rect(8, 6);
    const auto h = partition_faces(m, PartitionPolicy::AllHybrid);
    EXPECT_EQ(h.n_hybrid(), 82u);
    EXPECT_EQ(h.n_barycentric(), 0u);
    EXPECT_EQ(h.count(FaceKind::Boundary), 28u);
    const auto b = partition_faces(m, PartitionPolicy::AllBarycentric);
    EXPECT_EQ(b.n_hybrid(), 0u);
    EXPECT_EQ(b.n_barycentric(), 82u);

    const RegionMap r = split_regions(m, 0.5);
    const auto d = partition_faces(m, PartitionPolicy::DiscontinuityAligned, &r);
    EXPECT_EQ(d.n_hybrid(), 6u);
    for (const auto& f : m.faces)
        if (d.hybrid(f.id)) { EXPECT_NE(r[f.cells[0]], r[f.cells[1]]); }
}

TEST(Partition, DiscontinuityNeedsRegions) {
    const Mesh m = gen_rect(4, 4);
    EXPECT_THROW(partition_faces(m, PartitionPolicy::DiscontinuityAligned), MissingRegionMap);
    RegionMap empty;
    EXPECT_THROW(partition_faces(m, PartitionPolicy::DiscontinuityAligned, &empty), MissingRegionMap);
    RegionMap short_map(3, 1);
    EXPECT_THROW(partition_faces(m, PartitionPolicy::DiscontinuityAligned, &short_map), MissingRegionMap);
}

TEST(Partition, BarrierThinLayerFacesStayHybrid) {
    const Mesh m = gen_tilted_barrier(1);
    const auto part = partition_faces(m, PartitionPolicy::DiscontinuityAligned, &m.regions());
    // 20 faces on each discontinuity line are hybrid, plus the 9 vertical faces inside the one-cell layer
    EXPECT_EQ(part.n_hybrid(), 29u);
    EXPECT_EQ(number_unknowns(m, part).size(), 239u);
    const auto plain = partition_faces(m, PartitionPolicy::DiscontinuityAligned, &m.regions(), false);
    EXPECT_EQ(plain.n_hybrid(), 20u);
}

TEST(Partition, ParsePolicy) {
    EXPECT_EQ(parse_policy("all-hybrid"), PartitionPolicy::AllHybrid);
    EXPECT_EQ(parse_policy("all-barycentric"), PartitionPolicy::AllBarycentric);
    EXPECT_EQ(parse_policy("discontinuity"), PartitionPolicy::DiscontinuityAligned);
    EXPECT_THROW(parse_policy("hybrid"), InputError);
    for (auto p : {PartitionPolicy::AllHybrid, PartitionPolicy::AllBarycentric, PartitionPolicy::DiscontinuityAligned})
        EXPECT_EQ(parse_policy(policy_name(p)), p);
}

TEST(Numbering, CellsThenHybridFacesInIdOrder) {
    const Mesh m = gen_rect(3, 2);
    const auto part = partition_faces(m, PartitionPolicy::AllHybrid);
    const auto num = number_unknowns(m, part);
    EXPECT_EQ(num.size(), m.n_cells() + m.n_interior_faces());
    for (Index k = 0; k < static_cast<Index>(m.n_cells()); ++k) EXPECT_EQ(num.cell(k), k);
    Index expected = static_cast<Index>(m.n_cells());
    for (const auto& f : m.faces) {
        if (f.boundary) {
            EXPECT_EQ(num.face(f.id), no_index);
            continue;
        }
        EXPECT_EQ(num.face(f.id), expected);
        EXPECT_EQ(num.unknown_face[expected - m.n_cells()], f.id);
        ++expected;
    }
}

TEST(Weights, MidpointOnUniformRectangles) {
    const Mesh m = gen_rect(5, 4);
    const auto part = partition_faces(m, PartitionPolicy::AllBarycentric);
    const auto w = compute_weights(m, part);
    for (const auto& f : m.faces) {
        if (f.boundary) {
            EXPECT_FALSE(w.has(f.id));
            continue;
        }
        ASSERT_EQ(w[f.id].size(), 2u);
        for (const auto& t : w[f.id]) {
            EXPECT_EQ(t.kind, PointKind::Cell);
            EXPECT_NEAR(t.beta, 0.5, 1e-15);
        }
    }
}

TEST(Weights, ResidualsOnEveryFamily) {
    for (const Mesh& m : {gen_tri(6), gen_nonconforming_rect(2), gen_tilted_barrier(1), gen_tilted_barrier(3)}) {
        const auto part = partition_faces(m, PartitionPolicy::AllBarycentric);
        const auto w = compute_weights(m, part);
        for (const auto& f : m.faces) EXPECT_EQ(w.has(f.id), !f.boundary);
        const auto r = weight_residuals(m, w);
        EXPECT_LE(r.sum, 1e-12);
        EXPECT_LE(r.point, 1e-12);
        // independent check of the two identities
        for (const auto& f : m.faces) {
            if (!w.has(f.id)) continue;
            double s = 0.0;
            Vec x = Vec::Zero();
            for (const auto& t : w[f.id]) {
                s += t.beta;
                x += t.beta * m.cells[t.id].point;
            }
            EXPECT_NEAR(s, 1.0, 1e-12);
            EXPECT_NEAR((x - f.barycentre).norm(), 0.0, 1e-12);
        }
    }
}

TEST(Weights, DiscontinuityWeightsStayInRegion) {
    const Mesh m = gen_tilted_barrier(2);
    const auto part = partition_faces(m, PartitionPolicy::DiscontinuityAligned, &m.regions());
    const auto w = compute_weights(m, part, &m.regions());
    EXPECT_LE(weight_residuals(m, w).point, 1e-12);
    for (const auto& f : m.faces) {
        if (!part.barycentric(f.id)) continue;
        const int region = m.regions()[f.cells[0]];
        for (const auto& t : w[f.id])
            if (t.kind == PointKind::Cell) { EXPECT_EQ(m.regions()[t.id], region); }
            else EXPECT_TRUE(part.hybrid(t.id));
    }
}

TEST(Weights, AffineReproduction) {
    for (const Mesh& m : {gen_tri(5), gen_nonconforming_rect(1), gen_tilted_barrier(1)}) {
        const auto part = partition_faces(m, PartitionPolicy::AllBarycentric);
        const auto w = compute_weights(m, part);
        const DiscreteFunction u = interpolate(m, part, w, affine, affine);
        for (const auto& f : m.faces) EXPECT_NEAR(u.face[f.id], affine(f.barycentre), 1e-12);
    }
}

TEST(Weights, NoValidCombination) {
    RawMesh raw;
    raw.vertices = {{0, 0}, {1, 0}, {2, 0}, {2, 1}, {1, 1}, {0, 1}};
    raw.cells = {{0, 1, 4, 5}, {1, 2, 3, 4}};
    raw.cell_points = {{0.5, 0.3}, {1.5, 0.3}};
    const Mesh m = compute_geometry(raw);
    const auto part = partition_faces(m, PartitionPolicy::AllBarycentric);
    EXPECT_THROW(compute_weights(m, part), NoValidCombination);
}

TEST(Weights, MissingWeightsDetected) {
    const Mesh m = gen_rect(2, 2);
    const auto part = partition_faces(m, PartitionPolicy::AllBarycentric);
    BarycentricWeights empty;
    empty.terms.resize(m.n_faces());
    DiscreteFunction u = interpolate(m, affine);
    EXPECT_THROW(fill_barycentric_faces(m, part, empty, u), MissingWeights);
    EXPECT_THROW(regularity(m, part, empty), MissingWeights);
}

TEST(Weights, CsvListsEveryTerm) {
    const Mesh m = gen_rect(2, 1);
    const auto part = partition_faces(m, PartitionPolicy::AllBarycentric);
    std::ostringstream os;
    write_weights_csv(compute_weights(m, part), os);
    EXPECT_EQ(os.str(), "face,kind,point,beta\n1,cell,0,0.5\n1,cell,1,0.5\n");
}

TEST(Regularity, BarycentricTheta) {
    const Mesh m = gen_rect(4, 4);
    const auto part = partition_faces(m, PartitionPolicy::AllBarycentric);
    const auto w = compute_weights(m, part);
    // spread: 2 * 0.5 * (1/8)^2 / h_K^2 = 1/8 with h_K^2 = 1/8, below theta_D
    const auto rep = regularity(m, part, w);
    EXPECT_NEAR(*rep.theta_DB, 2.0 * std::sqrt(2.0), 1e-14);
    for (double s : rep.cell_spread) EXPECT_NEAR(s, 0.125, 1e-14);
}

TEST(Interpolation, SamplesAndBoundaryData) {
    const Mesh m = gen_tri(3);
    const auto u = interpolate(m, affine);
    for (const auto& c : m.cells) EXPECT_EQ(u.cell[c.id], affine(c.point));
    for (const auto& f : m.faces) EXPECT_EQ(u.face[f.id], affine(f.barycentre));
    const auto part = partition_faces(m, PartitionPolicy::AllHybrid);
    const BarycentricWeights none{std::vector<std::vector<WeightTerm>>(m.n_faces())};
    const auto z = interpolate(m, part, none, affine);
    for (const auto& f : m.faces) EXPECT_EQ(z.face[f.id], f.boundary ? 0.0 : affine(f.barycentre));
}
