#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "lerw/net.hpp"
#include "lerw/rng.hpp"
#include "lerw/tree.hpp"
#include "lerw/walk.hpp"
#include "oracles.hpp"

using namespace lerw;

namespace {

LatticePoint pt(i64 x, i64 y, i64 z, int n) { return LatticePoint{x, y, z, n}; }

Domain small_ball() { return Domain::ball(pt(0, 0, 0, 0), Dyadic(2)); }

} // namespace

TEST_CASE("single-vertex domain yields the one boundary edge") {
    Domain d = Domain::ball(pt(0, 0, 0, 0), Dyadic(1));
    RandomSource rng(1, 0);
    SpanningTree t = sample_wired_ust(d, rng);
    REQUIRE(t.size() == 1);
    CHECK(t.parent[0] == SpanningTree::kBoundary);
    REQUIRE(t.exits.size() == 1);
    const auto& e = t.exits.at(0);
    CHECK((long long)norm2(e[0], e[1], e[2]) == 1);
    CHECK(validate_tree(t, d) == "");

    SimplePath p = path_to_boundary(t, pt(0, 0, 0, 0));
    CHECK(p.len() == 1);
    CHECK(p.start() == pt(0, 0, 0, 0));
    CHECK(tree_depth(t, pt(0, 0, 0, 0)) == 1);
    CHECK(tree_distance(t, pt(0, 0, 0, 0), pt(0, 0, 0, 0)) == 0);
}

TEST_CASE("sampled trees satisfy the structural invariants for many seeds") {
    Domain d = small_ball();
    for (uint64_t s = 0; s < 1000; ++s) {
        RandomSource rng(s, 0);
        SpanningTree t = sample_wired_ust(d, rng);
        REQUIRE(t.size() == 27);
        REQUIRE(validate_tree(t, d) == "");
    }
}

TEST_CASE("tree sampling replays identically for equal seeds") {
    Domain d = small_ball();
    RandomSource r1(99, 5), r2(99, 5);
    SpanningTree a = sample_wired_ust(d, r1);
    SpanningTree b = sample_wired_ust(d, r2);
    CHECK(a.parent == b.parent);
    CHECK(a.verts == b.verts);
}

TEST_CASE("explicit lexicographic ordering matches the convenience overload") {
    Domain d = small_ball();
    RandomSource r1(7, 0), r2(7, 0);
    SpanningTree a = sample_wired_ust(d, d.lattice_points(), r1);
    SpanningTree b = sample_wired_ust(d, r2);
    CHECK(a.parent == b.parent);
}

TEST_CASE("orderings must be permutations of the domain") {
    Domain d = small_ball();
    RandomSource rng(3, 0);
    std::vector<LatticePoint> too_small{pt(0, 0, 0, 0)};
    CHECK_THROWS_AS(sample_wired_ust(d, too_small, rng), std::invalid_argument);
    auto repeated = d.lattice_points();
    repeated[1] = repeated[0];
    CHECK_THROWS_AS(sample_wired_ust(d, repeated, rng), std::invalid_argument);
}

TEST_CASE("path_to_boundary re-walks the stored parent chains") {
    Domain d = small_ball();
    RandomSource rng(21, 1);
    SpanningTree t = sample_wired_ust(d, rng);
    for (size_t i = 0; i < t.size(); ++i) {
        LatticePoint x = t.vertex((int32_t)i);
        SimplePath p = path_to_boundary(t, x);
        CHECK(p.start() == x);
        CHECK(p.is_simple());
        CHECK((int64_t)p.len() == tree_depth(t, x));
        for (size_t j = 0; j + 1 < p.num_vertices(); ++j) CHECK(d.contains(p.vertex(j)));
        CHECK_FALSE(d.contains(p.last()));
    }
    CHECK_THROWS_AS(path_to_boundary(t, pt(9, 9, 9, 0)), std::invalid_argument);
}

TEST_CASE("tree distance agrees with breadth-first search") {
    Domain d = small_ball();
    for (uint64_t s = 0; s < 5; ++s) {
        RandomSource rng(300 + s, 0);
        SpanningTree t = sample_wired_ust(d, rng);
        for (size_t i = 0; i < t.size(); ++i)
            for (size_t j = i; j < t.size(); ++j) {
                LatticePoint x = t.vertex((int32_t)i), y = t.vertex((int32_t)j);
                int64_t dij = tree_distance(t, x, y);
                CHECK(dij == oracle::tree_distance_bfs(t, x, y));
                CHECK(dij == tree_distance(t, y, x));
                if (i == j) CHECK(dij == 0);
            }
    }
}

TEST_CASE("net-ordered run on a fully covered line absorbs instantly") {
    Domain line = Domain::slab(0, 0, Dyadic(0), false, Dyadic(3), false, Dyadic(0));
    LatticePath gamma(pt(0, 0, 0, 0));
    for (int i = 0; i < 4; ++i) gamma.push(0);  // 0 -> (4,0,0), exits at the last step
    NetGrid net = build_net(Dyadic(2), line);
    RandomSource rng(5, 0);
    auto [tree, recs] = wilson_with_net(line, gamma, net, {0, 2}, 1.3, rng);

    REQUIRE(recs.size() == 2);
    for (const auto& rec : recs) {
        CHECK(rec.t == 0);
        CHECK(rec.branch_len == 0);
        CHECK(rec.branch.size() == 1);
        CHECK(rec.w == rec.y);
        CHECK(rec.within_sqrt_r);
        CHECK(rec.endpoint_on_window);
        CHECK(rec.h_ok);
        CHECK(rec.i_ok);
    }
    CHECK(recs[0].y == pt(0, 0, 0, 0));
    CHECK(recs[1].y == pt(2, 0, 0, 0));

    CHECK(validate_tree(tree, line) == "");
    // The seeded gamma chain is the whole tree.
    for (i64 x = 0; x < 3; ++x) {
        int32_t u = *tree.find(pt(x, 0, 0, 0));
        CHECK(tree.parent[u] == *tree.find(pt(x + 1, 0, 0, 0)));
    }
    int32_t last = *tree.find(pt(3, 0, 0, 0));
    CHECK(tree.parent[last] == SpanningTree::kBoundary);
    CHECK(tree.exits.at(last) == std::array<i64, 3>{4, 0, 0});
}

TEST_CASE("empty tau sequence degenerates to a seeded Wilson run") {
    Domain d = small_ball();
    LatticePath gamma(pt(0, 0, 0, 0));
    gamma.push(0);
    gamma.push(0);  // (2,0,0) is outside B(0,2)
    NetGrid net = build_net(Dyadic(1), d);
    RandomSource rng(17, 0);
    auto [tree, recs] = wilson_with_net(d, gamma, net, {}, 1.3, rng);
    CHECK(recs.empty());
    CHECK(validate_tree(tree, d) == "");
    int32_t u = *tree.find(pt(0, 0, 0, 0));
    CHECK(tree.parent[u] == *tree.find(pt(1, 0, 0, 0)));
    int32_t v = *tree.find(pt(1, 0, 0, 0));
    CHECK(tree.parent[v] == SpanningTree::kBoundary);
}

TEST_CASE("net branches off the seeded path walk until absorption") {
    Domain d = Domain::ball(pt(0, 0, 0, 4), Dyadic(1));
    LatticePath gamma(pt(0, 0, 0, 4));
    for (int i = 0; i < 16; ++i) gamma.push(2);  // straight +y to the boundary

    NetGrid net;
    net.spacing = Dyadic(1, 2);
    net.requested = Dyadic(1, 2);
    net.offset = pt(0, 0, 0, 4);
    net.points = {pt(2, 2, 0, 4), pt(10, 2, 0, 4)};  // storage order (z, y, x)
    net.halvings = 0;

    RandomSource rng(2025, 3);
    auto [tree, recs] = wilson_with_net(d, gamma, net, {2, 10}, 1.3, rng);
    REQUIRE(recs.size() == 2);

    std::unordered_set<std::array<i64, 3>, CoordHash> grown(gamma.verts.begin(), gamma.verts.end());
    for (const auto& rec : recs) {
        // Absorption lands on the tree built so far: the seeded path, an
        // earlier branch, or the wired boundary.
        bool on_tree = grown.count({rec.w.x, rec.w.y, rec.w.z}) > 0;
        bool at_boundary = !d.contains(rec.w);
        CHECK((on_tree || at_boundary));
        CHECK(rec.branch.front() == std::array<i64, 3>{rec.y.x, rec.y.y, rec.y.z});
        CHECK(rec.branch.back() == std::array<i64, 3>{rec.w.x, rec.w.y, rec.w.z});
        CHECK(rec.branch_len + 1 == rec.branch.size());
        CHECK(rec.t >= rec.branch_len);
        if (rec.within_sqrt_r) {
            for (const auto& v : rec.branch)
                CHECK((long long)norm2(v[0] - rec.y.x, v[1] - rec.y.y, v[2] - rec.y.z) < 64);
        }
        double cap = std::cbrt(0.25) * std::exp2(1.3 * 4);
        CHECK(rec.i_ok == ((double)rec.branch_len <= cap));
        grown.insert(rec.branch.begin(), rec.branch.end());
    }
    // The first branch starts off the seeded path and must really walk.
    CHECK(recs[0].y == pt(2, 2, 0, 4));
    CHECK(recs[0].t >= 1);
    // The second tau point reuses the same net point, which is in the tree now.
    CHECK(recs[1].y == pt(2, 2, 0, 4));
    CHECK(recs[1].t == 0);

    CHECK(validate_tree(tree, d) == "");
}

TEST_CASE("straight-radius seed: records re-verify against the net and the growing tree") {
    Domain d = Domain::ball(pt(0, 0, 0, 6), Dyadic(1));
    LatticePath gamma(pt(0, 0, 0, 6));
    for (int i = 0; i < 64; ++i) gamma.push(0);
    NetGrid net = build_net(Dyadic(1, 2), d);
    std::vector<size_t> tau = {0, 16, 32, 48};

    RandomSource rng(77, 0);
    auto [tree, recs] = wilson_with_net(d, gamma, net, tau, 1.3, rng);
    REQUIRE(recs.size() == 4);
    std::unordered_set<std::array<i64, 3>, CoordHash> grown(gamma.verts.begin(), gamma.verts.end());
    for (size_t l = 0; l < recs.size(); ++l) {
        const auto& rec = recs[l];
        CHECK((size_t)rec.l == l);
        // y_l must be the nearest net point to the tau_l vertex of the seed.
        size_t want = net.nearest(gamma.vertex(tau[l]));
        CHECK(rec.y == net.points[want]);
        // the branch starts at y_l and its endpoint lands on the already-grown
        // part of the tree or exits the domain
        REQUIRE(!rec.branch.empty());
        CHECK(rec.branch.front() == std::array<i64, 3>{rec.y.x, rec.y.y, rec.y.z});
        CHECK(rec.branch.back() == std::array<i64, 3>{rec.w.x, rec.w.y, rec.w.z});
        bool on_tree = grown.count({rec.w.x, rec.w.y, rec.w.z}) > 0;
        CHECK((on_tree || !d.contains(rec.w)));
        CHECK(rec.branch_len == rec.branch.size() - 1);
        if (rec.t == 0) CHECK(rec.branch.size() == 1);
        grown.insert(rec.branch.begin(), rec.branch.end());
    }
    CHECK(validate_tree(tree, d) == "");
}

TEST_CASE("net-ordered run rejects malformed seeds") {
    Domain d = small_ball();
    NetGrid net = build_net(Dyadic(1), d);
    RandomSource rng(1, 0);

    LatticePath loopy(pt(0, 0, 0, 0));
    loopy.push(0);
    loopy.push(1);  // returns to the start: not simple
    CHECK_THROWS_AS(wilson_with_net(d, loopy, net, {}, 1.3, rng), std::invalid_argument);

    LatticePath inside(pt(0, 0, 0, 0));
    inside.push(0);  // ends at (1,0,0), still inside
    CHECK_THROWS_AS(wilson_with_net(d, inside, net, {}, 1.3, rng), std::invalid_argument);

    LatticePath gamma(pt(0, 0, 0, 0));
    gamma.push(0);
    gamma.push(0);
    CHECK_THROWS_AS(wilson_with_net(d, gamma, net, {99}, 1.3, rng), std::invalid_argument);
}
