#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "lerw/loop_erase.hpp"
#include "lerw/rng.hpp"
#include "lerw/tube.hpp"
#include "lerw/walk.hpp"
#include "oracles.hpp"

using namespace lerw;

namespace {

LatticePoint pt(i64 x, i64 y, i64 z, int n) { return LatticePoint{x, y, z, n}; }

LatticePath from_vertices(std::vector<LatticePoint> vs) { return path_from_vertices(vs); }

// Pushes `count` steps of direction `dir`.
void run(LatticePath& p, int dir, int count) {
    for (int i = 0; i < count; ++i) p.push(dir);
}

bool same_vertices(const LatticePath& a, const LatticePath& b) { return a.verts == b.verts && a.n == b.n; }

std::unordered_set<std::array<i64, 3>, CoordHash> vertex_set(const LatticePath& p, size_t from, size_t to) {
    std::unordered_set<std::array<i64, 3>, CoordHash> s;
    for (size_t i = from; i <= to; ++i) s.insert(p.verts[i]);
    return s;
}

bool ranges_disjoint(const LatticePath& p, size_t a0, size_t a1, size_t b0, size_t b1) {
    auto s = vertex_set(p, a0, a1);
    for (size_t i = b0; i <= b1; ++i)
        if (s.count(p.verts[i])) return false;
    return true;
}

} // namespace

TEST_CASE("loop erasure drops the immediate backtrack") {
    LatticePath p = from_vertices({pt(0, 0, 0, 0), pt(1, 0, 0, 0), pt(0, 0, 0, 0), pt(0, 1, 0, 0)});
    SimplePath le = erase_loops(p);
    CHECK(same_vertices(le, from_vertices({pt(0, 0, 0, 0), pt(0, 1, 0, 0)})));
}

TEST_CASE("loop erasure of a closed square is a single point") {
    LatticePath p = from_vertices(
        {pt(0, 0, 0, 0), pt(1, 0, 0, 0), pt(1, 1, 0, 0), pt(0, 1, 0, 0), pt(0, 0, 0, 0)});
    SimplePath le = erase_loops(p);
    CHECK(le.len() == 0);
    CHECK(le.start() == pt(0, 0, 0, 0));
}

TEST_CASE("loop erasure fixes simple paths") {
    LatticePath p(pt(0, 0, 0, 2));
    run(p, 0, 3);
    run(p, 2, 2);
    run(p, 4, 1);
    CHECK(same_vertices(erase_loops(p), p));
}

TEST_CASE("loop erasure agrees with the literal index recursion on all short paths") {
    // Exhaustive over every step sequence of length 0..6 from the origin.
    for (int len = 0; len <= 6; ++len) {
        long long total = 1;
        for (int i = 0; i < len; ++i) total *= 6;
        for (long long code = 0; code < total; ++code) {
            LatticePath p(pt(0, 0, 0, 0));
            long long c = code;
            for (int i = 0; i < len; ++i) {
                p.push((int)(c % 6));
                c /= 6;
            }
            SimplePath le = erase_loops(p);
            SimplePath lit = oracle::erase_loops_literal(p);
            REQUIRE(same_vertices(le, lit));
            REQUIRE(le.is_simple());
            REQUIRE(le.start() == p.start());
            REQUIRE(le.last() == p.last());
            auto all = vertex_set(p, 0, p.len());
            for (const auto& v : le.verts) REQUIRE(all.count(v) == 1);
            REQUIRE(same_vertices(erase_loops(le), le));
        }
    }
}

TEST_CASE("online loop erasure tracks the batch version") {
    for (uint64_t s = 0; s < 100; ++s) {
        RandomSource rng(7000 + s, 0);
        StopRule rule = StopRule::exit_domain(Domain::ball(pt(0, 0, 0, 0), Dyadic(4)));
        WalkResult w = sample_walk(pt(0, 0, 0, 0), rule, rng);
        OnlineLoopErase ole(w.path.start());
        for (size_t i = 1; i < w.path.num_vertices(); ++i) ole.push(w.path.vertex(i));
        CHECK(same_vertices(ole.path(), erase_loops(w.path)));
        CHECK(ole.len() == erase_loops(w.path).len());
    }
}

TEST_CASE("concatenation basics") {
    LatticePath a = from_vertices({pt(0, 0, 0, 0), pt(1, 0, 0, 0)});
    LatticePath b = from_vertices({pt(1, 0, 0, 0), pt(1, 1, 0, 0)});
    LatticePath ab = concat(a, b);
    CHECK(same_vertices(ab, from_vertices({pt(0, 0, 0, 0), pt(1, 0, 0, 0), pt(1, 1, 0, 0)})));

    LatticePath unit(pt(1, 0, 0, 0));  // zero-length path at a's endpoint
    CHECK(same_vertices(concat(a, unit), a));

    LatticePath c = from_vertices({pt(5, 0, 0, 0), pt(6, 0, 0, 0)});
    CHECK_THROWS_AS(concat(a, c), std::invalid_argument);
    LatticePath d = from_vertices({pt(1, 0, 0, 3), pt(2, 0, 0, 3)});
    CHECK_THROWS_AS(concat(a, d), std::invalid_argument);
}

TEST_CASE("cut times of pinned examples") {
    LatticePath straight(pt(0, 0, 0, 0));
    run(straight, 0, 2);
    CHECK(cut_times(straight) == std::vector<size_t>{0, 1, 2});

    LatticePath abac = from_vertices({pt(0, 0, 0, 0), pt(1, 0, 0, 0), pt(0, 0, 0, 0), pt(0, 1, 0, 0)});
    CHECK(cut_times(abac) == std::vector<size_t>{2, 3});

    LatticePath single(pt(4, 4, 4, 1));
    CHECK(cut_times(single) == std::vector<size_t>{0});
}

TEST_CASE("cut times match the brute-force definition on random walks") {
    StopRule rule = StopRule::exit_domain(Domain::ball(pt(0, 0, 0, 0), Dyadic(4)));
    for (uint64_t s = 0; s < 200; ++s) {
        RandomSource rng(100 + s, 0);
        WalkResult w = sample_walk(pt(0, 0, 0, 0), rule, rng);
        CHECK(cut_times(w.path) == oracle::cut_times_brute(w.path));
    }
}

TEST_CASE("decompose_at_cut splits exactly at the pinned example") {
    LatticePath abac = from_vertices({pt(0, 0, 0, 0), pt(1, 0, 0, 0), pt(0, 0, 0, 0), pt(0, 1, 0, 0)});
    auto [pre, post] = decompose_at_cut(abac, 2);
    CHECK(pre.len() == 0);
    CHECK(pre.start() == pt(0, 0, 0, 0));
    CHECK(same_vertices(post, from_vertices({pt(0, 0, 0, 0), pt(0, 1, 0, 0)})));
    CHECK(same_vertices(concat(pre, post), erase_loops(abac)));

    auto [all, tail] = decompose_at_cut(abac, 3);
    CHECK(same_vertices(all, erase_loops(abac)));
    CHECK(tail.len() == 0);

    CHECK_THROWS_AS(decompose_at_cut(abac, 0), std::invalid_argument);
    CHECK_THROWS_AS(decompose_at_cut(abac, 99), std::invalid_argument);
}

TEST_CASE("decompose_at_cut on a simple path returns its pieces unchanged") {
    LatticePath p(pt(0, 0, 0, 0));
    run(p, 0, 2);
    run(p, 2, 2);
    auto [pre, post] = decompose_at_cut(p, 2);
    CHECK(same_vertices(pre, p.segment(0, 2)));
    CHECK(same_vertices(post, p.segment(2, 4)));
}

TEST_CASE("splitting at any cut time reassembles the loop erasure") {
    StopRule rule = StopRule::exit_domain(Domain::ball(pt(0, 0, 0, 0), Dyadic(5)));
    for (uint64_t s = 0; s < 10000; ++s) {
        RandomSource rng(40000 + s, 0);
        WalkResult w = sample_walk(pt(0, 0, 0, 0), rule, rng);
        SimplePath le = erase_loops(w.path);
        for (size_t k : cut_times(w.path)) {
            auto [pre, post] = decompose_at_cut(w.path, k);
            REQUIRE(same_vertices(concat(pre, post), le));
        }
    }
}

// Tube used by the cut-window tests: m=3, m0=2, n=8.  In lattice units,
// a_1 = 32, q = 8, the window planes sit at x = 36 and x = 40, a_2 = 96,
// and the transverse bound is 32.
TEST_CASE("nice cut times: monotone path qualifies on the whole window") {
    TubePartition tube = build_tube_partition(3, 2, 8);
    LatticePath p(pt(0, 0, 0, 8));
    run(p, 0, 96);
    CHECK(nice_cut_times(p, tube, 1) == std::vector<size_t>{36, 37, 38, 39, 40});
}

TEST_CASE("nice cut times: a loop across the window leaves only the entry index") {
    TubePartition tube = build_tube_partition(3, 2, 8);
    LatticePath p(pt(0, 0, 0, 8));
    run(p, 0, 41);  // forward to x=41
    run(p, 1, 4);   // back to x=37
    run(p, 0, 59);  // forward to x=96
    CHECK(nice_cut_times(p, tube, 1) == std::vector<size_t>{36});
}

TEST_CASE("nice cut times: re-touching the entry plane empties the window") {
    TubePartition tube = build_tube_partition(3, 2, 8);
    LatticePath p(pt(0, 0, 0, 8));
    run(p, 0, 40);  // forward through the window to x=40
    run(p, 1, 8);   // back to x=32, i.e. H(a_1) again
    run(p, 0, 64);  // forward to x=96
    CHECK(nice_cut_times(p, tube, 1).empty());
}

TEST_CASE("nice cut times require the bracketing plane hits") {
    TubePartition tube = build_tube_partition(3, 2, 8);
    LatticePath p(pt(0, 0, 0, 8));
    run(p, 0, 50);  // never reaches a_2
    CHECK_THROWS_AS(nice_cut_times(p, tube, 1), std::invalid_argument);
    LatticePath q(pt(0, 0, 0, 8));
    run(q, 0, 96);
    CHECK_THROWS_AS(nice_cut_times(q, tube, 0), std::invalid_argument);
    CHECK_THROWS_AS(nice_cut_times(q, tube, 9), std::invalid_argument);
}

TEST_CASE("every reported nice cut passes each condition re-checked independently") {
    TubePartition tube = build_tube_partition(3, 2, 8);
    std::vector<LatticePath> paths;
    {
        LatticePath p(pt(0, 0, 0, 8));
        run(p, 0, 96);
        paths.push_back(p);
    }
    {
        LatticePath p(pt(0, 0, 0, 8));
        run(p, 0, 41);
        run(p, 1, 4);
        run(p, 0, 59);
        paths.push_back(p);
    }
    {
        // Wandering but forward-progressing path with a transverse detour.
        LatticePath p(pt(0, 0, 0, 8));
        run(p, 0, 37);
        run(p, 2, 3);
        run(p, 0, 2);
        run(p, 3, 3);
        run(p, 0, 57);
        paths.push_back(p);
    }
    for (const auto& p : paths) {
        size_t t1 = *plane_hit_time(p, tube, tube.a[1]);
        size_t t2 = *plane_hit_time(p, tube, tube.a[2]);
        size_t w0 = *plane_hit_time(p, tube, tube.a[1] + Dyadic(1, 6));  // a_1 + q/2
        size_t w1 = *plane_hit_time(p, tube, tube.a[1] + tube.q);
        Domain window = tube.slab(tube.a[1] + Dyadic(1, 6), false, tube.a[1] + tube.q, false);
        Domain entry = tube.plane_piece(tube.a[1]);
        for (size_t k : nice_cut_times(p, tube, 1)) {
            CHECK(w0 <= k);
            CHECK(k <= w1);
            CHECK(ranges_disjoint(p, t1, k, k + 1, t2));
            CHECK(window.contains(p.vertex(k)));
            bool returns = false;
            for (size_t j = k; j <= t2; ++j)
                if (entry.contains(p.vertex(j))) returns = true;
            CHECK_FALSE(returns);
        }
    }
}

TEST_CASE("local nice cut times: short monotone path qualifies") {
    TubePartition tube = build_tube_partition(3, 2, 8);
    LatticePath p(pt(0, 0, 0, 8));
    run(p, 0, 48);  // through a_1 + 2q
    CHECK(local_nice_cut_times(p, tube) == std::vector<size_t>{36, 37, 38, 39, 40});
}

TEST_CASE("local nice cut times: leaving the 4q ball empties the list") {
    TubePartition tube = build_tube_partition(3, 2, 8);
    LatticePath p(pt(0, 0, 0, 8));
    run(p, 0, 44);
    run(p, 2, 32);  // transverse digression to distance sqrt(12^2+32^2) >= 4q = 32 units
    run(p, 3, 32);
    run(p, 0, 4);
    CHECK(local_nice_cut_times(p, tube).empty());
}

TEST_CASE("local nice cut times: touching the back plane empties the list") {
    TubePartition tube = build_tube_partition(3, 2, 8);
    LatticePath p(pt(0, 0, 0, 8));
    run(p, 0, 32);  // to a_1
    run(p, 1, 8);   // back to x=24 = a_1 - q
    run(p, 0, 24);  // forward to x=48
    CHECK(local_nice_cut_times(p, tube).empty());
}

TEST_CASE("every reported local nice cut passes the re-checked conditions") {
    TubePartition tube = build_tube_partition(3, 2, 8);
    LatticePath p(pt(0, 0, 0, 8));
    run(p, 0, 37);
    run(p, 2, 2);
    run(p, 0, 4);
    run(p, 3, 2);
    run(p, 0, 7);
    size_t t1 = *plane_hit_time(p, tube, tube.a[1]);
    size_t t_far = *plane_hit_time(p, tube, tube.a[1] + tube.q + tube.q);
    Domain window = tube.slab(tube.a[1] + Dyadic(1, 6), false, tube.a[1] + tube.q, false);
    Domain entry = tube.plane_piece(tube.a[1]);
    Domain back = tube.plane_piece(tube.a[1] - tube.q);
    auto cuts = local_nice_cut_times(p, tube);
    CHECK(!cuts.empty());
    for (size_t k : cuts) {
        CHECK(ranges_disjoint(p, t1, k, k + 1, t_far));
        CHECK(window.contains(p.vertex(k)));
        for (size_t j = t1; j <= k; ++j) CHECK_FALSE(back.contains(p.vertex(j)));
        for (size_t j = k; j <= t_far; ++j) CHECK_FALSE(entry.contains(p.vertex(j)));
        for (size_t j = t1; j <= t_far; ++j) {
            i128 d2 = dist2(p.vertex(j), p.vertex(t1));
            CHECK((long long)d2 < 32 * 32);  // open ball of radius 4q
        }
    }
}
