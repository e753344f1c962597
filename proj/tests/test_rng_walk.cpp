#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lerw/domain.hpp"
#include "lerw/rng.hpp"
#include "lerw/tube.hpp"
#include "lerw/walk.hpp"

using namespace lerw;

namespace {

LatticePoint pt(i64 x, i64 y, i64 z, int n) { return LatticePoint{x, y, z, n}; }

LatticePath straight_x(int n, i64 upto) {
    LatticePath p(pt(0, 0, 0, n));
    for (i64 i = 0; i < upto; ++i) p.push(0);
    return p;
}

} // namespace

TEST_CASE("equal seed and stream reproduce the word sequence") {
    RandomSource a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    bool all_equal = true, c_differs = false, d_differs = false;
    for (int i = 0; i < 1000; ++i) {
        uint64_t w = a.next_u64();
        all_equal = all_equal && (w == b.next_u64());
        c_differs = c_differs || (w != c.next_u64());
        d_differs = d_differs || (w != d.next_u64());
    }
    CHECK(all_equal);
    CHECK(c_differs);
    CHECK(d_differs);
    CHECK(a.draws() == 1000);
}

TEST_CASE("direction draws are unbiased within 4 standard errors") {
    RandomSource rng(1234, 0);
    const int N = 1000000;
    int counts[6] = {0, 0, 0, 0, 0, 0};
    for (int i = 0; i < N; ++i) ++counts[rng.next_direction()];
    const double p = 1.0 / 6.0;
    const double se = std::sqrt(p * (1 - p) / N);
    for (int d = 0; d < 6; ++d) {
        double freq = (double)counts[d] / N;
        CHECK(std::abs(freq - p) <= 4 * se);
    }
}

TEST_CASE("next_below stays in range and next_unit in [0,1)") {
    RandomSource rng(5, 5);
    for (int i = 0; i < 2000; ++i) {
        CHECK(rng.next_below(7) < 7);
        double u = rng.next_unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("walk out of the single-point ball takes exactly one step") {
    StopRule rule = StopRule::exit_domain(Domain::ball(pt(0, 0, 0, 0), Dyadic(1)));
    for (uint64_t s = 0; s < 20; ++s) {
        RandomSource rng(s, 0);
        WalkResult w = sample_walk(pt(0, 0, 0, 0), rule, rng);
        CHECK(w.path.len() == 1);
        CHECK(w.fired == 0);
        CHECK_FALSE(w.capped);
        CHECK((long long)dist2(w.path.last(), pt(0, 0, 0, 0)) == 1);
    }
}

TEST_CASE("zero step cap stops immediately") {
    RandomSource rng(9, 0);
    WalkResult w = sample_walk(pt(0, 0, 0, 0), StopRule::step_cap(0), rng);
    CHECK(w.path.len() == 0);
    CHECK(w.fired == 0);
    CHECK(w.path.start() == pt(0, 0, 0, 0));
}

TEST_CASE("walks replay byte-identically for equal seeds") {
    StopRule rule = StopRule::exit_domain(Domain::ball(pt(0, 0, 0, 0), Dyadic(3)));
    RandomSource r1(77, 3), r2(77, 3);
    WalkResult a = sample_walk(pt(0, 0, 0, 0), rule, r1);
    WalkResult b = sample_walk(pt(0, 0, 0, 0), rule, r2);
    CHECK(a.path.steps == b.path.steps);
    CHECK(a.path.verts == b.path.verts);
}

TEST_CASE("replaying a stream prefix reproduces the first steps") {
    StopRule rule = StopRule::exit_domain(Domain::ball(pt(0, 0, 0, 0), Dyadic(6)));
    RandomSource r1(2024, 1);
    WalkResult w = sample_walk(pt(0, 0, 0, 0), rule, r1);
    REQUIRE(w.path.len() >= 10);
    RandomSource r2(2024, 1);
    for (size_t k = 0; k < 10; ++k) CHECK((int)w.path.steps[k] == r2.next_direction());
}

TEST_CASE("hard cap reports truncation instead of stopping") {
    StopRule rule = StopRule::exit_domain(Domain::ball(pt(0, 0, 0, 0), Dyadic(100)));
    RandomSource rng(1, 0);
    WalkResult w = sample_walk(pt(0, 0, 0, 0), rule, rng, 5);
    CHECK(w.capped);
    CHECK(w.fired == -1);
    CHECK(w.path.len() == 5);
}

TEST_CASE("first_of reports which rule fired") {
    Domain big = Domain::ball(pt(0, 0, 0, 0), Dyadic(50));
    StopRule rule = StopRule::first_of({StopRule::exit_domain(big), StopRule::step_cap(3)});
    RandomSource rng(4, 0);
    WalkResult w = sample_walk(pt(0, 0, 0, 0), rule, rng);
    CHECK(w.fired == 1);
    CHECK(w.path.len() == 3);
}

TEST_CASE("hit_set fires at the first listed vertex reached") {
    StopRule rule = StopRule::first_of(
        {StopRule::hit_set({pt(2, 0, 0, 0), pt(-2, 0, 0, 0)}), StopRule::step_cap(100000)});
    RandomSource rng(11, 2);
    WalkResult w = sample_walk(pt(0, 0, 0, 0), rule, rng);
    if (w.fired == 0) {
        bool at_target = w.path.last() == pt(2, 0, 0, 0) || w.path.last() == pt(-2, 0, 0, 0);
        CHECK(at_target);
    }
}

TEST_CASE("plane hit time on a straight tube path") {
    TubePartition tube = build_tube_partition(3, 2, 8);
    LatticePath path = straight_x(8, 96);
    auto k = plane_hit_time(path, tube, tube.a[1]);
    REQUIRE(k.has_value());
    CHECK(*k == 32);  // 1/8 = 32 lattice units at n=8
    auto k2 = plane_hit_time(path, tube, tube.a[2]);
    REQUIRE(k2.has_value());
    CHECK(*k2 == 96);
    CHECK(plane_hit_time(path, tube, tube.a[1], 33) == std::nullopt);  // never returns
}

TEST_CASE("plane hit time is absent for confined paths") {
    TubePartition tube = build_tube_partition(3, 2, 8);
    CHECK(plane_hit_time(straight_x(8, 10), tube, tube.a[1]) == std::nullopt);
}

TEST_CASE("plane hit at the start vertex is time zero") {
    TubePartition tube = build_tube_partition(3, 2, 8);
    LatticePath path(pt(32, 0, 0, 8));
    path.push(0);
    auto k = plane_hit_time(path, tube, tube.a[1]);
    REQUIRE(k.has_value());
    CHECK(*k == 0);
}

TEST_CASE("plane hits respect the transverse bound") {
    TubePartition tube = build_tube_partition(3, 2, 8);
    // Walk along x at transverse offset 33 units > 2^-3: outside H(a_1).
    LatticePath path(pt(0, 33, 0, 8));
    for (int i = 0; i < 40; ++i) path.push(0);
    CHECK(plane_hit_time(path, tube, tube.a[1]) == std::nullopt);
}

TEST_CASE("plane queries reject unsnapped coordinates and scale mismatch") {
    TubePartition tube = build_tube_partition(3, 2, 8);
    LatticePath path = straight_x(8, 40);
    CHECK_THROWS_AS(plane_hit_time(path, tube, Dyadic(1, 9)), std::invalid_argument);
    CHECK_THROWS_AS(StopRule::hit_plane(tube, Dyadic(1, 9)), std::invalid_argument);
    LatticePath wrong = straight_x(4, 10);
    CHECK_THROWS_AS(plane_hit_time(wrong, tube, tube.a[1]), std::invalid_argument);
}

TEST_CASE("hit_plane stop rule stops a walk exactly on the plane piece") {
    TubePartition tube = build_tube_partition(3, 2, 8);
    StopRule rule = StopRule::first_of({StopRule::hit_plane(tube, tube.a[1]), StopRule::step_cap(2000000)});
    RandomSource rng(3, 1);
    WalkResult w = sample_walk(pt(0, 0, 0, 8), rule, rng);
    if (w.fired == 0) {
        CHECK(w.path.last().x == 32);
        CHECK(std::abs(w.path.last().y) <= 32);
        CHECK(std::abs(w.path.last().z) <= 32);
        auto first = plane_hit_time(w.path, tube, tube.a[1]);
        REQUIRE(first.has_value());
        CHECK(*first == w.path.len());
    }
}

TEST_CASE("conditioning on the empty set reproduces the plain walk") {
    StopRule rule = StopRule::exit_domain(Domain::ball(pt(0, 0, 0, 0), Dyadic(4)));
    RandomSource r1(31, 0), r2(31, 0);
    ConditionedWalk cw = sample_conditioned_walk(pt(0, 0, 0, 0), rule, {}, r1);
    WalkResult w = sample_walk(pt(0, 0, 0, 0), rule, r2);
    CHECK(cw.ok);
    CHECK(cw.attempts == 1);
    CHECK(cw.path.steps == w.path.steps);
}

TEST_CASE("avoiding five of six neighbours forces the first step") {
    StopRule rule = StopRule::exit_domain(Domain::ball(pt(0, 0, 0, 0), Dyadic(2)));
    std::vector<LatticePoint> avoid = {pt(-1, 0, 0, 0), pt(0, 1, 0, 0), pt(0, -1, 0, 0),
                                       pt(0, 0, 1, 0), pt(0, 0, -1, 0)};
    int accepted = 0;
    for (uint64_t s = 0; s < 100; ++s) {
        RandomSource rng(500 + s, 0);
        ConditionedWalk cw = sample_conditioned_walk(pt(0, 0, 0, 0), rule, avoid, rng);
        REQUIRE(cw.ok);
        ++accepted;
        CHECK(cw.path.vertex(1) == pt(1, 0, 0, 0));
        for (size_t i = 1; i < cw.path.num_vertices(); ++i)
            for (const auto& bad : avoid) CHECK_FALSE(cw.path.vertex(i) == bad);
    }
    CHECK(accepted == 100);
}

TEST_CASE("impossible avoidance fails with the attempt budget spent") {
    StopRule rule = StopRule::exit_domain(Domain::ball(pt(0, 0, 0, 0), Dyadic(2)));
    std::vector<LatticePoint> avoid = {pt(1, 0, 0, 0),  pt(-1, 0, 0, 0), pt(0, 1, 0, 0),
                                       pt(0, -1, 0, 0), pt(0, 0, 1, 0),  pt(0, 0, -1, 0)};
    RandomSource rng(8, 0);
    ConditionedWalk cw = sample_conditioned_walk(pt(0, 0, 0, 0), rule, avoid, rng, 100);
    CHECK_FALSE(cw.ok);
    CHECK(cw.attempts == 100);
}
