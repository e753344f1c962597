#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "lerw/domain.hpp"
#include "lerw/dyadic.hpp"
#include "lerw/metrics.hpp"
#include "lerw/net.hpp"
#include "lerw/point.hpp"
#include "lerw/rng.hpp"
#include "lerw/tube.hpp"

using namespace lerw;

namespace {

LatticePoint pt(i64 x, i64 y, i64 z, int n) { return LatticePoint{x, y, z, n}; }

} // namespace

TEST_CASE("dyadic normalization and arithmetic") {
    Dyadic a(6, 4);  // 6/16 = 3/8
    CHECK(a.num == 3);
    CHECK(a.k == 3);
    CHECK(a.value() == 0.375);

    Dyadic zero(0, 10);
    CHECK(zero.num == 0);
    CHECK(zero.k == 0);
    CHECK(zero.is_zero());

    CHECK(Dyadic(1, 3) + Dyadic(1, 3) == Dyadic(1, 2));
    CHECK(Dyadic(1, 1) - Dyadic(1, 3) == Dyadic(3, 3));
    CHECK(Dyadic(3, 2) * Dyadic(1, 1) == Dyadic(3, 3));
    CHECK(-Dyadic(5, 2) == Dyadic(-5, 2));

    CHECK(Dyadic(1, 3) < Dyadic(1, 2));
    CHECK(Dyadic(1, 2) <= Dyadic(2, 2));
    CHECK(Dyadic(-1, 1) < Dyadic(0));
    CHECK(Dyadic(7, 3) > Dyadic(3, 2));  // 7/8 > 6/8
    CHECK(cmp(Dyadic(4, 2), Dyadic(1)) == 0);
}

TEST_CASE("dyadic shifting and grid scaling") {
    CHECK(Dyadic(3, 5).shifted(2) == Dyadic(3, 3));
    CHECK(Dyadic(3, 0).shifted(-2) == Dyadic(3, 2));
    CHECK(Dyadic(1, 3).scaled_num(5) == 4);  // 1/8 = 4/32
    CHECK(Dyadic(-1, 3).scaled_num(8) == -32);
    CHECK(Dyadic(5, 0).scaled_num(0) == 5);
    CHECK_THROWS_AS(Dyadic(1, 5).scaled_num(3), std::invalid_argument);
    CHECK(Dyadic(1, 3).representable_at(3));
    CHECK_FALSE(Dyadic(1, 6).representable_at(5));
}

TEST_CASE("dyadic parsing") {
    CHECK(parse_dyadic("7") == Dyadic(7));
    CHECK(parse_dyadic("-3/8") == Dyadic(-3, 3));
    CHECK(parse_dyadic("5/2^4") == Dyadic(5, 4));
    CHECK(parse_dyadic("1/1") == Dyadic(1));
    CHECK_THROWS_AS(parse_dyadic("1/3"), std::invalid_argument);
    CHECK_THROWS_AS(parse_dyadic("1/0"), std::invalid_argument);
    CHECK(parse_dyadic(Dyadic(-11, 5).str()) == Dyadic(-11, 5));
}

TEST_CASE("lattice points and integer distances") {
    LatticePoint p = pt(3, -4, 12, 5);
    CHECK(p.coord(0) == 3);
    CHECK(p.coord(2) == 12);
    CHECK(p.dyadic_coord(1) == Dyadic(-4, 5));
    CHECK((long long)dist2(p, pt(0, 0, 0, 5)) == 9 + 16 + 144);
    CHECK(linf(p, pt(1, 1, 1, 5)) == 11);

    LatticePoint q = step(pt(0, 0, 0, 2), 3);  // -y
    CHECK(q == pt(0, -1, 0, 2));
    CHECK(pt(0, 0, 0, 1) < pt(0, 0, 1, 1));
    CHECK(pt(-1, 5, 5, 1) < pt(0, -9, -9, 1));
}

TEST_CASE("ball membership is strict and exact") {
    Domain b = Domain::ball(pt(0, 0, 0, 0), Dyadic(1));
    CHECK(b.contains(pt(0, 0, 0, 0)));
    CHECK_FALSE(b.contains(pt(1, 0, 0, 0)));  // |e1| = 1, not < 1
    CHECK_THROWS_AS(b.contains(pt(0, 0, 0, 3)), std::invalid_argument);

    // Discrete ball of radius 2 around the origin has the 27 points with
    // squared norm at most 3.
    Domain b2 = Domain::ball(pt(0, 0, 0, 0), Dyadic(2));
    auto pts = b2.lattice_points();
    CHECK(pts.size() == 27);
    CHECK(b2.count_lattice_points() == 27);
    for (const auto& v : pts) CHECK((long long)dist2(v, pt(0, 0, 0, 0)) <= 3);
    CHECK(std::is_sorted(pts.begin(), pts.end()));

    Domain cb = Domain::closed_ball(pt(0, 0, 0, 0), Dyadic(1));
    CHECK(cb.contains(pt(1, 0, 0, 0)));
    CHECK_FALSE(cb.contains(pt(1, 1, 0, 0)));
}

TEST_CASE("slab membership matches the defining inequalities") {
    // H[-1/8, 1/8] with transverse half-width 2^-3, queried at n=5.
    Domain h = Domain::slab(5, 0, Dyadic(-1, 3), false, Dyadic(1, 3), false, Dyadic(1, 3));
    CHECK(h.contains(pt(0, 4, 0, 5)));  // (0, 2^-3, 0)
    CHECK(h.contains(pt(4, 0, 0, 5)));  // x = 1/8 allowed (closed)
    CHECK_FALSE(h.contains(pt(5, 0, 0, 5)));
    CHECK_FALSE(h.contains(pt(-5, 0, 0, 5)));
    CHECK_FALSE(h.contains(pt(0, 5, 0, 5)));  // transverse bound
    CHECK(h.contains(pt(0, -4, 4, 5)));

    // Open version excludes both plane coordinates.
    Domain ho = Domain::slab(5, 0, Dyadic(-1, 3), true, Dyadic(1, 3), true, Dyadic(1, 3));
    CHECK_FALSE(ho.contains(pt(4, 0, 0, 5)));
    CHECK(ho.contains(pt(3, 0, 0, 5)));
}

TEST_CASE("cube, halfspace, intersection, translate") {
    Domain c = Domain::cube(pt(0, 0, 0, 3), Dyadic(1, 1));
    CHECK(c.contains(pt(4, 4, 4, 3)));
    CHECK_FALSE(c.contains(pt(5, 0, 0, 3)));

    Domain hs = Domain::halfspace(3, 1, Dyadic(0), true, false);  // y > 0
    CHECK(hs.contains(pt(-100, 1, 50, 3)));
    CHECK_FALSE(hs.contains(pt(0, 0, 0, 3)));

    Domain inter = Domain::intersection({c, hs});
    CHECK(inter.contains(pt(4, 4, -4, 3)));
    CHECK_FALSE(inter.contains(pt(4, 0, 0, 3)));

    Domain tr = Domain::translate(c, pt(8, 0, 0, 3));
    CHECK(tr.contains(pt(12, 4, 0, 3)));
    CHECK_FALSE(tr.contains(pt(3, 0, 0, 3)));

    Box bb = c.bounding_box();
    CHECK(bb.bounded());
    CHECK(bb.lo[0] == -4);
    CHECK(bb.hi[0] == 4);
    CHECK_FALSE(hs.bounding_box().bounded());
}

TEST_CASE("annulus membership") {
    Domain an = Domain::annulus(pt(0, 0, 0, 0), Dyadic(2), Dyadic(4));
    CHECK(an.contains(pt(2, 0, 0, 0)));
    CHECK(an.contains(pt(4, 0, 0, 0)));
    CHECK(an.contains(pt(2, 2, 1, 0)));  // |.| = 3
    CHECK_FALSE(an.contains(pt(1, 1, 0, 0)));
    CHECK_FALSE(an.contains(pt(5, 0, 0, 0)));
    CHECK_FALSE(an.contains(pt(0, 0, 0, 0)));
}

TEST_CASE("boundary clearance is the signed distance to the continuum boundary") {
    Domain b = Domain::ball(pt(0, 0, 0, 4), Dyadic(1));
    CHECK(b.boundary_clearance(pt(0, 0, 0, 4)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.boundary_clearance(pt(8, 0, 0, 4)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(b.boundary_clearance(pt(32, 0, 0, 4)) == doctest::Approx(-1.0).epsilon(1e-12));

    Domain c = Domain::cube(pt(0, 0, 0, 3), Dyadic(1, 1));
    CHECK(c.boundary_clearance(pt(2, 1, 0, 3)) == doctest::Approx(0.25).epsilon(1e-12));

    Domain s = Domain::slab(3, 0, Dyadic(0), false, Dyadic(1), false, Dyadic(1, 1));
    CHECK(s.boundary_clearance(pt(2, 0, 0, 3)) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("tube partition plane layout") {
    TubePartition t = build_tube_partition(3, 2, 8);
    CHECK(t.a.size() == 6);  // planes a_0 .. a_{2*m0+1}
    CHECK(t.a[0] == Dyadic(-1, 3));
    CHECK(t.a[1] == Dyadic(1, 3));
    CHECK(t.a[2] == Dyadic(3, 3));
    CHECK(t.q == Dyadic(1, 5));
    CHECK(t.transverse() == Dyadic(1, 3));
    for (size_t i = 0; i + 1 < t.a.size(); ++i) CHECK(t.a[i + 1] - t.a[i] == Dyadic(1, 2));
    CHECK(t.plane_coord(5) == t.a[5]);
    CHECK(t.plane_coord_half(2) == t.a[1]);            // twice_i = 2i
    CHECK(t.plane_coord_half(3) == Dyadic(2, 3));      // half-integer index 3/2
    CHECK(t.snapped(t.a[1] + t.q));
    CHECK_FALSE(t.snapped(Dyadic(1, 9)));
}

TEST_CASE("tube partition errors") {
    CHECK_THROWS_AS(build_tube_partition(3, 2, 4), std::invalid_argument);  // n < m + m0
    CHECK_THROWS_AS(build_tube_partition(3, 1, 8), std::invalid_argument);
    CHECK_THROWS_AS(build_tube_partition(0, 2, 8), std::invalid_argument);
}

TEST_CASE("first tube cube is the centered cube of side 2^(1-m)") {
    TubePartition t = build_tube_partition(1, 2, 4);
    Domain q0 = t.cube(0);  // [-1/2, 1/2]^3 at n=4, i.e. 8 lattice units
    for (i64 x = -10; x <= 10; ++x)
        for (i64 y = -10; y <= 10; y += 2)
            for (i64 z = -10; z <= 10; z += 5) {
                bool expect = std::abs(x) <= 8 && std::abs(y) <= 8 && std::abs(z) <= 8;
                CHECK(q0.contains_xyz(x, y, z) == expect);
            }
}

TEST_CASE("consecutive tube cubes share exactly the dividing plane piece") {
    TubePartition t = build_tube_partition(3, 2, 8);
    for (int i = 0; i + 2 < (int)t.a.size(); ++i) {
        Domain qi = t.cube(i);
        Domain qj = t.cube(i + 1);
        Domain shared = t.plane_piece(t.a[i + 1]);
        i64 lo = t.a[i].scaled_num(8) - 3, hi = t.a[i + 2].scaled_num(8) + 3;
        for (i64 x = lo; x <= hi; x += 1)
            for (i64 y : {(i64)-33, (i64)-32, (i64)0, (i64)31, (i64)32, (i64)33})
                for (i64 z : {(i64)-33, (i64)0, (i64)32}) {
                    bool both = qi.contains_xyz(x, y, z) && qj.contains_xyz(x, y, z);
                    CHECK(both == shared.contains_xyz(x, y, z));
                }
    }
}

TEST_CASE("plane pieces, faces and thin cuboids") {
    TubePartition t = build_tube_partition(3, 2, 8);
    Domain h1 = t.plane_piece(t.a[1]);
    CHECK(h1.contains_xyz(32, 32, -32));
    CHECK_FALSE(h1.contains_xyz(33, 0, 0));
    CHECK_FALSE(h1.contains_xyz(32, 33, 0));

    Domain g1 = t.face(t.a[1]);
    CHECK(g1.contains_xyz(32, 16, 16));
    CHECK_FALSE(g1.contains_xyz(32, 17, 0));  // G half-width is 2^-(m+1)

    Domain hw = t.thin_cuboid(pt(32, 0, 0, 8));
    CHECK(hw.contains_xyz(40, 32, 0));   // |dx| <= q = 8 units
    CHECK_FALSE(hw.contains_xyz(41, 0, 0));
    CHECK_FALSE(hw.contains_xyz(32, 33, 0));
}

TEST_CASE("net with spacing 2 covers the unit ball by the origin alone") {
    Domain d = Domain::ball(pt(0, 0, 0, 3), Dyadic(1));
    NetGrid net = build_net(Dyadic(2), d);
    REQUIRE(net.points.size() == 1);
    CHECK(net.points[0] == pt(0, 0, 0, 3));
    CHECK(net.halvings == 0);
}

TEST_CASE("net spacing 1/2 on the unit ball: size bound and covering") {
    Domain d = Domain::ball(pt(0, 0, 0, 4), Dyadic(1));
    NetGrid net = build_net(Dyadic(1, 1), d);
    CHECK(net.points.size() <= 512);  // 64 * (1/2)^-3
    CHECK(!net.points.empty());

    // Storage order is (z, then y, then x).
    for (size_t i = 1; i < net.points.size(); ++i) {
        const auto &a = net.points[i - 1], &b = net.points[i];
        bool ordered = a.z != b.z ? a.z < b.z : (a.y != b.y ? a.y < b.y : a.x < b.x);
        CHECK(ordered);
    }

    // Every domain point lies within the spacing of some net point.
    i128 r2_units = (i128)net.spacing.scaled_num(4) * net.spacing.scaled_num(4);
    for (const auto& p : d.lattice_points()) {
        i128 best = -1;
        for (const auto& y : net.points) {
            i128 d2 = dist2(p, y);
            if (best < 0 || d2 < best) best = d2;
        }
        CHECK(best <= r2_units);
    }
}

TEST_CASE("net spacing below the lattice resolution is an error") {
    Domain d = Domain::ball(pt(0, 0, 0, 4), Dyadic(1));
    CHECK_THROWS_AS(build_net(Dyadic(1, 5), d), std::invalid_argument);
    CHECK_THROWS_AS(build_net(Dyadic(0), d), std::invalid_argument);
}

TEST_CASE("nearest net point with storage-order tie breaking") {
    Domain line = Domain::slab(0, 0, Dyadic(0), false, Dyadic(3), false, Dyadic(0));
    NetGrid net = build_net(Dyadic(2), line);
    REQUIRE(net.points.size() == 2);
    CHECK(net.points[0] == pt(0, 0, 0, 0));
    CHECK(net.points[1] == pt(2, 0, 0, 0));
    CHECK(net.nearest(pt(0, 0, 0, 0)) == 0);
    CHECK(net.nearest(pt(3, 0, 0, 0)) == 1);
    CHECK(net.nearest(pt(1, 0, 0, 0)) == 0);  // equidistant; first in storage order wins
}

TEST_CASE("hausdorff distance on the pinned examples") {
    std::vector<LatticePoint> o{pt(0, 0, 0, 0)};
    std::vector<LatticePoint> e1{pt(1, 0, 0, 0)};
    std::vector<LatticePoint> both{pt(0, 0, 0, 0), pt(1, 0, 0, 0)};
    CHECK(hausdorff_distance(o, o) == 0.0);
    CHECK(hausdorff_distance(o, e1) == 1.0);
    CHECK(hausdorff_distance(both, o) == 1.0);
    CHECK(hausdorff_distance(o, both) == 1.0);

    std::vector<LatticePoint> empty;
    CHECK_THROWS_AS(hausdorff_distance(empty, o), std::invalid_argument);
    std::vector<LatticePoint> wrong{pt(0, 0, 0, 2)};
    CHECK_THROWS_AS(hausdorff_distance(o, wrong), std::invalid_argument);
}

TEST_CASE("hausdorff distance is a metric on random finite sets") {
    RandomSource rng(20240811, 0);
    auto random_set = [&](size_t maxsz) {
        std::vector<LatticePoint> s;
        size_t sz = 1 + rng.next_below(maxsz);
        for (size_t i = 0; i < sz; ++i)
            s.push_back(pt((i64)rng.next_below(17) - 8, (i64)rng.next_below(17) - 8, (i64)rng.next_below(17) - 8, 2));
        return s;
    };
    for (int trial = 0; trial < 50; ++trial) {
        auto A = random_set(6), B = random_set(6), C = random_set(6);
        double ab = hausdorff_distance(A, B);
        double ba = hausdorff_distance(B, A);
        double bc = hausdorff_distance(B, C);
        double ac = hausdorff_distance(A, C);
        CHECK(ab == ba);
        CHECK(hausdorff_distance(A, A) == 0.0);
        CHECK(ac <= ab + bc + 1e-12);
    }
}
