#include "lerw/tree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lerw/walk.hpp"

namespace lerw {

std::optional<int32_t> SpanningTree::find(const LatticePoint& p) const {
    if (p.n != n) throw std::invalid_argument("tree: point scale differs from tree scale");
    auto it = index.find({p.x, p.y, p.z});
    if (it == index.end()) return std::nullopt;
    return it->second;
}

namespace {

// Incremental Wilson state: the partial tree plus one branch walk at a time.
struct WilsonBuilder {
    const Domain& domain;
    SpanningTree tree;
    std::vector<char> in_tree;

    explicit WilsonBuilder(const Domain& dom) : domain(dom) {
        tree.n = dom.scale();
        tree.verts = [&] {
            std::vector<std::array<i64, 3>> vs;
            for (const auto& p : dom.lattice_points()) vs.push_back({p.x, p.y, p.z});
            return vs;
        }();
        if (tree.verts.empty()) throw std::invalid_argument("wilson: domain has no lattice points");
        tree.parent.assign(tree.verts.size(), -2);
        tree.index.reserve(tree.verts.size() * 2);
        for (size_t i = 0; i < tree.verts.size(); ++i) tree.index.emplace(tree.verts[i], (int32_t)i);
        in_tree.assign(tree.verts.size(), 0);
    }

    int32_t must_index(const std::array<i64, 3>& v) const {
        auto it = tree.index.find(v);
        if (it == tree.index.end()) throw std::invalid_argument("wilson: vertex outside the domain");
        return it->second;
    }

    // Attaches the loop-erased chain of one absorbed walk.  The final chain
    // entry is the absorption point: a tree vertex, or an exterior exit point
    // when absorbed_at_boundary.
    void attach(const std::vector<std::array<i64, 3>>& chain, bool absorbed_at_boundary) {
        const size_t last = chain.size() - 1;
        for (size_t j = 0; j + 1 < last; ++j) {
            int32_t u = must_index(chain[j]);
            tree.parent[u] = must_index(chain[j + 1]);
            in_tree[u] = 1;
        }
        int32_t u = must_index(chain[last - 1]);
        if (absorbed_at_boundary) {
            tree.parent[u] = SpanningTree::kBoundary;
            tree.exits[u] = chain[last];
        } else {
            tree.parent[u] = must_index(chain[last]);
        }
        in_tree[u] = 1;
    }

    // Observer invoked at every walk vertex after the start, before the
    // absorption test; receives the coordinates and may accumulate statistics.
    template <class Observe>
    std::pair<bool, uint64_t> branch(int32_t start, RandomSource& rng, Observe&& observe, OnlineLoopErase& le) {
        std::array<i64, 3> cur = tree.verts[start];
        le.reset(LatticePoint{cur[0], cur[1], cur[2], tree.n});
        uint64_t steps = 0;
        while (true) {
            if (++steps > kDefaultStepCap) throw std::runtime_error("wilson: branch walk exceeded the step cap");
            int d = rng.next_direction();
            cur[0] += kDirections[d][0];
            cur[1] += kDirections[d][1];
            cur[2] += kDirections[d][2];
            le.push(cur[0], cur[1], cur[2]);
            observe(cur);
            if (!domain.contains_xyz(cur[0], cur[1], cur[2])) return {true, steps};
            auto it = tree.index.find(cur);
            if (it != tree.index.end() && in_tree[it->second]) return {false, steps};
        }
    }

    void grow_from(int32_t start, RandomSource& rng, OnlineLoopErase& le) {
        if (in_tree[start]) return;
        auto [at_boundary, steps] = branch(start, rng, [](const std::array<i64, 3>&) {}, le);
        (void)steps;
        attach(le.vertices(), at_boundary);
    }
};

} // namespace

SpanningTree sample_wired_ust(const Domain& domain, const std::vector<LatticePoint>& ordering, RandomSource& rng) {
    WilsonBuilder b(domain);
    if (ordering.size() != b.tree.verts.size())
        throw std::invalid_argument("wilson: ordering size differs from the domain vertex count");
    std::vector<char> seen(b.tree.verts.size(), 0);
    for (const auto& p : ordering) {
        if (p.n != b.tree.n) throw std::invalid_argument("wilson: ordering point at wrong scale");
        int32_t i = b.must_index({p.x, p.y, p.z});
        if (seen[i]) throw std::invalid_argument("wilson: ordering repeats a vertex");
        seen[i] = 1;
    }
    OnlineLoopErase le(LatticePoint{0, 0, 0, b.tree.n});
    for (const auto& p : ordering) b.grow_from(b.must_index({p.x, p.y, p.z}), rng, le);
    return std::move(b.tree);
}

SpanningTree sample_wired_ust(const Domain& domain, RandomSource& rng) {
    WilsonBuilder b(domain);
    OnlineLoopErase le(LatticePoint{0, 0, 0, b.tree.n});
    for (int32_t i = 0; i < (int32_t)b.tree.verts.size(); ++i) b.grow_from(i, rng, le);
    return std::move(b.tree);
}

SimplePath path_to_boundary(const SpanningTree& tree, const LatticePoint& x) {
    auto idx = tree.find(x);
    if (!idx) throw std::invalid_argument("tree: " + x.str() + " is not a domain vertex");
    std::vector<LatticePoint> chain;
    int32_t cur = *idx;
    while (true) {
        chain.push_back(tree.vertex(cur));
        int32_t p = tree.parent[cur];
        if (p == SpanningTree::kBoundary) {
            auto it = tree.exits.find(cur);
            if (it == tree.exits.end()) throw std::logic_error("tree: boundary vertex without exit point");
            chain.push_back(LatticePoint{it->second[0], it->second[1], it->second[2], tree.n});
            break;
        }
        cur = p;
        if (chain.size() > tree.size()) throw std::logic_error("tree: parent chain contains a cycle");
    }
    return path_from_vertices(chain);
}

int64_t tree_depth(const SpanningTree& tree, const LatticePoint& x) {
    auto idx = tree.find(x);
    if (!idx) throw std::invalid_argument("tree: " + x.str() + " is not a domain vertex");
    int64_t d = 0;
    int32_t cur = *idx;
    while (cur != SpanningTree::kBoundary) {
        cur = tree.parent[cur];
        ++d;
        if (d > (int64_t)tree.size() + 1) throw std::logic_error("tree: parent chain contains a cycle");
    }
    return d;
}

int64_t tree_distance(const SpanningTree& tree, const LatticePoint& x, const LatticePoint& y) {
    auto ix = tree.find(x), iy = tree.find(y);
    if (!ix || !iy) throw std::invalid_argument("tree: distance endpoint is not a domain vertex");
    int64_t dx = tree_depth(tree, x), dy = tree_depth(tree, y);
    int32_t a = *ix, b = *iy;
    int64_t d = 0;
    auto up = [&](int32_t v) { return v == SpanningTree::kBoundary ? SpanningTree::kBoundary : tree.parent[v]; };
    while (dx > dy) { a = up(a); --dx; ++d; }
    while (dy > dx) { b = up(b); --dy; ++d; }
    while (a != b) {
        a = up(a);
        b = up(b);
        d += 2;
    }
    return d;
}

std::string validate_tree(const SpanningTree& tree, const Domain& domain) {
    const size_t N = tree.verts.size();
    if (tree.parent.size() != N) return "parent array size mismatch";
    if (tree.index.size() != N) return "index size mismatch";
    if (N == 0) return "empty tree";
    size_t expect = domain.count_lattice_points();
    if (expect != N) return "vertex count differs from domain size";
    for (size_t i = 0; i < N; ++i) {
        const auto& v = tree.verts[i];
        auto it = tree.index.find(v);
        if (it == tree.index.end() || it->second != (int32_t)i) return "index inconsistent with vertex list";
        if (!domain.contains_xyz(v[0], v[1], v[2])) return "vertex outside the domain";
        int32_t p = tree.parent[i];
        if (p == SpanningTree::kBoundary) {
            auto e = tree.exits.find((int32_t)i);
            if (e == tree.exits.end()) return "boundary-parent vertex lacks an exit point";
            const auto& w = e->second;
            if (std::abs(w[0] - v[0]) + std::abs(w[1] - v[1]) + std::abs(w[2] - v[2]) != 1)
                return "exit point is not a lattice neighbour";
            if (domain.contains_xyz(w[0], w[1], w[2])) return "exit point lies inside the domain";
        } else {
            if (p < 0 || p >= (int32_t)N) return "parent index out of range";
            if (tree.exits.count((int32_t)i)) return "interior-parent vertex carries an exit point";
            const auto& w = tree.verts[p];
            if (std::abs(w[0] - v[0]) + std::abs(w[1] - v[1]) + std::abs(w[2] - v[2]) != 1)
                return "parent edge is not a lattice edge";
        }
    }
    if (tree.exits.empty()) return "no vertex attaches to the boundary";
    // Cycle / reachability check by chain walking with memoization.
    std::vector<uint8_t> state(N, 0);  // 0 unknown, 1 on current chain, 2 reaches boundary
    std::vector<int32_t> stack;
    for (size_t i = 0; i < N; ++i) {
        if (state[i] == 2) continue;
        stack.clear();
        int32_t cur = (int32_t)i;
        while (cur != SpanningTree::kBoundary && state[cur] != 2) {
            if (state[cur] == 1) return "parent chains contain a cycle";
            state[cur] = 1;
            stack.push_back(cur);
            cur = tree.parent[cur];
        }
        for (int32_t v : stack) state[v] = 2;
    }
    return "";
}

std::pair<SpanningTree, std::vector<NetWilsonRecord>> wilson_with_net(const Domain& domain, const SimplePath& gamma,
                                                                      const NetGrid& net,
                                                                      const std::vector<size_t>& tau_seq, double beta,
                                                                      RandomSource& rng) {
    if (!gamma.is_simple()) throw std::invalid_argument("wilson: gamma is not a simple path");
    if (gamma.n != domain.scale()) throw std::invalid_argument("wilson: gamma scale differs from domain scale");
    if (gamma.len() < 1) throw std::invalid_argument("wilson: gamma must end with an exit edge");
    if (!net.points.empty() && net.points[0].n != domain.scale())
        throw std::invalid_argument("wilson: net scale differs from domain scale");
    if (domain.contains(gamma.last())) throw std::invalid_argument("wilson: gamma must end outside the domain");

    WilsonBuilder b(domain);
    // Stage (i): seed the tree with gamma, oriented toward its exit edge.
    for (size_t j = 0; j + 1 < gamma.num_vertices(); ++j) {
        if (!domain.contains_xyz(gamma.verts[j][0], gamma.verts[j][1], gamma.verts[j][2]))
            throw std::invalid_argument("wilson: gamma leaves the domain before its final vertex");
        int32_t u = b.must_index(gamma.verts[j]);
        if (j + 2 < gamma.num_vertices()) {
            b.tree.parent[u] = b.must_index(gamma.verts[j + 1]);
        } else {
            b.tree.parent[u] = SpanningTree::kBoundary;
            b.tree.exits[u] = gamma.verts[j + 1];
        }
        b.in_tree[u] = 1;
    }

    const Dyadic r = net.requested;
    const double r_val = r.value();
    const double branch_cap = std::cbrt(r_val) * std::exp2(beta * gamma.n);
    const int n = gamma.n;
    // Exact test d < sqrt(r): squared distance (units of 2^-2n) shifted by the
    // dyadic denominator of r against num * 2^(2n).
    const i128 sqrt_r_rhs = (i128)r.num << (2 * n);
    const int sqrt_r_shift = r.k;

    std::vector<NetWilsonRecord> records;
    records.reserve(tau_seq.size());
    OnlineLoopErase le(LatticePoint{0, 0, 0, n});

    for (size_t l = 0; l < tau_seq.size(); ++l) {
        if (tau_seq[l] > gamma.len()) throw std::invalid_argument("wilson: tau index beyond gamma length");
        const LatticePoint x_l = gamma.vertex(tau_seq[l]);
        const LatticePoint y_l = net.points[net.nearest(x_l)];
        NetWilsonRecord rec;
        rec.l = (int)l;
        rec.y = y_l;
        rec.gated = domain.boundary_clearance(y_l) >= 4.0 * std::sqrt(r_val);

        const std::array<i64, 3> y{y_l.x, y_l.y, y_l.z};
        int32_t yi = b.must_index(y);
        i128 max_d2 = 0;
        bool inside_ball = true;
        if (b.in_tree[yi]) {
            rec.t = 0;
            rec.w = y_l;
            rec.branch_len = 0;
            rec.branch = {y};
        } else {
            auto observe = [&](const std::array<i64, 3>& v) {
                i128 d2 = norm2(v[0] - y[0], v[1] - y[1], v[2] - y[2]);
                if (d2 > max_d2) max_d2 = d2;
                if ((d2 << sqrt_r_shift) >= sqrt_r_rhs) inside_ball = false;
            };
            auto [at_boundary, steps] = b.branch(yi, rng, observe, le);
            b.attach(le.vertices(), at_boundary);
            rec.t = steps;
            const auto& w = le.vertices().back();
            rec.w = LatticePoint{w[0], w[1], w[2], n};
            rec.branch_len = le.len();
            rec.branch = le.vertices();
        }
        rec.max_excursion = std::sqrt((double)max_d2) / std::ldexp(1.0, n);
        rec.within_sqrt_r = inside_ball;
        // Window test with tau_{-1} = 0 and tau_{N+1} = len(gamma).
        size_t wlo = l == 0 ? 0 : tau_seq[l - 1];
        size_t whi = l + 1 < tau_seq.size() ? tau_seq[l + 1] : gamma.len();
        rec.endpoint_on_window = false;
        for (size_t j = wlo; j <= whi; ++j) {
            if (gamma.verts[j][0] == rec.w.x && gamma.verts[j][1] == rec.w.y && gamma.verts[j][2] == rec.w.z) {
                rec.endpoint_on_window = true;
                break;
            }
        }
        rec.h_ok = rec.within_sqrt_r && rec.endpoint_on_window;
        rec.i_ok = (double)rec.branch_len <= branch_cap;
        records.push_back(rec);
    }

    // Stage (iii): the remaining vertices in lexicographic order.
    for (int32_t i = 0; i < (int32_t)b.tree.verts.size(); ++i) b.grow_from(i, rng, le);

    return {std::move(b.tree), std::move(records)};
}

} // namespace lerw
