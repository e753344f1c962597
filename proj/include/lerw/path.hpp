#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "lerw/point.hpp"

namespace lerw {

// Nearest-neighbour path on 2^-n Z^3: a start vertex plus direction codes
// (indices into kDirections).  Vertices are kept materialized; a path of
// length L exposes L+1 vertices.
struct LatticePath {
    int n = 0;
    std::vector<std::array<i64, 3>> verts;  // verts[0] = start
    std::vector<uint8_t> steps;

    LatticePath() = default;
    explicit LatticePath(const LatticePoint& start) : n(start.n) {
        verts.push_back({start.x, start.y, start.z});
    }

    size_t len() const { return steps.size(); }
    size_t num_vertices() const { return verts.size(); }
    bool empty_path() const { return verts.empty(); }

    LatticePoint vertex(size_t i) const {
        const auto& v = verts[i];
        return LatticePoint{v[0], v[1], v[2], n};
    }
    LatticePoint start() const { return vertex(0); }
    LatticePoint last() const { return vertex(verts.size() - 1); }

    void push(int dir) {
        const auto& v = verts.back();
        verts.push_back({v[0] + kDirections[dir][0], v[1] + kDirections[dir][1], v[2] + kDirections[dir][2]});
        steps.push_back((uint8_t)dir);
    }

    std::vector<LatticePoint> vertices() const {
        std::vector<LatticePoint> out;
        out.reserve(verts.size());
        for (size_t i = 0; i < verts.size(); ++i) out.push_back(vertex(i));
        return out;
    }

    // Sub-path over vertex indices [from, to] inclusive.
    LatticePath segment(size_t from, size_t to) const {
        if (from > to || to >= verts.size()) throw std::invalid_argument("path: bad segment range");
        LatticePath s(vertex(from));
        for (size_t i = from; i < to; ++i) s.push(steps[i]);
        return s;
    }

    bool is_simple() const {
        std::unordered_set<LatticePoint, PointHash> seen;
        for (size_t i = 0; i < verts.size(); ++i)
            if (!seen.insert(vertex(i)).second) return false;
        return true;
    }
};

// Rebuilds a path from explicit vertices, validating the nearest-neighbour
// property and a common scale.
LatticePath path_from_vertices(std::span<const LatticePoint> vs);

// Concatenation; requires a.last() == b.start() and equal scales.
LatticePath concat(const LatticePath& a, const LatticePath& b);

} // namespace lerw
