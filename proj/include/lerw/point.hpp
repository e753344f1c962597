#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>

#include "lerw/dyadic.hpp"

namespace lerw {

using i64 = long long;
using i128 = __int128;

// Vertex of the rescaled lattice 2^-n Z^3, stored as integer multiples of 2^-n.
struct LatticePoint {
    i64 x = 0, y = 0, z = 0;
    int n = 0;

    friend bool operator==(const LatticePoint& a, const LatticePoint& b) {
        return a.x == b.x && a.y == b.y && a.z == b.z && a.n == b.n;
    }
    friend bool operator!=(const LatticePoint& a, const LatticePoint& b) { return !(a == b); }

    // Lexicographic by (x, y, z); scales must match where this is used.
    friend bool operator<(const LatticePoint& a, const LatticePoint& b) {
        if (a.x != b.x) return a.x < b.x;
        if (a.y != b.y) return a.y < b.y;
        return a.z < b.z;
    }

    std::array<i64, 3> coords() const { return {x, y, z}; }
    i64 coord(int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
    i64& coord(int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

    Dyadic dyadic_coord(int axis) const { return Dyadic(coord(axis), n); }

    std::string str() const {
        return "(" + std::to_string(x) + "," + std::to_string(y) + "," + std::to_string(z) + ")@2^-" + std::to_string(n);
    }
};

inline i128 norm2(i64 dx, i64 dy, i64 dz) {
    return (i128)dx * dx + (i128)dy * dy + (i128)dz * dz;
}

// Squared Euclidean distance in lattice units (multiples of 2^-2n).
inline i128 dist2(const LatticePoint& a, const LatticePoint& b) {
    return norm2(a.x - b.x, a.y - b.y, a.z - b.z);
}

inline i64 linf(const LatticePoint& a, const LatticePoint& b) {
    i64 dx = a.x > b.x ? a.x - b.x : b.x - a.x;
    i64 dy = a.y > b.y ? a.y - b.y : b.y - a.y;
    i64 dz = a.z > b.z ? a.z - b.z : b.z - a.z;
    i64 m = dx > dy ? dx : dy;
    return m > dz ? m : dz;
}

// The six unit steps in the fixed order +x, -x, +y, -y, +z, -z.
inline constexpr std::array<std::array<int, 3>, 6> kDirections = {{
    {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1},
}};

inline LatticePoint step(const LatticePoint& p, int dir) {
    LatticePoint q = p;
    q.x += kDirections[dir][0];
    q.y += kDirections[dir][1];
    q.z += kDirections[dir][2];
    return q;
}

struct PointHash {
    size_t operator()(const LatticePoint& p) const {
        uint64_t h = 0x9E3779B97F4A7C15ull;
        auto mix = [&](uint64_t v) {
            h ^= v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
        };
        mix((uint64_t)p.x);
        mix((uint64_t)p.y);
        mix((uint64_t)p.z);
        return (size_t)h;
    }
};

struct CoordHash {
    size_t operator()(const std::array<i64, 3>& a) const {
        uint64_t h = 0x9E3779B97F4A7C15ull;
        for (int i = 0; i < 3; ++i) h ^= (uint64_t)a[i] + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
        return (size_t)h;
    }
};

// Packs small coordinates into one key for fast hash sets on walk vertices.
// Valid while each coordinate fits in a signed 21-bit range.
inline uint64_t pack_key(i64 x, i64 y, i64 z) {
    const uint64_t m = (1u << 21) - 1;
    return ((uint64_t)(x + (1 << 20)) & m) | (((uint64_t)(y + (1 << 20)) & m) << 21) |
           (((uint64_t)(z + (1 << 20)) & m) << 42);
}

inline bool pack_key_ok(i64 x, i64 y, i64 z) {
    const i64 lim = (1 << 20) - 1;
    return x > -lim && x < lim && y > -lim && y < lim && z > -lim && z < lim;
}

} // namespace lerw
