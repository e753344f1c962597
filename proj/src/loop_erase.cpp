#include "lerw/loop_erase.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "lerw/walk.hpp"

namespace lerw {

namespace {

int direction_code(i64 dx, i64 dy, i64 dz) {
    for (int d = 0; d < 6; ++d)
        if (kDirections[d][0] == dx && kDirections[d][1] == dy && kDirections[d][2] == dz) return d;
    throw std::logic_error("loop erasure produced a non-neighbour edge");
}

SimplePath path_from_coords(int n, std::vector<std::array<i64, 3>>&& vs) {
    SimplePath out;
    out.n = n;
    out.verts = std::move(vs);
    out.steps.reserve(out.verts.size() - 1);
    for (size_t i = 0; i + 1 < out.verts.size(); ++i) {
        const auto& a = out.verts[i];
        const auto& b = out.verts[i + 1];
        out.steps.push_back((uint8_t)direction_code(b[0] - a[0], b[1] - a[1], b[2] - a[2]));
    }
    return out;
}

} // namespace

SimplePath erase_loops(const LatticePath& path) {
    if (path.empty_path()) throw std::invalid_argument("erase_loops: empty path");
    std::vector<std::array<i64, 3>> le;
    std::unordered_map<std::array<i64, 3>, size_t, CoordHash> pos;
    le.reserve(64);
    pos.reserve(128);
    for (const auto& v : path.verts) {
        auto it = pos.find(v);
        if (it != pos.end()) {
            // A loop just closed: drop everything after the earlier visit.
            for (size_t j = it->second + 1; j < le.size(); ++j) pos.erase(le[j]);
            le.resize(it->second + 1);
        } else {
            pos.emplace(v, le.size());
            le.push_back(v);
        }
    }
    return path_from_coords(path.n, std::move(le));
}

std::vector<size_t> cut_times(const LatticePath& path) {
    if (path.empty_path()) throw std::invalid_argument("cut_times: empty path");
    const size_t m = path.num_vertices();
    std::unordered_map<std::array<i64, 3>, size_t, CoordHash> last;
    last.reserve(m * 2);
    for (size_t j = 0; j < m; ++j) last[path.verts[j]] = j;
    // t is a cut time iff no vertex seen by time t recurs strictly later,
    // i.e. the running maximum of last-occurrence indices equals t.
    std::vector<size_t> out;
    size_t running = 0;
    for (size_t t = 0; t < m; ++t) {
        running = std::max(running, last[path.verts[t]]);
        if (running == t) out.push_back(t);
    }
    return out;
}

std::pair<SimplePath, SimplePath> decompose_at_cut(const LatticePath& path, size_t k) {
    const size_t m = path.len();
    if (path.empty_path() || k > m) throw std::invalid_argument("decompose_at_cut: index out of range");
    std::unordered_set<std::array<i64, 3>, CoordHash> prefix;
    prefix.reserve(k * 2 + 2);
    for (size_t j = 0; j <= k; ++j) prefix.insert(path.verts[j]);
    for (size_t j = k + 1; j <= m; ++j)
        if (prefix.count(path.verts[j]))
            throw std::invalid_argument("decompose_at_cut: " + std::to_string(k) + " is not a cut time");
    return {erase_loops(path.segment(0, k)), erase_loops(path.segment(k, m))};
}

namespace {

// Marks, for the sub-path over vertex indices [lo, hi], which absolute
// indices are cut times of that segment.
std::vector<char> segment_cut_flags(const LatticePath& path, size_t lo, size_t hi) {
    std::unordered_map<std::array<i64, 3>, size_t, CoordHash> last;
    last.reserve((hi - lo + 1) * 2);
    for (size_t j = lo; j <= hi; ++j) last[path.verts[j]] = j;
    std::vector<char> cut(hi - lo + 1, 0);
    size_t running = lo;
    for (size_t t = lo; t <= hi; ++t) {
        running = std::max(running, last[path.verts[t]]);
        if (running == t) cut[t - lo] = 1;
    }
    return cut;
}

bool on_plane_piece(const LatticePath& path, i64 cx_units, i64 half, size_t j) {
    const auto& v = path.verts[j];
    return v[0] == cx_units && v[1] >= -half && v[1] <= half && v[2] >= -half && v[2] <= half;
}

size_t require_hit(const LatticePath& path, const TubePartition& tube, const Dyadic& x, const char* what) {
    auto t = plane_hit_time(path, tube, x);
    if (!t)
        throw std::invalid_argument(std::string("cut search: path never hits plane piece ") + what + " at x = " +
                                    x.str());
    return *t;
}

} // namespace

std::vector<size_t> nice_cut_times(const LatticePath& path, const TubePartition& tube, int i) {
    if (i < 1 || i + 1 >= (int)tube.a.size())
        throw std::invalid_argument("nice_cut_times: cube index " + std::to_string(i) + " out of range");
    const Dyadic half_q(1, tube.m + tube.m0 + 1);
    const Dyadic lo_plane = tube.a[i] + half_q;        // a_i + q/2
    const Dyadic hi_plane = tube.a[i] + tube.q;        // a_i + q
    const size_t t0 = require_hit(path, tube, tube.a[i], "a_i");
    const size_t w0 = require_hit(path, tube, lo_plane, "a_i + q/2");
    const size_t w1 = require_hit(path, tube, hi_plane, "a_i + q");
    const size_t t2 = require_hit(path, tube, tube.a[i + 1], "a_{i+1}");

    const size_t k_lo = std::max(w0, t0);
    const size_t k_hi = std::min(w1, t2);
    if (k_lo > k_hi) return {};

    const i64 lo_units = lo_plane.scaled_num(path.n);
    const i64 hi_units = hi_plane.scaled_num(path.n);
    const i64 half = (i64)1 << (path.n - tube.m);

    // Condition (ii) on [t0, t2] reduces to segment cut times.
    std::vector<char> cut = segment_cut_flags(path, t0, t2);
    // Condition (iv): no index in [k, t2] may sit on H(a_i); record the last
    // visit to that plane piece at or before t2.
    const i64 ai_units = tube.a[i].scaled_num(path.n);
    size_t last_on_plane = t0;
    for (size_t j = t2 + 1; j-- > t0;) {
        if (on_plane_piece(path, ai_units, half, j)) {
            last_on_plane = j;
            break;
        }
    }

    std::vector<size_t> out;
    for (size_t k = k_lo; k <= k_hi; ++k) {
        if (!cut[k - t0]) continue;                    // (ii)
        if (k <= last_on_plane) continue;              // (iv)
        const auto& v = path.verts[k];                 // (iii)
        if (v[0] < lo_units || v[0] > hi_units) continue;
        if (v[1] < -half || v[1] > half || v[2] < -half || v[2] > half) continue;
        out.push_back(k);
    }
    return out;
}

std::vector<size_t> local_nice_cut_times(const LatticePath& path, const TubePartition& tube) {
    const Dyadic half_q(1, tube.m + tube.m0 + 1);
    const Dyadic a1 = tube.a[1];
    const Dyadic lo_plane = a1 + half_q;               // a_1 + q/2
    const Dyadic hi_plane = a1 + tube.q;               // a_1 + q
    const Dyadic far_plane = a1 + tube.q + tube.q;     // a_1 + 2q
    const Dyadic back_plane = a1 - tube.q;             // a_1 - q
    const size_t t0 = require_hit(path, tube, a1, "a_1");
    const size_t w0 = require_hit(path, tube, lo_plane, "a_1 + q/2");
    const size_t w1 = require_hit(path, tube, hi_plane, "a_1 + q");
    const size_t t2 = require_hit(path, tube, far_plane, "a_1 + 2q");

    const size_t k_lo = std::max(w0, t0);
    const size_t k_hi = std::min(w1, t2);
    if (k_lo > k_hi) return {};

    // (iv') second clause: the whole stretch [t0, t2] stays inside the open
    // ball of radius 4q around S(t0).
    const auto& c = path.verts[t0];
    const i128 rad = (i128)((i64)4 << (path.n - tube.m - tube.m0));
    const i128 rad2 = rad * rad;
    for (size_t j = t0; j <= t2; ++j) {
        const auto& v = path.verts[j];
        if (norm2(v[0] - c[0], v[1] - c[1], v[2] - c[2]) >= rad2) return {};
    }

    const i64 lo_units = lo_plane.scaled_num(path.n);
    const i64 hi_units = hi_plane.scaled_num(path.n);
    const i64 half = (i64)1 << (path.n - tube.m);

    std::vector<char> cut = segment_cut_flags(path, t0, t2);
    // (iv') first clause, as in the global variant.
    const i64 a1_units = a1.scaled_num(path.n);
    size_t last_on_a1 = t0;
    for (size_t j = t2 + 1; j-- > t0;) {
        if (on_plane_piece(path, a1_units, half, j)) {
            last_on_a1 = j;
            break;
        }
    }
    // (ii') second clause: earliest visit of [t0, t2] to H(a_1 - q); every k
    // at or beyond it is excluded since S[t0, k] would contain that visit.
    size_t first_on_back = plane_hit_time(path, tube, back_plane, t0).value_or(path.num_vertices());

    std::vector<size_t> out;
    for (size_t k = k_lo; k <= k_hi; ++k) {
        if (!cut[k - t0]) continue;                    // (ii') first clause
        if (first_on_back <= k) continue;              // (ii') second clause
        if (k <= last_on_a1) continue;                 // (iv') first clause
        const auto& v = path.verts[k];                 // (iii')
        if (v[0] < lo_units || v[0] > hi_units) continue;
        if (v[1] < -half || v[1] > half || v[2] < -half || v[2] > half) continue;
        out.push_back(k);
    }
    return out;
}

void OnlineLoopErase::reset(const LatticePoint& start) {
    n_ = start.n;
    le_.clear();
    pos_.clear();
    le_.push_back({start.x, start.y, start.z});
    pos_.emplace(le_.back(), 0);
}

void OnlineLoopErase::push(i64 x, i64 y, i64 z) {
    const std::array<i64, 3> v{x, y, z};
    auto it = pos_.find(v);
    if (it != pos_.end()) {
        for (size_t j = it->second + 1; j < le_.size(); ++j) pos_.erase(le_[j]);
        le_.resize(it->second + 1);
    } else {
        pos_.emplace(v, le_.size());
        le_.push_back(v);
    }
}

SimplePath OnlineLoopErase::path() const {
    auto copy = le_;
    return path_from_coords(n_, std::move(copy));
}

namespace {

constexpr uint64_t kEmptySlot = ~0ull;
constexpr i64 kPackOffset = (i64)1 << 20;

inline uint64_t pack_coords(i64 x, i64 y, i64 z) {
    if (x >= kPackOffset || x <= -kPackOffset || y >= kPackOffset || y <= -kPackOffset || z >= kPackOffset ||
        z <= -kPackOffset)
        throw std::overflow_error("fast loop erasure: coordinate beyond the packed 21-bit range");
    return ((uint64_t)(x + kPackOffset) << 42) | ((uint64_t)(y + kPackOffset) << 21) | (uint64_t)(z + kPackOffset);
}

inline uint64_t slot_hash(uint64_t key) {
    key = (key ^ (key >> 30)) * 0xBF58476D1CE4E5B9ull;
    key = (key ^ (key >> 27)) * 0x94D049BB133111EBull;
    return key ^ (key >> 31);
}

} // namespace

void FastLoopErase::reset(const LatticePoint& start) {
    n_ = start.n;
    le_.clear();
    keys_.assign(1024, kEmptySlot);
    idx_.assign(1024, 0);
    mask_ = 1023;
    occupied_ = 0;
    le_.push_back({start.x, start.y, start.z});
    size_t s = slot_hash(pack_coords(start.x, start.y, start.z)) & mask_;
    keys_[s] = pack_coords(start.x, start.y, start.z);
    idx_[s] = 0;
    occupied_ = 1;
}

void FastLoopErase::grow() {
    size_t cap = (mask_ + 1) * 2;
    while (cap < le_.size() * 2) cap *= 2;
    keys_.assign(cap, kEmptySlot);
    idx_.assign(cap, 0);
    mask_ = cap - 1;
    occupied_ = le_.size();
    for (size_t i = 0; i < le_.size(); ++i) {
        uint64_t key = pack_coords(le_[i][0], le_[i][1], le_[i][2]);
        size_t s = slot_hash(key) & mask_;
        while (keys_[s] != kEmptySlot) s = (s + 1) & mask_;
        keys_[s] = key;
        idx_[s] = (uint32_t)i;
    }
}

void FastLoopErase::push(i64 x, i64 y, i64 z) {
    const uint64_t key = pack_coords(x, y, z);
    size_t s = slot_hash(key) & mask_;
    for (;; s = (s + 1) & mask_) {
        if (keys_[s] == kEmptySlot) {
            keys_[s] = key;
            idx_[s] = (uint32_t)le_.size();
            le_.push_back({x, y, z});
            if (++occupied_ * 10 > (mask_ + 1) * 7) grow();
            return;
        }
        if (keys_[s] != key) continue;
        size_t i = idx_[s];
        if (i < le_.size() && le_[i][0] == x && le_[i][1] == y && le_[i][2] == z) {
            // Live earlier visit: close the loop.  Orphaned entries go stale
            // on their own once le_ shrinks past them.
            le_.resize(i + 1);
        } else {
            // Stale slot for this key: reclaim it.
            idx_[s] = (uint32_t)le_.size();
            le_.push_back({x, y, z});
        }
        return;
    }
}

SimplePath FastLoopErase::path() const {
    auto copy = le_;
    return path_from_coords(n_, std::move(copy));
}

} // namespace lerw
