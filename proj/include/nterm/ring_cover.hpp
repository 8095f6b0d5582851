#pragma once

// Covering of a dyadic ring Q* \ Q by axis-aligned cubes chained along a
// Hamiltonian cycle of the hypercube graph, with consecutive cubes
// overlapping by at least half the smaller volume. All geometry runs on
// exact dyadic rationals; the verifier admits zero tolerance.
//
// Interior rings (Q away from the boundary of Q*) get exactly 4(2^d-1)
// cubes: 2(2^d-1) extended parallelotops plus one in-between cube per cycle
// edge. Rings touching the boundary run the same construction against the
// doubled cube, trim to Q*, drop the empty pieces, and bridge the surviving
// cyclic neighbours; the count lands in [2(2^d-1), 4(2^d-1)).

#include "grid.hpp"
#include "polyfit.hpp"
#include "variation.hpp"

namespace nterm {

struct NotProperSubcube : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// exact dyadic rational num / 2^lev
struct Dy {
    std::int64_t num = 0;
    int lev = 0;

    static Dy of(std::int64_t n, int l) { return Dy{n, l}; }
    double value() const { return std::ldexp((double)num, -lev); }
};

inline std::int64_t dy_scaled(const Dy& a, int lev) {
    if (lev < a.lev) throw std::logic_error("dy_scaled: losing precision");
    if (lev - a.lev > 56) throw std::overflow_error("dy_scaled: shift too large");
    return a.num << (lev - a.lev);
}
inline int dy_cmp(const Dy& a, const Dy& b) {
    const int L = std::max(a.lev, b.lev);
    const std::int64_t x = dy_scaled(a, L), y = dy_scaled(b, L);
    return x < y ? -1 : (x > y ? 1 : 0);
}
inline Dy dy_add(const Dy& a, const Dy& b) {
    const int L = std::max(a.lev, b.lev);
    return Dy{dy_scaled(a, L) + dy_scaled(b, L), L};
}
inline Dy dy_sub(const Dy& a, const Dy& b) {
    const int L = std::max(a.lev, b.lev);
    return Dy{dy_scaled(a, L) - dy_scaled(b, L), L};
}
inline Dy dy_half(const Dy& a) { return Dy{a.num, a.lev + 1}; }
inline Dy dy_min(const Dy& a, const Dy& b) { return dy_cmp(a, b) <= 0 ? a : b; }
inline Dy dy_max(const Dy& a, const Dy& b) { return dy_cmp(a, b) >= 0 ? a : b; }
inline std::string dy_str(const Dy& a) { return std::to_string(a.num) + "/2^" + std::to_string(a.lev); }

struct DyInterval {
    Dy lo, hi;  // half-open [lo, hi)
    bool empty() const { return dy_cmp(lo, hi) >= 0; }
    Dy length() const { return dy_sub(hi, lo); }
};

inline DyInterval iv_intersect(const DyInterval& a, const DyInterval& b) {
    return DyInterval{dy_max(a.lo, b.lo), dy_min(a.hi, b.hi)};
}
inline bool iv_subset(const DyInterval& a, const DyInterval& b) {
    return a.empty() || (dy_cmp(b.lo, a.lo) <= 0 && dy_cmp(a.hi, b.hi) <= 0);
}

// Half-open box with exact dyadic endpoints.
struct Box {
    std::vector<DyInterval> iv;

    int dim() const { return (int)iv.size(); }
    bool empty() const {
        for (auto& i : iv)
            if (i.empty()) return true;
        return false;
    }
    bool is_cube() const {
        for (int i = 1; i < dim(); ++i)
            if (dy_cmp(iv[i].length(), iv[0].length()) != 0) return false;
        return true;
    }
};

inline Box box_intersect(const Box& a, const Box& b) {
    Box r;
    r.iv.resize(a.iv.size());
    for (std::size_t i = 0; i < a.iv.size(); ++i) r.iv[i] = iv_intersect(a.iv[i], b.iv[i]);
    return r;
}
inline bool box_subset(const Box& a, const Box& b) {
    if (a.empty()) return true;
    for (std::size_t i = 0; i < a.iv.size(); ++i)
        if (!iv_subset(a.iv[i], b.iv[i])) return false;
    return true;
}
inline bool boxes_disjoint(const Box& a, const Box& b) { return box_intersect(a, b).empty(); }

inline Box box_of_cube(const DyadicCube& q) {
    Box b;
    b.iv.resize(q.dim);
    for (int i = 0; i < q.dim; ++i)
        b.iv[i] = DyInterval{Dy::of(q.index[i], q.level), Dy::of((std::int64_t)q.index[i] + 1, q.level)};
    return b;
}

// volume comparison: 2*|a| >= |b| etc., exact via 128-bit products
struct DyVolume {
    unsigned __int128 num = 1;
    int lev = 0;
    bool zero = false;
};

inline DyVolume box_volume(const Box& b) {
    DyVolume v;
    for (auto& i : b.iv) {
        Dy len = i.length();
        if (len.num <= 0) {
            v.zero = true;
            return v;
        }
        v.num *= (unsigned __int128)len.num;
        v.lev += len.lev;
        if (v.lev > 500) throw std::overflow_error("box_volume: level overflow");
    }
    return v;
}

// compare a*na/2^la  vs  b*nb/2^lb  with small integer multipliers
inline int vol_cmp(unsigned __int128 na, const DyVolume& a, unsigned __int128 nb, const DyVolume& b) {
    if (a.zero && b.zero) return 0;
    if (a.zero) return -1;
    if (b.zero) return 1;
    unsigned __int128 x = na * a.num, y = nb * b.num;
    int lx = a.lev, ly = b.lev;
    // reduce the common part of the exponents, then shift the smaller one
    const int shift = std::abs(lx - ly);
    if (shift > 120) throw std::overflow_error("vol_cmp: exponent gap too large");
    if (lx < ly)
        x <<= shift;  // x has the coarser denominator
    else
        y <<= shift;
    return x < y ? -1 : (x > y ? 1 : 0);
}

// ---------------------------------------------------------------------------
// Hamiltonian cycle on the hypercube graph: reflected Gray code.
// ---------------------------------------------------------------------------
inline std::vector<std::uint32_t> hamiltonian_cycle(int d) {
    if (d < 2) throw std::invalid_argument("hamiltonian_cycle: d >= 2 required");
    if (d > 20) throw std::invalid_argument("hamiltonian_cycle: d too large");
    std::vector<std::uint32_t> out;
    out.reserve(std::size_t(1) << d);
    for (std::uint32_t i = 0; i < (1u << d); ++i) out.push_back(i ^ (i >> 1));
    return out;
}

// ---------------------------------------------------------------------------
// Cycle cover
// ---------------------------------------------------------------------------
struct CycleCover {
    int d = 2;
    bool interior = true;
    std::vector<Box> cubes;                                 // mains and in-betweens, cycle order
    std::vector<int> is_bridge;                             // 1 for in-between/pad cubes
    std::vector<std::pair<int, int>> designed_pairs;        // indices with the half-overlap guarantee
    std::vector<std::uint32_t> vertex_sequence;             // Hamiltonian vertex masks, pi then pi-hat
};

namespace ringdetail {

struct Node {
    bool in_pi;           // pi family (partition through a) vs pi-hat (through b)
    std::uint32_t mask;   // per-axis side selector, bit i set = far side on axis i
};

// merged Hamiltonian cycle over pi \ {Pi_e} and pi-hat \ {Q}; nodes in cycle
// order, consecutive nodes (cyclically) share exactly one structural axis
inline std::vector<Node> merged_cycle(int d) {
    const auto gray = hamiltonian_cycle(d);
    const std::uint32_t full = (1u << d) - 1;
    std::size_t pos_e = 0;
    for (std::size_t i = 0; i < gray.size(); ++i)
        if (gray[i] == full) pos_e = i;
    const std::size_t n = gray.size();
    // path around the cycle skipping e
    std::vector<std::uint32_t> p1;
    for (std::size_t s = 1; s < n; ++s) p1.push_back(gray[(pos_e + s) % n]);

    auto flipped_axis = [&](std::uint32_t m) {
        std::uint32_t x = m ^ full;
        int a = 0;
        while (!((x >> a) & 1u)) ++a;
        return a;
    };
    // orient so the cycle exits into pi-hat at the lexicographically smaller endpoint
    std::uint32_t eps_entry = p1.front(), eps_exit = p1.back();
    auto lex_less = [&](std::uint32_t a, std::uint32_t b) {
        for (int i = 0; i < d; ++i) {
            std::uint32_t ba = (a >> (d - 1 - i)) & 1u, bb = (b >> (d - 1 - i)) & 1u;
            if (ba != bb) return ba < bb;
        }
        return false;
    };
    if (lex_less(eps_entry, eps_exit)) {
        std::reverse(p1.begin(), p1.end());
        std::swap(eps_entry, eps_exit);
    }
    const int i_entry = flipped_axis(eps_entry), i_exit = flipped_axis(eps_exit);

    // pi-hat path from e_{j1} to e_{j2}; splice needs j1 != i_exit, j2 != i_entry
    const int j1 = i_entry, j2 = i_exit;
    std::vector<int> perm(d, -1);  // gray bit -> axis
    perm[0] = j1;
    perm[d - 1] = j2;
    {
        int next = 0;
        for (int b = 1; b < d - 1; ++b) {
            while (next == j1 || next == j2) ++next;
            perm[b] = next++;
        }
    }
    std::vector<std::uint32_t> p2;
    for (std::size_t s = 1; s < n; ++s) {
        std::uint32_t m = gray[s], out = 0;
        for (int b = 0; b < d; ++b)
            if ((m >> b) & 1u) out |= 1u << perm[b];
        p2.push_back(out);
    }

    std::vector<Node> cyc;
    for (auto m : p1) cyc.push_back({true, m});
    for (auto m : p2) cyc.push_back({false, m});
    return cyc;
}

struct NormalizedRing {
    int d;
    int n;                      // level of Q within the unit cube, >= 1
    std::vector<Dy> a, b;       // corners of Q, far-son normalized (a_i >= 1/2)
    std::uint32_t reflect_mask; // axes flipped during normalization
    bool interior;              // all b_i < 1
};

inline NormalizedRing normalize(const DyadicCube& inner, const DyadicCube& outer) {
    if (!(outer.contains(inner)) || inner == outer) throw NotProperSubcube("cover_ring: need Q proper dyadic subcube");
    const int d = inner.dim;
    NormalizedRing r;
    r.d = d;
    r.n = inner.level - outer.level;
    r.a.resize(d);
    r.b.resize(d);
    r.reflect_mask = 0;
    const std::int64_t side = std::int64_t(1) << r.n;
    for (int i = 0; i < d; ++i) {
        std::int64_t ai = (std::int64_t)inner.index[i] - ((std::int64_t)outer.index[i] << r.n);
        // reflect axes where Q sits in the near half, so that a_i >= 1/2
        if (ai < side / 2) {
            ai = side - 1 - ai;
            r.reflect_mask |= 1u << i;
        }
        r.a[i] = Dy::of(ai, r.n);
        r.b[i] = Dy::of(ai + 1, r.n);
    }
    r.interior = true;
    for (int i = 0; i < d; ++i)
        if (r.b[i].num == side) r.interior = false;
    return r;
}

// trimmed parallelotop of a cycle node inside the unit cube
inline Box parallelotop(const NormalizedRing& r, const Node& nd) {
    Box p;
    p.iv.resize(r.d);
    const Dy zero = Dy::of(0, 0), one = Dy::of(1, 0);
    for (int i = 0; i < r.d; ++i) {
        const bool far = (nd.mask >> i) & 1u;
        if (nd.in_pi)
            p.iv[i] = far ? DyInterval{r.a[i], one} : DyInterval{zero, r.a[i]};
        else
            p.iv[i] = far ? DyInterval{r.b[i], one} : DyInterval{r.a[i], r.b[i]};
    }
    return p;
}

// max-edge extension of a (nonempty trimmed) parallelotop to a cube
inline Box extend_to_cube(const NormalizedRing& r, const Node& nd) {
    const int d = r.d;
    const Dy one = Dy::of(1, 0);
    Box out;
    out.iv.resize(d);
    if (nd.in_pi) {
        // near edges have length a_i, far edges 1 - a_i <= 1/2 <= a_j
        int i0 = -1;
        for (int i = 0; i < d; ++i) {
            if ((nd.mask >> i) & 1u) continue;
            if (i0 < 0 || dy_cmp(r.a[i], r.a[i0]) > 0) i0 = i;
        }
        const Dy ell = r.a[i0];
        for (int i = 0; i < d; ++i) {
            const bool far = (nd.mask >> i) & 1u;
            out.iv[i] = far ? DyInterval{dy_sub(one, ell), one} : DyInterval{Dy::of(0, 0), ell};
        }
    } else {
        // far edges have length 1 - b_i >= 2^-n = b_i - a_i
        int i0 = -1;
        for (int i = 0; i < d; ++i) {
            if (!((nd.mask >> i) & 1u)) continue;
            if (i0 < 0 || dy_cmp(r.b[i], r.b[i0]) < 0) i0 = i;
        }
        const Dy ell = dy_sub(one, r.b[i0]);
        for (int i = 0; i < d; ++i) {
            const bool far = (nd.mask >> i) & 1u;
            out.iv[i] = far ? DyInterval{dy_sub(one, ell), one} : DyInterval{dy_sub(r.b[i], ell), r.b[i]};
        }
    }
    return out;
}

// In-between cube for two cubes touching or overlapping along every axis,
// with at most one deficient axis. Returns nullopt when the geometry does
// not admit one (possible for non-adjacent survivors of the trimmed case).
inline std::optional<Box> bridge(const Box& k1, const Box& k2) {
    const int d = k1.dim();
    int deficient = -1;
    for (int i = 0; i < d; ++i) {
        const DyInterval iv = iv_intersect(k1.iv[i], k2.iv[i]);
        const Dy len = iv.length();
        const int c = dy_cmp(len, Dy::of(0, 0));
        if (c < 0) return std::nullopt;  // strict gap
        if (c == 0) {
            if (deficient >= 0) return std::nullopt;
            deficient = i;
        }
    }
    // shortest usable length across axes
    Dy t = dy_min(k1.iv[0].length(), k2.iv[0].length());
    for (int i = 0; i < d; ++i) {
        t = dy_min(t, dy_min(k1.iv[i].length(), k2.iv[i].length()));
        if (i != deficient) t = dy_min(t, iv_intersect(k1.iv[i], k2.iv[i]).length());
    }
    if (dy_cmp(t, Dy::of(0, 0)) <= 0) return std::nullopt;
    Box s;
    s.iv.resize(d);
    for (int i = 0; i < d; ++i) {
        const DyInterval iv = iv_intersect(k1.iv[i], k2.iv[i]);
        const Dy mid = dy_half(dy_add(iv.lo, iv.hi));
        const Dy ht = dy_half(t);
        s.iv[i] = DyInterval{dy_sub(mid, ht), dy_add(mid, ht)};
    }
    return s;
}

// centered half-side subcube, used to pad the count when a bridge is impossible
inline Box pad_cube(const Box& k) {
    Box s;
    s.iv.resize(k.dim());
    for (int i = 0; i < k.dim(); ++i) {
        const Dy q = dy_half(dy_half(k.iv[i].length()));
        s.iv[i] = DyInterval{dy_add(k.iv[i].lo, q), dy_sub(k.iv[i].hi, q)};
    }
    return s;
}

// map a box in normalized coordinates back to the original frame
inline Box denormalize(const Box& b, const NormalizedRing& r, const DyadicCube& outer) {
    Box out;
    out.iv.resize(r.d);
    for (int i = 0; i < r.d; ++i) {
        DyInterval iv = b.iv[i];
        if ((r.reflect_mask >> i) & 1u) {
            const Dy one = Dy::of(1, 0);
            iv = DyInterval{dy_sub(one, b.iv[i].hi), dy_sub(one, b.iv[i].lo)};
        }
        // x -> (x + outer.index) / 2^outer.level
        auto shift_scale = [&](const Dy& v) {
            return dy_add(Dy{v.num, v.lev + outer.level}, Dy::of(outer.index[i], outer.level));
        };
        out.iv[i] = DyInterval{shift_scale(iv.lo), shift_scale(iv.hi)};
    }
    return out;
}

}  // namespace ringdetail

inline CycleCover cover_ring(const DyadicCube& inner, const DyadicCube& outer) {
    using namespace ringdetail;
    const auto r = normalize(inner, outer);
    const int d = r.d;
    auto cyc = merged_cycle(d);

    CycleCover cc;
    cc.d = d;
    cc.interior = r.interior;
    for (auto& nd : cyc) cc.vertex_sequence.push_back(nd.mask | (nd.in_pi ? 0u : (1u << 30)));

    // surviving mains, in cycle order
    std::vector<Box> mains;
    std::vector<std::size_t> alive;
    for (std::size_t t = 0; t < cyc.size(); ++t) {
        if (parallelotop(r, cyc[t]).empty()) continue;  // trimmed away (non-interior only)
        alive.push_back(t);
        mains.push_back(extend_to_cube(r, cyc[t]));
    }
    if (r.interior && alive.size() != cyc.size()) throw std::logic_error("interior ring lost a parallelotop");

    const std::size_t M = mains.size();
    for (std::size_t s = 0; s < M; ++s) {
        const int main_idx = (int)cc.cubes.size();
        cc.cubes.push_back(denormalize(mains[s], r, outer));
        cc.is_bridge.push_back(0);
        const Box& k1 = mains[s];
        const Box& k2 = mains[(s + 1) % M];
        auto br = bridge(k1, k2);
        if (r.interior && !br) throw std::logic_error("interior cycle edge admits no in-between cube");
        if (br) {
            cc.cubes.push_back(denormalize(*br, r, outer));
            cc.is_bridge.push_back(1);
            cc.designed_pairs.emplace_back(main_idx, main_idx + 1);
            cc.designed_pairs.emplace_back(main_idx + 1, (int)((main_idx + 2) % (2 * M)));
        } else {
            cc.cubes.push_back(denormalize(pad_cube(k1), r, outer));
            cc.is_bridge.push_back(1);
            cc.designed_pairs.emplace_back(main_idx, main_idx + 1);
        }
    }
    // pair indices wrap within the final list; fix the wrap target length
    for (auto& [u, v] : cc.designed_pairs) {
        u %= (int)cc.cubes.size();
        v %= (int)cc.cubes.size();
    }
    return cc;
}

// ---------------------------------------------------------------------------
// Exact verifier: coverage, containment, and the half-overlap inequality.
// ---------------------------------------------------------------------------
struct CoverReport {
    std::vector<std::string> violations;
    std::size_t cube_count = 0;
    bool ok() const { return violations.empty(); }
};

inline CoverReport verify_cover(const CycleCover& cc, const DyadicCube& inner, const DyadicCube& outer) {
    CoverReport rep;
    rep.cube_count = cc.cubes.size();
    const Box qin = box_of_cube(inner), qout = box_of_cube(outer);
    const int d = cc.d;

    for (std::size_t i = 0; i < cc.cubes.size(); ++i) {
        const Box& K = cc.cubes[i];
        if (K.empty()) rep.violations.push_back("cube " + std::to_string(i) + " is empty");
        if (!K.empty() && !K.is_cube()) rep.violations.push_back("cube " + std::to_string(i) + " is not a cube");
        if (!box_subset(K, qout)) rep.violations.push_back("cube " + std::to_string(i) + " leaves Q*");
        if (!boxes_disjoint(K, qin)) rep.violations.push_back("cube " + std::to_string(i) + " meets Q");
    }

    // exact coverage sweep over the arrangement grid of all endpoints
    std::vector<std::vector<Dy>> cuts(d);
    for (int i = 0; i < d; ++i) {
        cuts[i].push_back(qout.iv[i].lo);
        cuts[i].push_back(qout.iv[i].hi);
        cuts[i].push_back(qin.iv[i].lo);
        cuts[i].push_back(qin.iv[i].hi);
        for (auto& K : cc.cubes) {
            cuts[i].push_back(K.iv[i].lo);
            cuts[i].push_back(K.iv[i].hi);
        }
        std::sort(cuts[i].begin(), cuts[i].end(), [](const Dy& x, const Dy& y) { return dy_cmp(x, y) < 0; });
        cuts[i].erase(std::unique(cuts[i].begin(), cuts[i].end(),
                                  [](const Dy& x, const Dy& y) { return dy_cmp(x, y) == 0; }),
                      cuts[i].end());
    }
    std::vector<std::size_t> ctr(d, 0);
    bool done = false;
    while (!done) {
        Box cell;
        cell.iv.resize(d);
        bool valid = true;
        for (int i = 0; i < d; ++i) {
            if (ctr[i] + 1 >= cuts[i].size()) {
                valid = false;
                break;
            }
            cell.iv[i] = DyInterval{cuts[i][ctr[i]], cuts[i][ctr[i] + 1]};
        }
        if (valid && box_subset(cell, qout) && boxes_disjoint(cell, qin)) {
            bool covered = false;
            for (auto& K : cc.cubes)
                if (box_subset(cell, K)) {
                    covered = true;
                    break;
                }
            if (!covered) {
                std::string s = "uncovered cell";
                for (int i = 0; i < d; ++i)
                    s += " [" + dy_str(cell.iv[i].lo) + "," + dy_str(cell.iv[i].hi) + ")";
                rep.violations.push_back(s);
            }
        }
        int i = d - 1;
        while (i >= 0 && ++ctr[i] + 1 >= cuts[i].size()) ctr[i--] = 0;
        if (i < 0) done = true;
    }

    // half-overlap on the designed pairs, exact
    for (auto& [u, v] : cc.designed_pairs) {
        const Box inter = box_intersect(cc.cubes[u], cc.cubes[v]);
        const DyVolume vi = box_volume(inter);
        const DyVolume v1 = box_volume(cc.cubes[u]);
        const DyVolume v2 = box_volume(cc.cubes[v]);
        const DyVolume& vmin = vol_cmp(1, v1, 1, v2) <= 0 ? v1 : v2;
        if (vol_cmp(2, vi, 1, vmin) < 0)
            rep.violations.push_back("pair (" + std::to_string(u) + "," + std::to_string(v) +
                                     ") overlap below half the smaller volume");
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Empirical data for the ring approximation bound: E_k on the ring vs its
// variation, plus the chain sum over the cover (the constant is recorded,
// never asserted).
// ---------------------------------------------------------------------------
struct RingChainBound {
    double lhs = 0;        // E_k(f; Q*\Q; L_q)
    double rhs = 0;        // var_p^k(f; Q*\Q; L_q)
    double chain_sum = 0;  // sum over cover cubes of E_k(f;K;L_q)
    double ratio = 0;      // lhs / rhs (0 when rhs is 0)
};

inline std::vector<DyadicCube> box_cells(const Box& b, int d, int J) {
    std::vector<std::int64_t> lo(d), hi(d);
    for (int i = 0; i < d; ++i) {
        lo[i] = dy_scaled(b.iv[i].lo, J);
        hi[i] = dy_scaled(b.iv[i].hi, J);
        if (lo[i] < 0) lo[i] = 0;
        if (hi[i] > (std::int64_t(1) << J)) hi[i] = std::int64_t(1) << J;
        if (lo[i] >= hi[i]) return {};
    }
    std::vector<DyadicCube> cells;
    std::vector<std::int64_t> c(lo);
    while (true) {
        Index idx(d);
        for (int i = 0; i < d; ++i) idx[i] = (std::uint32_t)c[i];
        cells.emplace_back(d, J, idx);
        int i = d - 1;
        while (i >= 0 && ++c[i] >= hi[i]) {
            c[i] = lo[i];
            --i;
        }
        if (i < 0) break;
    }
    return cells;
}

inline RingChainBound ring_chain_bound(const GridFunction& f, const DyadicCube& inner, const DyadicCube& outer,
                                       int k, NormExponent q, double p) {
    RingChainBound out;
    auto ring = DyadicSet::ring(outer, inner);
    out.lhs = best_approx(f, ring, k, q).error;
    VariationTable vt(f, k, p, q);
    out.rhs = vt.variation(ring);

    auto cc = cover_ring(inner, outer);
    for (auto& K : cc.cubes) {
        if (K.empty()) continue;
        auto cells = box_cells(K, f.dim, f.J);
        if (cells.empty()) continue;
        out.chain_sum += best_approx(f, DyadicSet::list_unchecked(std::move(cells)), k, q).error;
    }
    out.ratio = out.rhs > 0 ? out.lhs / out.rhs : 0.0;
    return out;
}

}  // namespace nterm
