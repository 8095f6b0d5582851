#pragma once

// Assembly of the N-term approximant: the covering Delta_N, the piecewise
// polynomial g_N as a raw term list (kept unsimplified so the telescoping
// identities stay testable), the S_B summands in both algebraic forms, and
// the conversion of the covering form into a disjoint d-ring partition.
//
// The term list realizes
//   g_N = m_{Q^d} + M_{Q^d}
//       + sum_B [ (m_{B^0}-m_{H_B}) 1_{H_B} + (m_{T_B}-m_{B^0}) 1_{T_B} + M_{T_B} ]
// with M_Q = sum_{Q' son} m_{Q'} 1_{Q'} - m_Q 1_Q. The root correction
// M_{Q^d} carries both the covering fix-up on the non-bad sons and the
// telescoping hand-off on the bad ones; without it the residual fails to
// localize on the rings B^+ \ B^-.

#include <map>

#include "tree.hpp"

namespace nterm {

struct NotACovering : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class CubeTag { Root, Head, Tail, SonOfTail, Fixup };

inline const char* tag_name(CubeTag t) {
    switch (t) {
        case CubeTag::Root: return "root";
        case CubeTag::Head: return "H_B";
        case CubeTag::Tail: return "T_B";
        case CubeTag::SonOfTail: return "son-of-T_B";
        default: return "fixup";
    }
}

struct Covering {
    int N = 1;
    std::vector<std::pair<DyadicCube, CubeTag>> entries;  // deduplicated, first tag wins
    std::size_t literal_count = 0;                        // members before the coverage fix-up

    bool contains(const DyadicCube& q) const {
        for (auto& [c, t] : entries)
            if (c == q) return true;
        return false;
    }
    std::vector<DyadicCube> cubes() const {
        std::vector<DyadicCube> out;
        out.reserve(entries.size());
        for (auto& [c, t] : entries) out.push_back(c);
        return out;
    }
};

// exhaustive coverage check at level J: every cell lies in some member
inline bool covers_unit_cube(const std::vector<DyadicCube>& cubes, int d, int J) {
    std::vector<std::uint8_t> hit(cells_total(d, J), 0);
    GridFunction dummy;
    dummy.dim = d;
    dummy.J = J;
    for (auto& q : cubes)
        for_each_cell(q, J, [&](const DyadicCube& c) { hit[dummy.cell_linear(c)] = 1; });
    for (auto v : hit)
        if (!v) return false;
    return true;
}

inline Covering build_covering(const BasicPathSet& bp, const BadSet& bs, int J) {
    const int d = bs.cubes.front().dim;
    Covering cov;
    cov.N = bp.N;
    std::unordered_set<DyadicCube, CubeHash> seen;
    auto push = [&](const DyadicCube& q, CubeTag t) {
        if (seen.insert(q).second) cov.entries.emplace_back(q, t);
    };
    push(DyadicCube::root(d), CubeTag::Root);
    for (auto& b : bp.paths) {
        push(b.tail(), CubeTag::Tail);
        push(b.head(), CubeTag::Head);
        for (auto& s : sons(b.tail())) push(s, CubeTag::SonOfTail);
    }
    cov.literal_count = cov.entries.size();

    // ensure_covering: when some son of Q^d is not bad, the literal set misses
    // its cells; adjoin D_1(Q^d) \ G_N
    for (auto& s : sons(DyadicCube::root(d)))
        if (!bs.contains(s)) push(s, CubeTag::Fixup);
    if (!covers_unit_cube(cov.cubes(), d, J)) throw NotACovering("covering fix-up failed");
    return cov;
}

// ---------------------------------------------------------------------------
// Piecewise polynomial term list
// ---------------------------------------------------------------------------
struct PPTerm {
    DyadicSet region;
    Polynomial poly;
    double coef = 1.0;
};

struct PiecewisePoly {
    int d = 1, J = 0, k = 1;
    NormExponent q;
    std::vector<PPTerm> terms;
    bool degenerate = false;  // tree short-circuited to g = m_{Q^d}

    std::vector<double> values() const {
        std::vector<double> out(cells_total(d, J), 0.0);
        GridFunction proto;
        proto.dim = d;
        proto.J = J;
        for (auto& t : terms) {
            auto add = [&](const DyadicCube& c) { out[proto.cell_linear(c)] += t.coef * t.poly.eval_cell(c); };
            switch (t.region.kind) {
                case DyadicSet::Kind::Cube: for_each_cell(t.region.outer, J, add); break;
                case DyadicSet::Kind::Ring:
                    for_each_cell(t.region.outer, J, [&](const DyadicCube& c) {
                        if (!t.region.inner->contains(c)) add(c);
                    });
                    break;
                case DyadicSet::Kind::CubeList:
                    for (auto& qc : t.region.cubes) for_each_cell(qc, J, add);
                    break;
            }
        }
        return out;
    }
};

// Memoizes best-approximation minimizers per cube/ring for one (f,k,q).
class FitCache {
public:
    FitCache(const GridFunction& f, int k, NormExponent q) : f_(&f), k_(k), q_(q) {}

    const Polynomial& cube(const DyadicCube& c) {
        auto it = cubes_.find(c);
        if (it != cubes_.end()) return it->second;
        auto r = best_approx(*f_, DyadicSet::cube(c), k_, q_);
        return cubes_.emplace(c, std::move(r.poly)).first->second;
    }
    const Polynomial& ring(const DyadicCube& outer, const DyadicCube& inner) {
        auto key = std::make_pair(cube_id(outer), cube_id(inner));
        auto it = rings_.find(key);
        if (it != rings_.end()) return it->second;
        auto r = best_approx(*f_, DyadicSet::ring(outer, inner), k_, q_);
        return rings_.emplace(std::move(key), std::move(r.poly)).first->second;
    }
    double cube_error(const DyadicCube& c) { return best_approx(*f_, DyadicSet::cube(c), k_, q_).error; }

    const GridFunction& f() const { return *f_; }
    int k() const { return k_; }
    NormExponent q() const { return q_; }

private:
    const GridFunction* f_;
    int k_;
    NormExponent q_;
    std::unordered_map<DyadicCube, Polynomial, CubeHash> cubes_;
    std::map<std::pair<std::string, std::string>, Polynomial> rings_;
};

namespace appdetail {

inline void add_M_terms(PiecewisePoly& g, FitCache& fits, const DyadicCube& q) {
    for (auto& s : sons(q)) g.terms.push_back({DyadicSet::cube(s), fits.cube(s), +1.0});
    g.terms.push_back({DyadicSet::cube(q), fits.cube(q), -1.0});
}

}  // namespace appdetail

inline PiecewisePoly build_piecewise(FitCache& fits, const BasicPathSet& bp) {
    const GridFunction& f = fits.f();
    PiecewisePoly g;
    g.d = f.dim;
    g.J = f.J;
    g.k = fits.k();
    g.q = fits.q();
    const DyadicCube root = DyadicCube::root(f.dim);
    g.terms.push_back({DyadicSet::cube(root), fits.cube(root), +1.0});
    appdetail::add_M_terms(g, fits, root);
    for (auto& b : bp.paths) {
        if (!b.singleton()) {
            const auto& mH = fits.cube(b.head());
            const auto& mT = fits.cube(b.tail());
            const auto& m0 = fits.ring(b.head(), b.tail());
            g.terms.push_back({DyadicSet::cube(b.head()), m0, +1.0});
            g.terms.push_back({DyadicSet::cube(b.head()), mH, -1.0});
            g.terms.push_back({DyadicSet::cube(b.tail()), mT, +1.0});
            g.terms.push_back({DyadicSet::cube(b.tail()), m0, -1.0});
        }
        appdetail::add_M_terms(g, fits, b.tail());
    }
    return g;
}

inline PiecewisePoly degenerate_piecewise(FitCache& fits) {
    const GridFunction& f = fits.f();
    PiecewisePoly g;
    g.d = f.dim;
    g.J = f.J;
    g.k = fits.k();
    g.q = fits.q();
    g.degenerate = true;
    const DyadicCube root = DyadicCube::root(f.dim);
    g.terms.push_back({DyadicSet::cube(root), fits.cube(root), +1.0});
    return g;
}

inline double approx_error(const GridFunction& f, const PiecewisePoly& g, NormExponent q) {
    auto vals = g.values();
    GridFunction diff = f;
    for (std::size_t i = 0; i < vals.size(); ++i) diff.values[i] -= vals[i];
    return lq_norm_full(diff, q);
}

// ---------------------------------------------------------------------------
// S_B summands, in the telescoped form and the double-sum form.
// f - g_N = sum_B S_B + sum_{Q in boundary} (f - m_Q) 1_Q, supp S_B = B^+\B^-.
// ---------------------------------------------------------------------------
inline PiecewisePoly s_b_from_M(FitCache& fits, const AscendingPath& b) {
    PiecewisePoly s;
    s.d = fits.f().dim;
    s.J = fits.f().J;
    s.k = fits.k();
    s.q = fits.q();
    if (b.singleton()) return s;
    for (std::size_t i = 1; i < b.cubes.size(); ++i) appdetail::add_M_terms(s, fits, b.cubes[i]);
    const auto& mH = fits.cube(b.head());
    const auto& mT = fits.cube(b.tail());
    const auto& m0 = fits.ring(b.head(), b.tail());
    s.terms.push_back({DyadicSet::cube(b.head()), m0, -1.0});
    s.terms.push_back({DyadicSet::cube(b.head()), mH, +1.0});
    s.terms.push_back({DyadicSet::cube(b.tail()), mT, -1.0});
    s.terms.push_back({DyadicSet::cube(b.tail()), m0, +1.0});
    return s;
}

inline PiecewisePoly s_b_double_sum(FitCache& fits, const AscendingPath& b) {
    PiecewisePoly s;
    s.d = fits.f().dim;
    s.J = fits.f().J;
    s.k = fits.k();
    s.q = fits.q();
    if (b.singleton()) return s;
    const auto& m0 = fits.ring(b.head(), b.tail());
    for (std::size_t i = 1; i < b.cubes.size(); ++i) {
        const DyadicCube& below = b.cubes[i - 1];
        for (auto& son : sons(b.cubes[i])) {
            if (son == below) continue;
            s.terms.push_back({DyadicSet::cube(son), fits.cube(son), +1.0});
            s.terms.push_back({DyadicSet::cube(son), m0, -1.0});
        }
    }
    return s;
}

// Full-level piecewise fits P_j of the telescoping expansion.
inline std::vector<double> level_fit_values(FitCache& fits, int level) {
    const GridFunction& f = fits.f();
    std::vector<double> out(f.values.size(), 0.0);
    std::function<void(const DyadicCube&)> rec = [&](const DyadicCube& q) {
        if (q.level == level) {
            const auto& m = fits.cube(q);
            for_each_cell(q, f.J, [&](const DyadicCube& c) { out[f.cell_linear(c)] = m.eval_cell(c); });
            return;
        }
        for (auto& s : sons(q)) rec(s);
    };
    rec(DyadicCube::root(f.dim));
    return out;
}

// ---------------------------------------------------------------------------
// Ring partition: collapse the term list to one polynomial sum per covering
// cube, then convert nested chains to disjoint d-rings.
// ---------------------------------------------------------------------------
struct RingRegion {
    DyadicCube outer;
    std::optional<DyadicCube> inner;
    PolySum poly;
};

struct RingPartition {
    int d = 1, J = 0;
    std::vector<RingRegion> regions;

    std::vector<double> values() const {
        std::vector<double> out(cells_total(d, J), 0.0);
        GridFunction proto;
        proto.dim = d;
        proto.J = J;
        for (auto& r : regions) {
            auto add = [&](const DyadicCube& c) { out[proto.cell_linear(c)] = r.poly.eval_cell(c); };
            if (r.inner) {
                for_each_cell(r.outer, J, [&](const DyadicCube& c) {
                    if (!r.inner->contains(c)) add(c);
                });
            } else {
                for_each_cell(r.outer, J, add);
            }
        }
        return out;
    }
};

inline RingPartition to_ring_partition(const Covering& cov, const PiecewisePoly& g) {
    const int d = g.d, J = g.J;
    if (!covers_unit_cube(cov.cubes(), d, J)) throw NotACovering("to_ring_partition: input is not a covering");

    // per-cube polynomial sums; ring regions split as +outer -inner
    std::vector<DyadicCube> cubes = cov.cubes();
    std::sort(cubes.begin(), cubes.end(), cube_less);
    std::unordered_map<DyadicCube, std::size_t, CubeHash> pos;
    for (std::size_t i = 0; i < cubes.size(); ++i) pos[cubes[i]] = i;
    std::vector<PolySum> P(cubes.size());
    for (auto& t : g.terms) {
        switch (t.region.kind) {
            case DyadicSet::Kind::Cube: {
                auto it = pos.find(t.region.outer);
                if (it == pos.end()) throw NotACovering("term region outside covering");
                P[it->second].add(t.coef, t.poly);
                break;
            }
            case DyadicSet::Kind::Ring: {
                auto ito = pos.find(t.region.outer), iti = pos.find(*t.region.inner);
                if (ito == pos.end() || iti == pos.end()) throw NotACovering("ring term outside covering");
                P[ito->second].add(t.coef, t.poly);
                P[iti->second].add(-t.coef, t.poly);
                break;
            }
            default: throw NotACovering("cube-list term unsupported in ring conversion");
        }
    }

    // Hasse structure: nearest proper covering ancestor
    std::vector<int> parent(cubes.size(), -1);
    std::vector<std::vector<std::size_t>> children(cubes.size());
    for (std::size_t i = 0; i < cubes.size(); ++i) {
        DyadicCube cur = cubes[i];
        while (cur.level > 0) {
            cur = cur.father();
            auto it = pos.find(cur);
            // the same geometric cube can only appear once after dedup
            if (it != pos.end()) {
                parent[i] = (int)it->second;
                children[it->second].push_back(i);
                break;
            }
        }
    }

    RingPartition out;
    out.d = d;
    out.J = J;
    for (std::size_t i = 0; i < cubes.size(); ++i) {
        // region = cube minus its maximal covering subcubes
        long double child_vol = 0;
        for (auto c : children[i]) child_vol += std::ldexp(1.0L, -d * (cubes[c].level - cubes[i].level));
        if (children[i].empty()) {
            RingRegion r;
            r.outer = cubes[i];
            for (int a = (int)i; a != -1; a = parent[a]) r.poly.add(P[a]);
            out.regions.push_back(std::move(r));
        } else if (child_vol >= 1.0L - 1e-18L) {
            continue;  // fully tiled by covering subcubes
        } else if (children[i].size() == 1) {
            RingRegion r;
            r.outer = cubes[i];
            r.inner = cubes[children[i][0]];
            for (int a = (int)i; a != -1; a = parent[a]) r.poly.add(P[a]);
            out.regions.push_back(std::move(r));
        } else {
            throw NotACovering("covering cube has several maximal subcubes but is not tiled");
        }
    }
    return out;
}

}  // namespace nterm
