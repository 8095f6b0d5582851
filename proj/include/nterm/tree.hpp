#pragma once

// The tree algorithm: from a normalized subadditive weight and N, the bad set
// G_N = {Q : W(Q) >= 1/N}, its minimal cubes and boundary, the refined path
// partition of G_N \ {Q^d}, and the greedy division into basic paths B with
// W(H_B \ T_B) < 1/N.
//
// Paths [T, H) are stored as the closed ascending cube list whose last element
// is the son-of-H on the path, so the weight of a basic path is always the
// ring between its stored endpoints.

#include <unordered_set>

#include "variation.hpp"

namespace nterm {

struct BadSet {
    int N = 1;
    std::vector<DyadicCube> cubes;     // G_N in deterministic order
    std::vector<DyadicCube> minimal;   // bad cubes with no bad son, (level desc, index lex)
    std::vector<DyadicCube> boundary;  // maximal non-bad cubes

    std::unordered_set<DyadicCube, CubeHash> members;
    bool contains(const DyadicCube& q) const { return members.count(q) > 0; }
};

inline BadSet build_bad_set(const Weight& w, int N) {
    if (N < 1) throw std::invalid_argument("build_bad_set: N >= 1");
    const int d = w.table().d, J = w.table().J;
    const double thresh = 1.0 / (double)N;
    BadSet bs;
    bs.N = N;

    // W is monotone under inclusion, so nothing below a non-bad cube is bad.
    std::function<void(const DyadicCube&)> dfs = [&](const DyadicCube& q) {
        bs.cubes.push_back(q);
        bs.members.insert(q);
        bool any_bad_son = false;
        if (q.level < J) {
            for (auto& s : sons(q)) {
                if (w.cube(s) >= thresh) {
                    any_bad_son = true;
                    dfs(s);
                } else {
                    bs.boundary.push_back(s);
                }
            }
        }
        if (!any_bad_son) bs.minimal.push_back(q);
    };
    dfs(DyadicCube::root(d));

    std::sort(bs.minimal.begin(), bs.minimal.end(), [](const DyadicCube& a, const DyadicCube& b) {
        if (a.level != b.level) return a.level > b.level;
        return a.index < b.index;
    });
    std::sort(bs.boundary.begin(), bs.boundary.end(), cube_less);
    return bs;
}

// Refined path partition P_N of G_N \ {Q^d} plus the contact cubes C_N.
struct PathPartition {
    std::vector<AscendingPath> paths;
    std::vector<DyadicCube> contact;  // {Q^d} and every merge point
};

inline PathPartition partition_paths(const BadSet& bs) {
    const int d = bs.cubes.front().dim;
    PathPartition out;
    std::unordered_set<DyadicCube, CubeHash> visited;
    std::unordered_set<DyadicCube, CubeHash> contact_set;
    const DyadicCube root = DyadicCube::root(d);
    visited.insert(root);
    contact_set.insert(root);
    out.contact.push_back(root);

    std::vector<AscendingPath> coarse;
    for (auto& qmin : bs.minimal) {
        AscendingPath p;
        DyadicCube cur = qmin;
        while (!visited.count(cur)) {
            p.cubes.push_back(cur);
            visited.insert(cur);
            cur = cur.father();
        }
        // cur is the contact cube Q_i^c where this branch merges
        if (!contact_set.count(cur)) {
            contact_set.insert(cur);
            out.contact.push_back(cur);
        }
        if (!p.cubes.empty()) coarse.push_back(std::move(p));
    }

    // refine at interior contact cubes: each contact starts a new subpath
    for (auto& p : coarse) {
        AscendingPath cur;
        for (auto& q : p.cubes) {
            if (!cur.cubes.empty() && contact_set.count(q)) {
                out.paths.push_back(std::move(cur));
                cur = AscendingPath{};
            }
            cur.cubes.push_back(q);
        }
        if (!cur.cubes.empty()) out.paths.push_back(std::move(cur));
    }
    std::sort(out.contact.begin(), out.contact.end(), cube_less);
    return out;
}

struct BasicPathSet {
    int N = 1;
    std::vector<AscendingPath> paths;  // the basic paths B, in deterministic order
    std::vector<DyadicCube> contact;
};

// weight of a path through its endpoint ring: W(H_B \ T_B), zero on singletons
inline double path_ring_weight(const Weight& w, const AscendingPath& b) {
    if (b.singleton()) return 0.0;
    return w.ring(b.head(), b.tail());
}

inline BasicPathSet basic_paths(const PathPartition& pn, const Weight& w, int N) {
    const double thresh = 1.0 / (double)N;
    BasicPathSet out;
    out.N = N;
    out.contact = pn.contact;
    for (auto& p : pn.paths) {
        std::size_t i = 0;
        const std::size_t L = p.cubes.size();
        while (i < L) {
            // first vertex strictly above whose closed segment ring reaches the threshold
            std::size_t t = i + 1;
            while (t < L && w.ring(p.cubes[t], p.cubes[i]) < thresh) ++t;
            AscendingPath b;
            if (t < L) {
                b.cubes.assign(p.cubes.begin() + (std::ptrdiff_t)i, p.cubes.begin() + (std::ptrdiff_t)t);
                i = t;
            } else {
                b.cubes.assign(p.cubes.begin() + (std::ptrdiff_t)i, p.cubes.end());
                i = L;
            }
            out.paths.push_back(std::move(b));
        }
    }
    return out;
}

inline BasicPathSet run_tree_algorithm(const Weight& w, int N, BadSet* bad_out = nullptr,
                                       PathPartition* part_out = nullptr) {
    BadSet bs = build_bad_set(w, N);
    PathPartition pn = partition_paths(bs);
    BasicPathSet bp = basic_paths(pn, w, N);
    if (bad_out) *bad_out = std::move(bs);
    if (part_out) *part_out = std::move(pn);
    return bp;
}

}  // namespace nterm
