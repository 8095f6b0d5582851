#pragma once

// Invariant suite over one pipeline run: the combinatorial facts the tree
// construction promises, the covering bounds, and the ring-form identity.
// Returns human-readable violations; empty means the run checks out.

#include "pipeline.hpp"

namespace nterm {

struct InvariantReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

inline InvariantReport verify_run(const GridFunction& f, const Weight& w, const RunResult& r) {
    InvariantReport rep;
    auto fail = [&](const std::string& s) { rep.violations.push_back(s); };
    const int d = f.dim, J = f.J, N = r.N;

    if (r.degenerate) {
        if (r.covering.entries.size() != 1) fail("degenerate run must cover with {Q^d}");
        return rep;
    }

    // basic paths partition G_N \ {Q^d}
    {
        std::unordered_map<DyadicCube, int, CubeHash> count;
        for (auto& b : r.paths.paths)
            for (auto& q : b.cubes) count[q]++;
        const DyadicCube root = DyadicCube::root(d);
        std::size_t expected = 0;
        for (auto& q : r.bad.cubes) {
            if (q == root) continue;
            ++expected;
            auto it = count.find(q);
            if (it == count.end())
                fail("cube " + cube_id(q) + " of G_N missing from the path partition");
            else if (it->second != 1)
                fail("cube " + cube_id(q) + " appears " + std::to_string(it->second) + " times in paths");
        }
        std::size_t total = 0;
        for (auto& [q, c] : count) total += (std::size_t)c;
        if (total != expected) fail("path partition has extra cubes");
        if (count.count(root)) fail("Q^d must not lie in any basic path");
    }

    // ring weights below the threshold, strictly
    for (auto& b : r.paths.paths) {
        const double wb = path_ring_weight(w, b);
        if (!(wb < 1.0 / (double)N))
            fail("basic path " + cube_id(b.tail()) + ".." + cube_id(b.head()) + " has W(H\\T) = " +
                 std::to_string(wb) + " >= 1/N");
    }

    if (r.paths.paths.size() > (std::size_t)(3 * N + 1))
        fail("card B_N = " + std::to_string(r.paths.paths.size()) + " exceeds 3N+1");
    if (r.bad.boundary.size() > (std::size_t)N << d)
        fail("card boundary = " + std::to_string(r.bad.boundary.size()) + " exceeds 2^d N");
    {
        const std::size_t bound = 1 + (2 + (std::size_t(1) << d)) * (std::size_t)(3 * N + 1);
        if (r.covering.literal_count > bound)
            fail("literal covering count " + std::to_string(r.covering.literal_count) + " exceeds " +
                 std::to_string(bound));
    }

    if (!covers_unit_cube(r.covering.cubes(), d, J)) fail("covering misses cells at level J");

    // G_N is a rooted subtree; boundary trees tile the complement
    for (auto& q : r.bad.cubes)
        if (q.level > 0 && !r.bad.contains(q.father())) fail("G_N not father-closed at " + cube_id(q));
    {
        std::unordered_set<DyadicCube, CubeHash> bnd(r.bad.boundary.begin(), r.bad.boundary.end());
        const int check_level = std::min(J, 4);
        std::function<void(const DyadicCube&, int)> walk = [&](const DyadicCube& q, int anc) {
            const int here = anc + (bnd.count(q) ? 1 : 0);
            if (r.bad.contains(q)) {
                if (here > 0) fail("bad cube below a boundary cube: " + cube_id(q));
            } else if (q.level == check_level && here != 1) {
                fail("cube " + cube_id(q) + " has " + std::to_string(here) + " boundary ancestors");
            }
            if (q.level < check_level)
                for (auto& s : sons(q)) walk(s, here);
        };
        walk(DyadicCube::root(d), 0);
    }

    // ring form agrees with the covering form per cell
    if (!r.rings.regions.empty()) {
        auto gv = r.g.values();
        auto rv = r.rings.values();
        double md = 0;
        for (std::size_t i = 0; i < gv.size(); ++i) md = std::max(md, std::fabs(gv[i] - rv[i]));
        if (md > 1e-10) fail("ring form deviates from covering form by " + std::to_string(md));
        // regions are pairwise disjoint and cover
        std::vector<int> hits(cells_total(d, J), 0);
        GridFunction proto;
        proto.dim = d;
        proto.J = J;
        for (auto& reg : r.rings.regions) {
            auto mark = [&](const DyadicCube& c) { hits[proto.cell_linear(c)]++; };
            if (reg.inner) {
                for_each_cell(reg.outer, J, [&](const DyadicCube& c) {
                    if (!reg.inner->contains(c)) mark(c);
                });
            } else {
                for_each_cell(reg.outer, J, mark);
            }
        }
        for (auto h : hits)
            if (h != 1) {
                fail("ring partition does not tile the unit cube exactly");
                break;
            }
    }
    return rep;
}

}  // namespace nterm
