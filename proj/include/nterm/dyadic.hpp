#pragma once

// Dyadic-cube arithmetic on [0,1)^d: cubes 2^{-j}(Q^d + alpha), the rooted
// father/son tree, ascending paths, and the finitely generated dyadic sets
// (cube, d-ring, disjoint cube list) the rest of the library evaluates
// weights and fits on. Everything here is exact integer arithmetic.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace nterm {

using Index = std::vector<std::uint32_t>;

struct DyadicCube {
    int dim = 1;
    int level = 0;       // sidelength 2^{-level}
    Index index;         // index[i] < 2^level

    DyadicCube() = default;
    DyadicCube(int d, int j, Index a) : dim(d), level(j), index(std::move(a)) {
        if ((int)index.size() != dim) throw std::invalid_argument("cube: index size != dim");
        for (auto v : index)
            if (level < 32 && v >= (1u << level)) throw std::invalid_argument("cube: index out of range");
    }

    static DyadicCube root(int d) { return DyadicCube(d, 0, Index(d, 0)); }

    bool operator==(const DyadicCube& o) const {
        return dim == o.dim && level == o.level && index == o.index;
    }
    bool operator!=(const DyadicCube& o) const { return !(*this == o); }

    double sidelength() const { return std::ldexp(1.0, -level); }
    double volume() const { return std::ldexp(1.0, -level * dim); }

    // lower corner coordinate i is index[i] * 2^{-level}
    double lo(int i) const { return std::ldexp((double)index[i], -level); }
    double hi(int i) const { return std::ldexp((double)index[i] + 1.0, -level); }
    double center(int i) const { return std::ldexp((double)index[i] + 0.5, -level); }

    DyadicCube father() const {
        if (level == 0) throw std::logic_error("root has no father");
        Index a(dim);
        for (int i = 0; i < dim; ++i) a[i] = index[i] >> 1;
        return DyadicCube(dim, level - 1, std::move(a));
    }

    // ancestor at level l <= level
    DyadicCube ancestor(int l) const {
        if (l > level || l < 0) throw std::logic_error("bad ancestor level");
        Index a(dim);
        for (int i = 0; i < dim; ++i) a[i] = index[i] >> (level - l);
        return DyadicCube(dim, l, std::move(a));
    }

    bool contains(const DyadicCube& q) const {
        if (q.dim != dim || q.level < level) return false;
        for (int i = 0; i < dim; ++i)
            if ((q.index[i] >> (q.level - level)) != index[i]) return false;
        return true;
    }
    bool disjoint(const DyadicCube& q) const { return !contains(q) && !q.contains(*this); }
};

// "j:a1,a2,...,ad" - the canonical text encoding used in all JSON output.
inline std::string cube_id(const DyadicCube& q) {
    std::string s = std::to_string(q.level) + ":";
    for (int i = 0; i < q.dim; ++i) {
        if (i) s += ',';
        s += std::to_string(q.index[i]);
    }
    return s;
}

inline DyadicCube parse_cube_id(const std::string& s) {
    auto colon = s.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("bad cube id: " + s);
    int level = std::stoi(s.substr(0, colon));
    Index idx;
    std::size_t pos = colon + 1;
    while (pos <= s.size()) {
        auto comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        idx.push_back((std::uint32_t)std::stoul(s.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    const int d = (int)idx.size();
    return DyadicCube(d, level, std::move(idx));
}

// D_1(Q): the 2^d sons, in lexicographic order of the offset tuple
// (first coordinate most significant).
inline std::vector<DyadicCube> sons(const DyadicCube& q) {
    const int d = q.dim;
    std::vector<DyadicCube> out;
    out.reserve(std::size_t(1) << d);
    for (std::uint32_t bits = 0; bits < (1u << d); ++bits) {
        Index a(d);
        for (int i = 0; i < d; ++i) {
            std::uint32_t b = (bits >> (d - 1 - i)) & 1u;
            a[i] = (q.index[i] << 1) | b;
        }
        out.emplace_back(d, q.level + 1, std::move(a));
    }
    return out;
}

// Strictly ascending father-chain; cubes[0] is the tail T_P, cubes.back()
// the head H_P.
struct AscendingPath {
    std::vector<DyadicCube> cubes;

    const DyadicCube& tail() const { return cubes.front(); }
    const DyadicCube& head() const { return cubes.back(); }
    bool singleton() const { return cubes.size() == 1; }
    std::size_t size() const { return cubes.size(); }
};

struct NotNested : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The unique path from q_small up to q_big (inclusive both ends).
inline AscendingPath path_between(const DyadicCube& q_small, const DyadicCube& q_big) {
    if (!q_big.contains(q_small)) throw NotNested("path_between: not nested");
    AscendingPath p;
    p.cubes.reserve(q_small.level - q_big.level + 1);
    DyadicCube cur = q_small;
    while (cur.level > q_big.level) {
        p.cubes.push_back(cur);
        cur = cur.father();
    }
    p.cubes.push_back(cur);
    return p;
}

// A finitely generated member of the dyadic sigma-algebra. Exactly the three
// shapes the algorithm needs.
struct DyadicSet {
    enum class Kind { Cube, Ring, CubeList };
    Kind kind = Kind::Cube;
    DyadicCube outer;                 // Cube and Ring
    std::optional<DyadicCube> inner;  // Ring only; inner strictly inside outer
    std::vector<DyadicCube> cubes;    // CubeList only; pairwise disjoint

    static DyadicSet cube(DyadicCube q) {
        DyadicSet s;
        s.kind = Kind::Cube;
        s.outer = std::move(q);
        return s;
    }
    static DyadicSet ring(DyadicCube out, DyadicCube in) {
        if (!(out.contains(in)) || out == in) throw NotNested("ring: inner not a proper subcube");
        DyadicSet s;
        s.kind = Kind::Ring;
        s.outer = std::move(out);
        s.inner = std::move(in);
        return s;
    }
    static DyadicSet list(std::vector<DyadicCube> qs) {
        for (std::size_t i = 0; i < qs.size(); ++i)
            for (std::size_t j = i + 1; j < qs.size(); ++j)
                if (!qs[i].disjoint(qs[j])) throw std::invalid_argument("cube list not disjoint");
        return list_unchecked(std::move(qs));
    }
    // caller guarantees pairwise disjointness (e.g. distinct grid cells)
    static DyadicSet list_unchecked(std::vector<DyadicCube> qs) {
        DyadicSet s;
        s.kind = Kind::CubeList;
        s.cubes = std::move(qs);
        return s;
    }

    int dim() const {
        if (kind == Kind::CubeList) return cubes.empty() ? 1 : cubes.front().dim;
        return outer.dim;
    }
    int max_level() const {
        switch (kind) {
            case Kind::Cube: return outer.level;
            case Kind::Ring: return inner->level;
            default: {
                int m = 0;
                for (auto& q : cubes) m = std::max(m, q.level);
                return m;
            }
        }
    }
    double measure() const {
        switch (kind) {
            case Kind::Cube: return outer.volume();
            case Kind::Ring: return outer.volume() - inner->volume();
            default: {
                double v = 0;
                for (auto& q : cubes) v += q.volume();
                return v;
            }
        }
    }
    bool contains_cell(const DyadicCube& cell) const {
        switch (kind) {
            case Kind::Cube: return outer.contains(cell);
            case Kind::Ring: return outer.contains(cell) && !inner->contains(cell) && !cell.contains(*inner);
            default:
                for (auto& q : cubes)
                    if (q.contains(cell)) return true;
                return false;
        }
    }
};

struct ResolutionTooCoarse : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Enumerate the level-J cells of a cube in lexicographic index order.
inline void for_each_cell(const DyadicCube& q, int J, const std::function<void(const DyadicCube&)>& fn) {
    if (J < q.level) throw ResolutionTooCoarse("cells_of: J above cube level");
    const int d = q.dim;
    const int r = J - q.level;
    const std::uint64_t per_axis = std::uint64_t(1) << r;
    Index a(d);
    DyadicCube cell(d, J, Index(d, 0));
    std::vector<std::uint64_t> ctr(d, 0);
    while (true) {
        for (int i = 0; i < d; ++i) cell.index[i] = (q.index[i] << r) | (std::uint32_t)ctr[i];
        fn(cell);
        int i = d - 1;
        while (i >= 0 && ++ctr[i] == per_axis) ctr[i--] = 0;
        if (i < 0) break;
    }
}

inline std::vector<DyadicCube> cells_of(const DyadicSet& s, int J) {
    if (J < s.max_level()) throw ResolutionTooCoarse("cells_of: set not resolvable at J");
    std::vector<DyadicCube> out;
    switch (s.kind) {
        case DyadicSet::Kind::Cube:
            for_each_cell(s.outer, J, [&](const DyadicCube& c) { out.push_back(c); });
            break;
        case DyadicSet::Kind::Ring:
            for_each_cell(s.outer, J, [&](const DyadicCube& c) {
                if (!s.inner->contains(c)) out.push_back(c);
            });
            break;
        case DyadicSet::Kind::CubeList:
            for (auto& q : s.cubes)
                for_each_cell(q, J, [&](const DyadicCube& c) { out.push_back(c); });
            break;
    }
    return out;
}

struct CubeHash {
    std::size_t operator()(const DyadicCube& q) const {
        std::size_t h = std::hash<int>()(q.level * 64 + q.dim);
        for (auto v : q.index) h = h * 1000003911u + v;
        return h;
    }
};

// Deterministic total order: level, then index tuple lexicographically.
inline bool cube_less(const DyadicCube& a, const DyadicCube& b) {
    if (a.level != b.level) return a.level < b.level;
    return a.index < b.index;
}

}  // namespace nterm
