#pragma once

// JSON encodings (stable field order) and the deterministic SVG renderer.

#include <json.hpp>

#include "approximant.hpp"
#include "ring_cover.hpp"

namespace nterm {

using ojson = nlohmann::ordered_json;

inline ojson poly_json(const Polynomial& p) {
    ojson j;
    j["d"] = p.dim;
    j["k"] = p.k;
    j["center"] = p.center;
    j["scale"] = p.scale;
    j["coeffs"] = p.coeffs;
    return j;
}

inline ojson region_json(const DyadicSet& s) {
    ojson j;
    switch (s.kind) {
        case DyadicSet::Kind::Cube:
            j["kind"] = "cube";
            j["outer"] = cube_id(s.outer);
            break;
        case DyadicSet::Kind::Ring:
            j["kind"] = "ring";
            j["outer"] = cube_id(s.outer);
            j["inner"] = cube_id(*s.inner);
            break;
        case DyadicSet::Kind::CubeList: {
            j["kind"] = "list";
            std::vector<std::string> ids;
            for (auto& c : s.cubes) ids.push_back(cube_id(c));
            j["cubes"] = ids;
            break;
        }
    }
    return j;
}

inline ojson covering_json(const Covering& cov) {
    ojson arr = ojson::array();
    for (auto& [c, t] : cov.entries) {
        ojson e;
        e["cube"] = cube_id(c);
        e["tag"] = tag_name(t);
        arr.push_back(e);
    }
    return arr;
}

inline ojson rings_json(const RingPartition& rp) {
    ojson arr = ojson::array();
    for (auto& r : rp.regions) {
        ojson e;
        e["outer"] = cube_id(r.outer);
        e["inner"] = r.inner ? ojson(cube_id(*r.inner)) : ojson(nullptr);
        ojson terms = ojson::array();
        for (auto& [c, p] : r.poly.terms) {
            ojson t;
            t["coef"] = c;
            t["polynomial"] = poly_json(p);
            terms.push_back(t);
        }
        e["polynomial_sum"] = terms;
        arr.push_back(e);
    }
    return arr;
}

inline ojson approximant_json(const Covering& cov, const PiecewisePoly& g, const RingPartition* rp) {
    ojson j;
    j["covering"] = covering_json(cov);
    ojson terms = ojson::array();
    for (auto& t : g.terms) {
        ojson e;
        e["region"] = region_json(t.region);
        e["coef"] = t.coef;
        e["polynomial"] = poly_json(t.poly);
        terms.push_back(e);
    }
    j["terms"] = terms;
    j["rings"] = rp ? rings_json(*rp) : ojson::array();
    return j;
}

inline ojson tree_json(const BadSet& bs, const BasicPathSet& bp) {
    ojson j;
    std::vector<std::string> g;
    for (auto& c : bs.cubes) g.push_back(cube_id(c));
    std::sort(g.begin(), g.end());
    j["G_N"] = g;
    std::vector<std::string> minimal, boundary, contact;
    for (auto& c : bs.minimal) minimal.push_back(cube_id(c));
    for (auto& c : bs.boundary) boundary.push_back(cube_id(c));
    for (auto& c : bp.contact) contact.push_back(cube_id(c));
    j["minimal"] = minimal;
    j["boundary"] = boundary;
    j["contact"] = contact;
    ojson paths = ojson::array();
    for (auto& b : bp.paths) {
        std::vector<std::string> ids;
        for (auto& c : b.cubes) ids.push_back(cube_id(c));
        paths.push_back(ids);
    }
    j["basic_paths"] = paths;
    return j;
}

inline ojson cycle_cover_json(const CycleCover& cc) {
    ojson j;
    j["d"] = cc.d;
    j["interior"] = cc.interior;
    j["count"] = cc.cubes.size();
    ojson cubes = ojson::array();
    for (std::size_t i = 0; i < cc.cubes.size(); ++i) {
        ojson e;
        std::vector<std::string> lo, hi;
        for (auto& iv : cc.cubes[i].iv) {
            lo.push_back(dy_str(iv.lo));
            hi.push_back(dy_str(iv.hi));
        }
        e["lo"] = lo;
        e["hi"] = hi;
        e["bridge"] = (bool)cc.is_bridge[i];
        cubes.push_back(e);
    }
    j["cubes"] = cubes;
    ojson pairs = ojson::array();
    for (auto& [u, v] : cc.designed_pairs) pairs.push_back(ojson::array({u, v}));
    j["designed_pairs"] = pairs;
    return j;
}

// ---------------------------------------------------------------------------
// SVG (d = 2 only). One rect per cube/region; byte-stable output.
// ---------------------------------------------------------------------------
struct UnsupportedDimension : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace svgdetail {

inline const char* tag_color(CubeTag t) {
    switch (t) {
        case CubeTag::Root: return "#000000";
        case CubeTag::Head: return "#d62728";
        case CubeTag::Tail: return "#1f77b4";
        case CubeTag::SonOfTail: return "#2ca02c";
        default: return "#9467bd";
    }
}

inline void svg_open(std::ostream& os) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1024 1024\" "
          "width=\"1024\" height=\"1024\">\n";
}

inline void svg_rect(std::ostream& os, double x, double y, double w, double h, const char* stroke,
                     const char* fill, double stroke_width) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.4f\" y=\"%.4f\" width=\"%.4f\" height=\"%.4f\" stroke=\"%s\" "
                  "fill=\"%s\" stroke-width=\"%.2f\"/>\n",
                  x, y, w, h, stroke, fill, stroke_width);
    os << buf;
}

// cube -> pixel rect; axis 0 runs down, axis 1 runs right
inline void cube_rect(std::ostream& os, const DyadicCube& q, const char* stroke, const char* fill,
                      double sw) {
    const double s = 1024.0 * q.sidelength();
    svg_rect(os, 1024.0 * q.lo(1), 1024.0 * q.lo(0), s, s, stroke, fill, sw);
}

}  // namespace svgdetail

inline void render_covering_svg(const Covering& cov, int d, std::ostream& os) {
    if (d != 2) throw UnsupportedDimension("render: d=2 only");
    svgdetail::svg_open(os);
    for (auto& [c, t] : cov.entries)
        svgdetail::cube_rect(os, c, svgdetail::tag_color(t), "none", 3.0);
    os << "</svg>\n";
}

inline void render_rings_svg(const RingPartition& rp, std::ostream& os) {
    if (rp.d != 2) throw UnsupportedDimension("render: d=2 only");
    svgdetail::svg_open(os);
    for (auto& r : rp.regions) {
        svgdetail::cube_rect(os, r.outer, "#1f77b4", "none", 3.0);
        if (r.inner) svgdetail::cube_rect(os, *r.inner, "#d62728", "none", 2.0);
    }
    os << "</svg>\n";
}

inline void render_cycle_cover_svg(const CycleCover& cc, std::ostream& os) {
    if (cc.d != 2) throw UnsupportedDimension("render: d=2 only");
    svgdetail::svg_open(os);
    for (std::size_t i = 0; i < cc.cubes.size(); ++i) {
        const auto& b = cc.cubes[i];
        if (b.empty()) continue;
        const double x = 1024.0 * b.iv[1].lo.value(), y = 1024.0 * b.iv[0].lo.value();
        const double w = 1024.0 * b.iv[1].length().value(), h = 1024.0 * b.iv[0].length().value();
        svgdetail::svg_rect(os, x, y, w, h, cc.is_bridge[i] ? "#ff7f0e" : "#1f77b4", "none",
                            cc.is_bridge[i] ? 1.5 : 3.0);
    }
    os << "</svg>\n";
}

inline void render_function_svg(const GridFunction& f, std::ostream& os) {
    if (f.dim != 2) throw UnsupportedDimension("render: d=2 only");
    svgdetail::svg_open(os);
    double lo = f.values[0], hi = f.values[0];
    for (double v : f.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    const std::uint64_t n = std::uint64_t(1) << f.J;
    const double s = 1024.0 / (double)n;
    for (std::uint64_t r = 0; r < n; ++r)
        for (std::uint64_t c = 0; c < n; ++c) {
            const int g = (int)std::lround(255.0 * (f.values[r * n + c] - lo) / span);
            char color[10];
            std::snprintf(color, sizeof color, "#%02x%02x%02x", g, g, g);
            svgdetail::svg_rect(os, (double)c * s, (double)r * s, s, s, "none", color, 0.0);
        }
    os << "</svg>\n";
}

}  // namespace nterm
