#pragma once

// Discrete representation of f on [0,1)^d: cell averages on the uniform
// 2^{-J} grid, produced by midpoint sampling of builtin generators or read
// from CSV/PGM. Carries the L_q norms over dyadic sets and the reflecting
// mollifier.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>

#include "dyadic.hpp"

namespace nterm {

struct BadFormat : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ScaleTooFine : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// q in [1, inf]; infinity is the max-norm.
struct NormExponent {
    double q = 2.0;
    NormExponent() = default;
    explicit NormExponent(double v) : q(v) {
        if (!(v >= 1.0)) throw std::invalid_argument("norm exponent must be >= 1");
    }
    static NormExponent inf() { return NormExponent(std::numeric_limits<double>::infinity()); }
    bool is_inf() const { return std::isinf(q); }
};

inline std::uint64_t cells_total(int d, int J) { return std::uint64_t(1) << (std::uint64_t)(J * d); }

struct GridFunction {
    int dim = 1;
    int J = 0;
    std::vector<double> values;  // canonical order: index[0] most significant
    std::string source;

    std::uint64_t cell_linear(const DyadicCube& cell) const {
        std::uint64_t idx = 0;
        for (int i = 0; i < dim; ++i) idx = (idx << J) | cell.index[i];
        return idx;
    }
    double at(const DyadicCube& cell) const { return values[cell_linear(cell)]; }
    double& at(const DyadicCube& cell) { return values[cell_linear(cell)]; }
    double cell_volume() const { return std::ldexp(1.0, -J * dim); }
};

namespace detail {

// decode linear cell index -> per-axis indices
inline void cell_coords(std::uint64_t lin, int d, int J, std::uint32_t* out) {
    const std::uint64_t mask = (std::uint64_t(1) << J) - 1;
    for (int i = d - 1; i >= 0; --i) {
        out[i] = (std::uint32_t)(lin & mask);
        lin >>= J;
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Builtin generators. A source descriptor is one of
//   const:<c>
//   poly:<expr>              e.g. "1 + 2*x1 - 0.5*x1*x2^2"
//   radial:c1,...,cd;r       indicator of |x-c| <= r
//   sin:n1,...,nd            product of sin(2*pi*n_i*x_i)
//   cusp:c1,...,cd;beta      |x-c|^beta
//   step:n1,...,nd;t         indicator of n.x >= t
//   csv:<path> | pgm:<path>
// ---------------------------------------------------------------------------

// total-degree monomial term of a parsed polynomial expression
struct PolyTerm {
    double coef = 0;
    std::vector<int> expo;  // per-variable exponents
};

inline std::vector<PolyTerm> parse_poly_expr(const std::string& expr, int d) {
    std::vector<PolyTerm> terms;
    std::size_t i = 0;
    auto skip_ws = [&] { while (i < expr.size() && std::isspace((unsigned char)expr[i])) ++i; };
    skip_ws();
    while (i < expr.size()) {
        double sign = 1.0;
        skip_ws();
        if (expr[i] == '+' || expr[i] == '-') {
            if (expr[i] == '-') sign = -1.0;
            ++i;
            skip_ws();
        }
        PolyTerm t;
        t.coef = sign;
        t.expo.assign(d, 0);
        bool saw_factor = false, saw_coef = false;
        while (i < expr.size()) {
            skip_ws();
            if (i < expr.size() && (std::isdigit((unsigned char)expr[i]) || expr[i] == '.')) {
                std::size_t used = 0;
                double v = std::stod(expr.substr(i), &used);
                i += used;
                t.coef *= v;
                saw_coef = true;
            } else if (i < expr.size() && expr[i] == 'x') {
                ++i;
                if (i >= expr.size() || !std::isdigit((unsigned char)expr[i]))
                    throw BadFormat("poly: expected variable index after 'x'");
                std::size_t used = 0;
                int vi = std::stoi(expr.substr(i), &used);
                i += used;
                if (vi < 1 || vi > d) throw BadFormat("poly: variable x" + std::to_string(vi) + " out of range");
                int e = 1;
                skip_ws();
                if (i < expr.size() && expr[i] == '^') {
                    ++i;
                    skip_ws();
                    std::size_t u2 = 0;
                    e = std::stoi(expr.substr(i), &u2);
                    i += u2;
                }
                t.expo[vi - 1] += e;
            } else {
                break;
            }
            saw_factor = true;
            skip_ws();
            if (i < expr.size() && expr[i] == '*') {
                ++i;
                continue;
            }
            if (i < expr.size() && (std::isdigit((unsigned char)expr[i]) || expr[i] == 'x' || expr[i] == '.'))
                continue;  // implicit product, e.g. "2 x1"
            break;
        }
        if (!saw_factor && !saw_coef) throw BadFormat("poly: empty term in '" + expr + "'");
        terms.push_back(std::move(t));
        skip_ws();
    }
    if (terms.empty()) throw BadFormat("poly: no terms");
    return terms;
}

namespace detail {

inline std::vector<double> parse_number_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

inline GridFunction read_csv_grid(const std::string& path);
inline GridFunction read_pgm(const std::string& path, int d, int J);

}  // namespace detail

inline GridFunction make_function(const std::string& spec, int d, int J) {
    if (d < 1 || J < 0 || J * d > 40) throw std::invalid_argument("make_function: bad d/J");
    auto colon = spec.find(':');
    if (colon == std::string::npos) throw BadFormat("source descriptor needs 'kind:...': " + spec);
    std::string kind = spec.substr(0, colon), body = spec.substr(colon + 1);

    GridFunction f;
    f.dim = d;
    f.J = J;
    f.source = spec;
    if (kind == "csv") {
        GridFunction g = detail::read_csv_grid(body);
        g.source = spec;
        if (g.dim != d || g.J != J) throw DimensionMismatch("csv grid is d=" + std::to_string(g.dim) +
                                                            ",J=" + std::to_string(g.J));
        return g;
    }
    if (kind == "pgm") {
        GridFunction g = detail::read_pgm(body, d, J);
        g.source = spec;
        return g;
    }

    std::function<double(const double*)> eval;
    if (kind == "const") {
        double c = std::stod(body);
        eval = [c](const double*) { return c; };
    } else if (kind == "poly") {
        auto terms = parse_poly_expr(body, d);
        eval = [terms, d](const double* x) {
            double v = 0;
            for (auto& t : terms) {
                double m = t.coef;
                for (int i = 0; i < d; ++i)
                    for (int e = 0; e < t.expo[i]; ++e) m *= x[i];
                v += m;
            }
            return v;
        };
    } else if (kind == "radial" || kind == "cusp") {
        auto semi = body.find(';');
        if (semi == std::string::npos) throw BadFormat(kind + ": expected 'c1,..,cd;param'");
        auto c = detail::parse_number_list(body.substr(0, semi));
        double par = std::stod(body.substr(semi + 1));
        if ((int)c.size() != d) throw DimensionMismatch(kind + ": center size != d");
        bool radial = (kind == "radial");
        eval = [c, par, d, radial](const double* x) {
            double r2 = 0;
            for (int i = 0; i < d; ++i) r2 += (x[i] - c[i]) * (x[i] - c[i]);
            if (radial) return r2 <= par * par ? 1.0 : 0.0;
            return std::pow(std::sqrt(r2), par);
        };
    } else if (kind == "sin") {
        auto n = detail::parse_number_list(body);
        if ((int)n.size() != d) throw DimensionMismatch("sin: frequency size != d");
        eval = [n, d](const double* x) {
            double v = 1;
            for (int i = 0; i < d; ++i) v *= std::sin(2.0 * M_PI * n[i] * x[i]);
            return v;
        };
    } else if (kind == "step") {
        auto semi = body.find(';');
        if (semi == std::string::npos) throw BadFormat("step: expected 'n1,..,nd;t'");
        auto n = detail::parse_number_list(body.substr(0, semi));
        double t = std::stod(body.substr(semi + 1));
        if ((int)n.size() != d) throw DimensionMismatch("step: normal size != d");
        eval = [n, t, d](const double* x) {
            double s = 0;
            for (int i = 0; i < d; ++i) s += n[i] * x[i];
            return s >= t ? 1.0 : 0.0;
        };
    } else {
        throw BadFormat("unknown source kind: " + kind);
    }

    const std::uint64_t total = cells_total(d, J);
    f.values.resize(total);
    std::vector<std::uint32_t> idx(d);
    std::vector<double> x(d);
    for (std::uint64_t lin = 0; lin < total; ++lin) {
        detail::cell_coords(lin, d, J, idx.data());
        for (int i = 0; i < d; ++i) x[i] = std::ldexp(idx[i] + 0.5, -J);
        f.values[lin] = eval(x.data());
    }
    return f;
}

// ---------------------------------------------------------------------------
// L_q norm of f over a dyadic set, with the discrete measure 2^{-Jd} per cell.
// ---------------------------------------------------------------------------
inline double lq_norm(const GridFunction& f, const DyadicSet& s, NormExponent q) {
    const double vol = f.cell_volume();
    if (q.is_inf()) {
        double m = 0;
        switch (s.kind) {
            case DyadicSet::Kind::Cube:
                for_each_cell(s.outer, f.J, [&](const DyadicCube& c) { m = std::max(m, std::fabs(f.at(c))); });
                break;
            case DyadicSet::Kind::Ring:
                for_each_cell(s.outer, f.J, [&](const DyadicCube& c) {
                    if (!s.inner->contains(c)) m = std::max(m, std::fabs(f.at(c)));
                });
                break;
            case DyadicSet::Kind::CubeList:
                for (auto& qc : s.cubes)
                    for_each_cell(qc, f.J, [&](const DyadicCube& c) { m = std::max(m, std::fabs(f.at(c))); });
                break;
        }
        return m;
    }
    double acc = 0;
    auto add = [&](const DyadicCube& c) { acc += std::pow(std::fabs(f.at(c)), q.q); };
    switch (s.kind) {
        case DyadicSet::Kind::Cube: for_each_cell(s.outer, f.J, add); break;
        case DyadicSet::Kind::Ring:
            for_each_cell(s.outer, f.J, [&](const DyadicCube& c) {
                if (!s.inner->contains(c)) add(c);
            });
            break;
        case DyadicSet::Kind::CubeList:
            for (auto& qc : s.cubes) for_each_cell(qc, f.J, add);
            break;
    }
    return std::pow(acc * vol, 1.0 / q.q);
}

inline double lq_norm_full(const GridFunction& f, NormExponent q) {
    return lq_norm(f, DyadicSet::cube(DyadicCube::root(f.dim)), q);
}

// ---------------------------------------------------------------------------
// Mollification: discrete convolution with the tensor bump prod(1-|y_i|),
// sampled at kernel scale eps = m*2^{-J}, weights renormalized to unit mass.
// f is extended outside [0,1)^d by reflection across faces.
// ---------------------------------------------------------------------------
inline GridFunction mollify(const GridFunction& f, double eps) {
    const int d = f.dim, J = f.J;
    const double cell = std::ldexp(1.0, -J);
    const double m_real = eps / cell;
    const long m = std::lround(m_real);
    if (m < 1 || std::fabs(m_real - m) > 1e-9) throw ScaleTooFine("mollify: eps must be a multiple of 2^-J, >= 2^-J");

    // 1-d kernel weights at offsets -m..m; endpoints vanish
    std::vector<double> w1(2 * m + 1);
    double s1 = 0;
    for (long o = -m; o <= m; ++o) {
        w1[o + m] = 1.0 - std::fabs((double)o) / (double)m;
        s1 += w1[o + m];
    }
    for (auto& w : w1) w /= s1;

    const long n = 1l << J;
    auto reflect = [&](long t) {
        // mirror across faces, period 2n
        long p = t % (2 * n);
        if (p < 0) p += 2 * n;
        return p < n ? p : 2 * n - 1 - p;
    };

    // separable: convolve one axis at a time
    GridFunction out = f;
    std::vector<double> tmp(out.values.size());
    const std::uint64_t total = out.values.size();
    std::vector<std::uint32_t> idx(d);
    for (int axis = 0; axis < d; ++axis) {
        const int shift_amt = (d - 1 - axis) * J;
        for (std::uint64_t lin = 0; lin < total; ++lin) {
            detail::cell_coords(lin, d, J, idx.data());
            double acc = 0;
            const std::uint64_t base = lin - ((std::uint64_t)idx[axis] << shift_amt);
            for (long o = -m; o <= m; ++o) {
                long t = reflect((long)idx[axis] - o);
                acc += w1[o + m] * out.values[base + ((std::uint64_t)t << shift_amt)];
            }
            tmp[lin] = acc;
        }
        out.values.swap(tmp);
    }
    out.source = f.source + "|mollified";
    return out;
}

// ---------------------------------------------------------------------------
// CSV / PGM input and CSV output
// ---------------------------------------------------------------------------
namespace detail {

inline GridFunction read_csv_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw BadFormat("cannot open csv: " + path);
    std::string header;
    if (!std::getline(in, header) || header.substr(0, 3) != "d,J") throw BadFormat("csv: missing 'd,J' header");
    std::string dims;
    if (!std::getline(in, dims)) throw BadFormat("csv: missing dimension line");
    auto comma = dims.find(',');
    if (comma == std::string::npos) throw BadFormat("csv: bad dimension line");
    GridFunction f;
    f.dim = std::stoi(dims.substr(0, comma));
    f.J = std::stoi(dims.substr(comma + 1));
    if (f.dim < 1 || f.J < 0 || f.dim * f.J > 40) throw BadFormat("csv: implausible d,J");
    const std::uint64_t total = cells_total(f.dim, f.J);
    f.values.reserve(total);
    std::string tok;
    while (in >> tok) {
        while (!tok.empty() && tok.back() == ',') tok.pop_back();
        std::size_t pos = 0;
        while (pos < tok.size()) {
            auto c2 = tok.find(',', pos);
            if (c2 == std::string::npos) c2 = tok.size();
            f.values.push_back(std::stod(tok.substr(pos, c2 - pos)));
            pos = c2 + 1;
        }
    }
    if (f.values.size() != total)
        throw BadFormat("csv: expected " + std::to_string(total) + " values, got " + std::to_string(f.values.size()));
    for (double v : f.values)
        if (!std::isfinite(v)) throw BadFormat("csv: non-finite value");
    f.source = "csv:" + path;
    return f;
}

inline GridFunction read_pgm(const std::string& path, int d, int J) {
    if (d != 2) throw DimensionMismatch("pgm input requires d=2");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw BadFormat("cannot open pgm: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P2" && magic != "P5") throw BadFormat("pgm: magic must be P2 or P5");
    auto next_int = [&]() {
        // skip whitespace and '#' comments
        while (true) {
            int c = in.peek();
            if (c == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(c)) {
                in.get();
            } else {
                break;
            }
        }
        long v;
        if (!(in >> v)) throw BadFormat("pgm: truncated header");
        return v;
    };
    long w = next_int(), h = next_int(), maxval = next_int();
    if (w != h) throw DimensionMismatch("pgm: image must be square");
    if (w != (1l << J)) throw DimensionMismatch("pgm: side must be 2^J = " + std::to_string(1l << J));
    if (maxval <= 0 || maxval > 65535) throw BadFormat("pgm: bad maxval");

    GridFunction f;
    f.dim = 2;
    f.J = J;
    f.values.resize((std::size_t)w * h);
    if (magic == "P2") {
        for (long r = 0; r < h; ++r)
            for (long c = 0; c < w; ++c) {
                long v;
                if (!(in >> v)) throw BadFormat("pgm: truncated data");
                f.values[(std::size_t)r * w + c] = (double)v / (double)maxval;
            }
    } else {
        in.get();  // single whitespace after maxval
        const int bytes = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> buf((std::size_t)w * h * bytes);
        in.read((char*)buf.data(), (std::streamsize)buf.size());
        if (in.gcount() != (std::streamsize)buf.size()) throw BadFormat("pgm: truncated data");
        for (std::size_t i = 0; i < (std::size_t)w * h; ++i) {
            long v = bytes == 1 ? buf[i] : (buf[2 * i] << 8) | buf[2 * i + 1];
            f.values[i] = (double)v / (double)maxval;
        }
    }
    // pixel (row r, col c) -> cell index (r, c)
    f.source = "pgm:" + path;
    return f;
}

}  // namespace detail

inline void write_csv_grid(const GridFunction& f, std::ostream& out) {
    out << "d,J\n" << f.dim << "," << f.J << "\n";
    const std::uint64_t total = f.values.size();
    const std::uint64_t per_line = f.dim >= 2 ? (std::uint64_t(1) << f.J) : std::min<std::uint64_t>(total, 16);
    char buf[40];
    for (std::uint64_t i = 0; i < total; ++i) {
        std::snprintf(buf, sizeof buf, "%.12g", f.values[i]);
        out << buf;
        out << (((i + 1) % per_line == 0 || i + 1 == total) ? '\n' : ',');
    }
}

inline void write_csv_grid(const GridFunction& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw BadFormat("cannot write " + path);
    write_csv_grid(f, out);
}

}  // namespace nterm
