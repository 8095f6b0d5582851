#pragma once

// Local best polynomial approximation E_k(f;S;L_q) and its minimizer m_S.
// Polynomials are total-degree <= k-1 over a monomial basis centered at the
// centroid of S and scaled by the sidelength of its outer cube; unscaled
// monomials go numerically singular at deep levels.
//
// q = 2 solves the normal equations through a rank-revealing factorization,
// other finite q run damped IRLS on the same machinery, q = infinity runs
// Lawson's weight iteration toward the discrete Chebyshev fit.

#include <Eigen/Dense>

#include "grid.hpp"

namespace nterm {

// Exponent tuples of total degree <= k-1 in graded-lex order.
inline std::vector<std::vector<int>> poly_basis_exponents(int d, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(d, 0);
    std::function<void(int, int)> rec = [&](int pos, int rem) {
        if (pos == d - 1) {
            cur[pos] = rem;
            out.push_back(cur);
            return;
        }
        for (int e = rem; e >= 0; --e) {
            cur[pos] = e;
            rec(pos + 1, rem - e);
        }
    };
    for (int deg = 0; deg < k; ++deg) rec(0, deg);
    return out;
}

inline std::size_t poly_basis_size(int d, int k) {
    // C(k-1+d, d)
    std::size_t n = 1;
    for (int i = 1; i <= d; ++i) n = n * (k - 1 + i) / i;
    return n;
}

struct Polynomial {
    int dim = 1;
    int k = 1;                    // approximant degree <= k-1
    std::vector<double> center;   // basis center
    double scale = 1.0;           // basis scale
    std::vector<double> coeffs;   // graded-lex order, size C(k-1+d,d)

    static Polynomial zero(int d, int k) {
        Polynomial p;
        p.dim = d;
        p.k = k;
        p.center.assign(d, 0.0);
        p.scale = 1.0;
        p.coeffs.assign(poly_basis_size(d, k), 0.0);
        return p;
    }
    static Polynomial constant(int d, double c) {
        Polynomial p = zero(d, 1);
        p.coeffs[0] = c;
        return p;
    }

    double eval(const double* x) const {
        const auto expos = poly_basis_exponents(dim, k);
        double v = 0;
        for (std::size_t j = 0; j < expos.size(); ++j) {
            double m = coeffs[j];
            for (int i = 0; i < dim; ++i) {
                const double u = (x[i] - center[i]) / scale;
                for (int e = 0; e < expos[j][i]; ++e) m *= u;
            }
            v += m;
        }
        return v;
    }
    double eval_cell(const DyadicCube& cell) const {
        double x[8];
        for (int i = 0; i < dim; ++i) x[i] = cell.center(i);
        return eval(x);
    }
};

// A formal sum of scaled polynomials. Keeping the summands unexpanded
// preserves the identity tests' precision across deep levels.
struct PolySum {
    std::vector<std::pair<double, Polynomial>> terms;

    void add(double c, const Polynomial& p) {
        if (c != 0.0) terms.emplace_back(c, p);
    }
    void add(const PolySum& o, double c = 1.0) {
        for (auto& [w, p] : o.terms) add(c * w, p);
    }
    double eval(const double* x) const {
        double v = 0;
        for (auto& [w, p] : terms) v += w * p.eval(x);
        return v;
    }
    double eval_cell(const DyadicCube& cell) const {
        double x[8];
        for (int i = 0; i < (cell.dim); ++i) x[i] = cell.center(i);
        return eval(x);
    }
};

struct FitResult {
    Polynomial poly;
    double error = 0.0;         // E_k(f;S;L_q) at the returned minimizer
    int iterations = 0;
    bool converged = true;
    bool underdetermined = false;  // fewer cells than basis functions
};

inline std::vector<double> eval_poly(const Polynomial& m, const std::vector<DyadicCube>& cells) {
    std::vector<double> out;
    out.reserve(cells.size());
    for (auto& c : cells) out.push_back(m.eval_cell(c));
    return out;
}

namespace fitdetail {

struct CellProblem {
    int d;
    int k;
    std::vector<DyadicCube> cells;
    Eigen::MatrixXd A;  // ncells x nb
    Eigen::VectorXd b;
    std::vector<double> center;
    double scale = 1.0;
};

inline CellProblem assemble(const GridFunction& f, const DyadicSet& s, int k) {
    CellProblem p;
    p.d = f.dim;
    p.k = k;
    p.cells = cells_of(s, f.J);
    if (p.cells.empty()) throw std::invalid_argument("best_approx: empty set");

    p.center.assign(p.d, 0.0);
    for (auto& c : p.cells)
        for (int i = 0; i < p.d; ++i) p.center[i] += c.center(i);
    for (auto& v : p.center) v /= (double)p.cells.size();
    if (s.kind == DyadicSet::Kind::CubeList) {
        double ext = 0;
        for (int i = 0; i < p.d; ++i) {
            double lo = 1, hi = 0;
            for (auto& c : s.cubes) {
                lo = std::min(lo, c.lo(i));
                hi = std::max(hi, c.hi(i));
            }
            ext = std::max(ext, hi - lo);
        }
        p.scale = ext > 0 ? ext : 1.0;
    } else {
        p.scale = s.outer.sidelength();
    }

    const auto expos = poly_basis_exponents(p.d, k);
    p.A.resize((Eigen::Index)p.cells.size(), (Eigen::Index)expos.size());
    p.b.resize((Eigen::Index)p.cells.size());
    for (std::size_t r = 0; r < p.cells.size(); ++r) {
        p.b[(Eigen::Index)r] = f.at(p.cells[r]);
        for (std::size_t j = 0; j < expos.size(); ++j) {
            double m = 1;
            for (int i = 0; i < p.d; ++i) {
                const double u = (p.cells[r].center(i) - p.center[i]) / p.scale;
                for (int e = 0; e < expos[j][i]; ++e) m *= u;
            }
            p.A((Eigen::Index)r, (Eigen::Index)j) = m;
        }
    }
    return p;
}

inline Polynomial to_poly(const CellProblem& p, const Eigen::VectorXd& c) {
    Polynomial m;
    m.dim = p.d;
    m.k = p.k;
    m.center = p.center;
    m.scale = p.scale;
    m.coeffs.assign(c.data(), c.data() + c.size());
    return m;
}

inline double residual_norm(const Eigen::VectorXd& r, NormExponent q, double cell_vol) {
    if (q.is_inf()) return r.cwiseAbs().maxCoeff();
    double acc = 0;
    for (Eigen::Index i = 0; i < r.size(); ++i) acc += std::pow(std::fabs(r[i]), q.q);
    return std::pow(acc * cell_vol, 1.0 / q.q);
}

inline Eigen::VectorXd solve_weighted(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                      const Eigen::VectorXd& w) {
    Eigen::MatrixXd Aw = w.cwiseSqrt().asDiagonal() * A;
    Eigen::VectorXd bw = w.cwiseSqrt().asDiagonal() * b;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Aw);
    return cod.solve(bw);
}

}  // namespace fitdetail

// IRLS controls, per the damping scheme that keeps q near 1 from oscillating.
inline constexpr double kIrlsResidualFloor = 1e-12;
inline constexpr int kIrlsMaxIters = 200;
inline constexpr double kIrlsRelStop = 1e-10;
inline constexpr int kLawsonMaxIters = 500;

inline FitResult best_approx(const GridFunction& f, const DyadicSet& s, int k, NormExponent q) {
    if (k < 1) throw std::invalid_argument("best_approx: k >= 1 required");
    auto p = fitdetail::assemble(f, s, k);
    const double cell_vol = f.cell_volume();
    const auto nb = (std::size_t)p.A.cols();

    FitResult res;
    res.underdetermined = p.cells.size() < nb;

    if (!q.is_inf() && q.q == 2.0) {
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(p.A);
        Eigen::VectorXd c = cod.solve(p.b);
        res.poly = fitdetail::to_poly(p, c);
        res.error = fitdetail::residual_norm(p.b - p.A * c, q, cell_vol);
        res.iterations = 1;
        return res;
    }

    if (q.is_inf()) {
        // Lawson: weighted L2 with weights renormalized by |residual|
        const Eigen::Index n = p.b.size();
        Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / (double)n);
        Eigen::VectorXd best_c;
        double best_err = std::numeric_limits<double>::infinity();
        double prev = best_err;
        int it = 0;
        for (; it < kLawsonMaxIters; ++it) {
            Eigen::VectorXd c = fitdetail::solve_weighted(p.A, p.b, w);
            Eigen::VectorXd r = p.b - p.A * c;
            double err = r.cwiseAbs().maxCoeff();
            if (err < best_err) {
                best_err = err;
                best_c = c;
            }
            if (it > 0 && std::fabs(prev - err) <= 1e-13 * std::max(1.0, err)) break;
            prev = err;
            Eigen::VectorXd wn = w.cwiseProduct(r.cwiseAbs());
            double sum = wn.sum();
            if (sum <= 0) break;  // interpolating fit
            w = wn / sum;
        }
        res.poly = fitdetail::to_poly(p, best_c);
        res.error = best_err;
        res.iterations = it + 1;
        res.converged = it < kLawsonMaxIters;
        return res;
    }

    // damped IRLS for finite q != 2
    Eigen::VectorXd c = fitdetail::solve_weighted(p.A, p.b, Eigen::VectorXd::Ones(p.b.size()));
    Eigen::VectorXd r = p.b - p.A * c;
    double err = fitdetail::residual_norm(r, q, cell_vol);
    Eigen::VectorXd best_c = c;
    double best_err = err;
    int it = 0;
    bool converged = false;
    for (; it < kIrlsMaxIters; ++it) {
        Eigen::VectorXd w(r.size());
        for (Eigen::Index i = 0; i < r.size(); ++i)
            w[i] = std::pow(std::max(std::fabs(r[i]), kIrlsResidualFloor), q.q - 2.0);
        Eigen::VectorXd c_new = fitdetail::solve_weighted(p.A, p.b, w);
        // halve the step while the error gets worse
        double step = 1.0;
        Eigen::VectorXd c_try;
        double err_try = 0;
        for (int h = 0; h < 6; ++h) {
            c_try = c + step * (c_new - c);
            err_try = fitdetail::residual_norm(p.b - p.A * c_try, q, cell_vol);
            if (err_try <= best_err * (1.0 + 1e-14) || h == 5) break;
            step *= 0.5;
        }
        double rel = std::fabs(best_err - err_try) / std::max(1e-300, best_err);
        c = c_try;
        r = p.b - p.A * c;
        if (err_try < best_err) {
            best_err = err_try;
            best_c = c;
        }
        if (rel < kIrlsRelStop) {
            converged = true;
            break;
        }
    }
    res.poly = fitdetail::to_poly(p, best_c);
    res.error = best_err;
    res.iterations = it + 1;
    res.converged = converged || it < kIrlsMaxIters;
    return res;
}

}  // namespace nterm
