#pragma once

// The computable dyadic surrogate of the (k,p)-variation: a bottom-up DP over
// the dyadic tree with value max(E_k(Q)^p, sum over sons), evaluated per cube
// from cached local best-approximation errors, plus the normalized weight W
// driving the tree algorithm. The sup defining the variation is restricted to
// dyadic cubes of level <= J; subadditivity over disjoint dyadic sets is then
// exact by construction.

#include <future>
#include <thread>
#include <unordered_map>

#include "polyfit.hpp"

namespace nterm {

struct DegenerateFunction : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace vardetail {

inline std::uint64_t cube_linear(const DyadicCube& q) {
    std::uint64_t idx = 0;
    for (int i = 0; i < q.dim; ++i) idx = (idx << q.level) | q.index[i];
    return idx;
}

// Gram entry building block: sum over m midpoint nodes of ((t+1/2)/m - 1/2)^n
inline std::vector<double> centered_power_sums(std::uint64_t m, int max_pow) {
    std::vector<double> s(max_pow + 1, 0.0);
    for (std::uint64_t t = 0; t < m; ++t) {
        const double u = ((double)t + 0.5) / (double)m - 0.5;
        double up = 1.0;
        for (int n = 0; n <= max_pow; ++n) {
            s[n] += up;
            up *= u;
        }
    }
    return s;
}

inline void parallel_for(std::uint64_t n, int threads, const std::function<void(std::uint64_t, std::uint64_t)>& fn) {
    if (threads <= 1 || n < 64) {
        fn(0, n);
        return;
    }
    const int T = std::min<std::uint64_t>(threads, n);
    std::vector<std::future<void>> futs;
    const std::uint64_t chunk = (n + T - 1) / T;
    for (int t = 0; t < T; ++t) {
        const std::uint64_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        futs.push_back(std::async(std::launch::async, [&, lo, hi] { fn(lo, hi); }));
    }
    for (auto& f : futs) f.get();
}

}  // namespace vardetail

class VariationTable {
public:
    int d = 1, J = 0, k = 1;
    double p = 1.0;
    NormExponent q;
    const GridFunction* f = nullptr;

    VariationTable() = default;
    VariationTable(const GridFunction& fn, int k_, double p_, NormExponent q_, int threads = 1)
        : d(fn.dim), J(fn.J), k(k_), p(p_), q(q_), f(&fn) {
        if (!(p >= 1.0)) throw std::invalid_argument("variation: p >= 1 required");
        E_lvl_.resize(J + 1);
        DP_lvl_.resize(J + 1);
        for (int j = 0; j <= J; ++j) {
            E_lvl_[j].assign(std::uint64_t(1) << (std::uint64_t)(j * d), 0.0);
            DP_lvl_[j].assign(E_lvl_[j].size(), 0.0);
        }
        if (!q.is_inf() && q.q == 2.0)
            build_l2_moments();
        else if (q.is_inf() && k == 1)
            build_minmax();
        else
            build_generic(threads);
        build_dp();
    }

    double E(const DyadicCube& c) const { return E_lvl_[c.level][vardetail::cube_linear(c)]; }
    double dp(const DyadicCube& c) const { return DP_lvl_[c.level][vardetail::cube_linear(c)]; }
    bool underdetermined_level(int level) const {
        return (std::uint64_t(1) << (std::uint64_t)((J - level) * d)) < poly_basis_size(d, k);
    }

    // p-th power of the dyadic variation over S
    double dp_value(const DyadicSet& s) const {
        switch (s.kind) {
            case DyadicSet::Kind::Cube: return dp(s.outer);
            case DyadicSet::Kind::Ring: return dp_ring(s.outer, *s.inner);
            case DyadicSet::Kind::CubeList: {
                double acc = 0;
                for (auto& c : canonicalize(s.cubes)) acc += dp(c);
                return acc;
            }
        }
        return 0;
    }

    double variation(const DyadicSet& s) const { return std::pow(dp_value(s), 1.0 / p); }

    // merge complete sibling groups so every admissible cube lies inside one member
    static std::vector<DyadicCube> canonicalize(std::vector<DyadicCube> cubes) {
        bool merged = true;
        while (merged) {
            merged = false;
            std::unordered_map<DyadicCube, int, CubeHash> father_count;
            for (auto& c : cubes)
                if (c.level > 0) father_count[c.father()]++;
            for (auto& [fa, cnt] : father_count) {
                if (cnt == (1 << fa.dim)) {
                    std::vector<DyadicCube> next;
                    for (auto& c : cubes)
                        if (!(c.level == fa.level + 1 && fa.contains(c))) next.push_back(c);
                    next.push_back(fa);
                    cubes = std::move(next);
                    merged = true;
                    break;
                }
            }
        }
        return cubes;
    }

private:
    std::vector<std::vector<double>> E_lvl_, DP_lvl_;

    double dp_ring(const DyadicCube& outer, const DyadicCube& inner) const {
        // only cubes disjoint from the inner hole may enter a family
        if (outer == inner) return 0.0;
        double acc = 0;
        DyadicCube cur = outer;
        while (cur != inner) {
            const DyadicCube next = inner.ancestor(cur.level + 1);
            for (auto& son : sons(cur))
                if (son != next) acc += dp(son);
            cur = next;
        }
        return acc;
    }

    void build_dp() {
        for (std::uint64_t c = 0; c < DP_lvl_[J].size(); ++c) DP_lvl_[J][c] = std::pow(E_lvl_[J][c], p);
        for (int j = J - 1; j >= 0; --j) {
            const std::uint64_t n = DP_lvl_[j].size();
            const int shift = d;  // sons of cube c occupy a contiguous pattern in son-level linearization
            for (std::uint64_t c = 0; c < n; ++c) {
                double own = std::pow(E_lvl_[j][c], p);
                double sum = 0;
                // reconstruct son linear indices by interleaving one extra bit per axis
                for (std::uint32_t bits = 0; bits < (1u << d); ++bits) {
                    std::uint64_t son = 0;
                    for (int i = 0; i < d; ++i) {
                        const std::uint64_t axis = (c >> ((d - 1 - i) * j)) & ((std::uint64_t(1) << j) - 1);
                        const std::uint64_t sb = (bits >> (d - 1 - i)) & 1u;
                        son = (son << (j + 1)) | ((axis << 1) | sb);
                    }
                    sum += DP_lvl_[j + 1][son];
                }
                DP_lvl_[j][c] = std::max(own, sum);
                (void)shift;
            }
        }
    }

    void build_l2_moments() {
        const auto expos = poly_basis_exponents(d, k);
        const std::size_t nb = expos.size();
        const double cell_vol = f->cell_volume();

        // child-to-parent moment transforms, one per son offset
        std::vector<Eigen::MatrixXd> A(1u << d);
        for (std::uint32_t bits = 0; bits < (1u << d); ++bits) {
            Eigen::MatrixXd M = Eigen::MatrixXd::Zero((Eigen::Index)nb, (Eigen::Index)nb);
            for (std::size_t bi = 0; bi < nb; ++bi)
                for (std::size_t gi = 0; gi < nb; ++gi) {
                    double v = 1.0;
                    bool ok = true;
                    for (int i = 0; i < d && ok; ++i) {
                        const int be = expos[bi][i], ge = expos[gi][i];
                        if (ge > be) {
                            ok = false;
                            break;
                        }
                        double binom = 1;
                        for (int t = 0; t < ge; ++t) binom = binom * (be - t) / (t + 1);
                        const double delta = ((bits >> (d - 1 - i)) & 1u) ? 0.5 : -0.5;
                        v *= binom * std::pow(delta, be - ge);
                    }
                    if (ok) {
                        int tot = 0;
                        for (int i = 0; i < d; ++i) tot += expos[bi][i];
                        M((Eigen::Index)bi, (Eigen::Index)gi) = v * std::ldexp(1.0, -tot);
                    }
                }
            A[bits] = std::move(M);
        }

        // level J: single-cell moments
        std::uint64_t n = std::uint64_t(1) << (std::uint64_t)(J * d);
        Eigen::MatrixXd cur((Eigen::Index)nb, (Eigen::Index)n);  // column per cube
        Eigen::VectorXd sf2((Eigen::Index)n);
        cur.setZero();
        for (std::uint64_t c = 0; c < n; ++c) {
            cur(0, (Eigen::Index)c) = f->values[c];
            sf2[(Eigen::Index)c] = f->values[c] * f->values[c];
        }
        // E at level J is 0 (single data point, constant interpolates)

        int max_pow = 0;
        for (auto& e : expos)
            for (int i = 0; i < d; ++i) max_pow = std::max(max_pow, 2 * e[i]);

        for (int j = J - 1; j >= 0; --j) {
            const std::uint64_t np = std::uint64_t(1) << (std::uint64_t)(j * d);
            Eigen::MatrixXd up((Eigen::Index)nb, (Eigen::Index)np);
            Eigen::VectorXd sf2p((Eigen::Index)np);
            up.setZero();
            sf2p.setZero();
            for (std::uint64_t c = 0; c < np; ++c) {
                for (std::uint32_t bits = 0; bits < (1u << d); ++bits) {
                    std::uint64_t son = 0;
                    for (int i = 0; i < d; ++i) {
                        const std::uint64_t axis = (c >> ((d - 1 - i) * j)) & ((std::uint64_t(1) << j) - 1);
                        const std::uint64_t sb = (bits >> (d - 1 - i)) & 1u;
                        son = (son << (j + 1)) | ((axis << 1) | sb);
                    }
                    up.col((Eigen::Index)c) += A[bits] * cur.col((Eigen::Index)son);
                    sf2p[(Eigen::Index)c] += sf2[(Eigen::Index)son];
                }
            }

            // Gram is shared across the level (midpoint pattern is translation invariant)
            const auto S = vardetail::centered_power_sums(std::uint64_t(1) << (J - j), max_pow);
            Eigen::MatrixXd G((Eigen::Index)nb, (Eigen::Index)nb);
            for (std::size_t bi = 0; bi < nb; ++bi)
                for (std::size_t gi = 0; gi < nb; ++gi) {
                    double v = 1;
                    for (int i = 0; i < d; ++i) v *= S[expos[bi][i] + expos[gi][i]];
                    G((Eigen::Index)bi, (Eigen::Index)gi) = v;
                }
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(G);

            for (std::uint64_t c = 0; c < np; ++c) {
                Eigen::VectorXd m = up.col((Eigen::Index)c);
                Eigen::VectorXd coef = cod.solve(m);
                const double ss = sf2p[(Eigen::Index)c] - m.dot(coef);
                E_lvl_[j][c] = std::sqrt(std::max(0.0, ss) * cell_vol);
            }
            cur = std::move(up);
            sf2 = std::move(sf2p);
        }
    }

    void build_minmax() {
        std::uint64_t n = std::uint64_t(1) << (std::uint64_t)(J * d);
        std::vector<double> mn(f->values), mx(f->values);
        for (int j = J - 1; j >= 0; --j) {
            const std::uint64_t np = std::uint64_t(1) << (std::uint64_t)(j * d);
            std::vector<double> mn2(np, std::numeric_limits<double>::infinity());
            std::vector<double> mx2(np, -std::numeric_limits<double>::infinity());
            for (std::uint64_t c = 0; c < np; ++c) {
                for (std::uint32_t bits = 0; bits < (1u << d); ++bits) {
                    std::uint64_t son = 0;
                    for (int i = 0; i < d; ++i) {
                        const std::uint64_t axis = (c >> ((d - 1 - i) * j)) & ((std::uint64_t(1) << j) - 1);
                        const std::uint64_t sb = (bits >> (d - 1 - i)) & 1u;
                        son = (son << (j + 1)) | ((axis << 1) | sb);
                    }
                    mn2[c] = std::min(mn2[c], mn[son]);
                    mx2[c] = std::max(mx2[c], mx[son]);
                }
                E_lvl_[j][c] = 0.5 * (mx2[c] - mn2[c]);
            }
            mn = std::move(mn2);
            mx = std::move(mx2);
        }
        (void)n;
    }

    void build_generic(int threads) {
        for (int j = J - 1; j >= 0; --j) {
            const std::uint64_t np = std::uint64_t(1) << (std::uint64_t)(j * d);
            auto* self = this;
            vardetail::parallel_for(np, threads, [=, this](std::uint64_t lo, std::uint64_t hi) {
                for (std::uint64_t c = lo; c < hi; ++c) {
                    Index idx(d);
                    for (int i = 0; i < d; ++i)
                        idx[i] = (std::uint32_t)((c >> ((d - 1 - i) * j)) & ((std::uint64_t(1) << j) - 1));
                    DyadicCube q(d, j, idx);
                    self->E_lvl_[j][c] = best_approx(*self->f, DyadicSet::cube(q), self->k, self->q).error;
                }
            });
        }
    }
};

// Normalized weight W(S) = var_p^k(f;S;L_q)^p / var_p^k(f;Q^d;L_q)^p.
// W(Q^d) = 1; degenerate functions (zero variation) must short-circuit
// upstream to g_N = m_{Q^d}.
class Weight {
public:
    explicit Weight(const VariationTable& t) : table_(&t) {
        z_p_ = t.dp(DyadicCube::root(t.d));
    }
    bool degenerate() const { return z_p_ <= 0.0; }
    double normalizer_p() const { return z_p_; }
    const VariationTable& table() const { return *table_; }

    double operator()(const DyadicSet& s) const {
        if (degenerate()) throw DegenerateFunction("weight: variation of Q^d is zero");
        return table_->dp_value(s) / z_p_;
    }
    double cube(const DyadicCube& q) const {
        if (degenerate()) throw DegenerateFunction("weight: variation of Q^d is zero");
        return table_->dp(q) / z_p_;
    }
    double ring(const DyadicCube& outer, const DyadicCube& inner) const {
        if (outer == inner) return 0.0;
        return (*this)(DyadicSet::ring(outer, inner));
    }

private:
    const VariationTable* table_;
    double z_p_ = 0;
};

// Diagnostic dump: cube id, E_k, E_k^p, DP value.
inline void dump_variation_csv(const VariationTable& t, std::ostream& out) {
    out << "cube,E_k,E_k_p,dp\n";
    char buf[128];
    for (int j = 0; j <= t.J; ++j) {
        const std::uint64_t n = std::uint64_t(1) << (std::uint64_t)(j * t.d);
        for (std::uint64_t c = 0; c < n; ++c) {
            Index idx(t.d);
            for (int i = 0; i < t.d; ++i)
                idx[i] = (std::uint32_t)((c >> ((t.d - 1 - i) * j)) & ((std::uint64_t(1) << j) - 1));
            DyadicCube q(t.d, j, idx);
            std::snprintf(buf, sizeof buf, "%s,%.12g,%.12g,%.12g\n", cube_id(q).c_str(), t.E(q),
                          std::pow(t.E(q), t.p), t.dp(q));
            out << buf;
        }
    }
}

}  // namespace nterm
