#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "nterm/variation.hpp"

using namespace nterm;

namespace {

// The value sum_{Q in family} E(Q)^p of every disjoint dyadic family inside q,
// one entry per family. Sums every family explicitly instead of maximizing
// early, so it is independent of the DP's max-plus shortcut.
std::vector<double> family_values(const VariationTable& t, const DyadicCube& q,
                                  const std::function<bool(const DyadicCube&)>& admit) {
    std::vector<double> out;
    if (admit(q)) out.push_back(std::pow(t.E(q), t.p));
    if (q.level == t.J) {
        out.push_back(0.0);  // the empty family
        return out;
    }
    std::vector<double> combos = {0.0};
    for (auto& s : sons(q)) {
        auto sub = family_values(t, s, admit);
        std::vector<double> next;
        next.reserve(combos.size() * sub.size());
        for (double a : combos)
            for (double b : sub) next.push_back(a + b);
        combos = std::move(next);
    }
    out.insert(out.end(), combos.begin(), combos.end());
    return out;
}

double exhaustive_variation_p(const VariationTable& t, const DyadicCube& root,
                              const std::function<bool(const DyadicCube&)>& admit) {
    auto vals = family_values(t, root, admit);
    double best = 0;
    for (double v : vals) best = std::max(best, v);
    return best;
}

GridFunction staircase(int J, int m, double h) {
    GridFunction f;
    f.dim = 1;
    f.J = J;
    const std::uint64_t n = std::uint64_t(1) << J;
    f.values.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const double x = ((double)i + 0.5) / (double)n;
        int jumps = 0;
        for (int t = 0; t < m; ++t)
            if (x >= (2.0 * t + 1.0) / (double)(2 * m)) ++jumps;
        f.values[i] = h * jumps;
    }
    return f;
}

}  // namespace

TEST_CASE("polynomials have zero variation") {
    auto f = make_function("poly:1 + 2*x1 - 0.5*x2", 2, 4);
    VariationTable t(f, 2, 1.0, NormExponent(2.0));
    CHECK(t.variation(DyadicSet::cube(DyadicCube::root(2))) <= 1e-9);
}

TEST_CASE("staircase recovers the classical total variation scale") {
    const int m = 4;
    const double h = 0.5;
    auto f = staircase(6, m, h);
    VariationTable t(f, 1, 1.0, NormExponent::inf());
    const double v = t.variation(DyadicSet::cube(DyadicCube::root(1)));
    CHECK(v >= m * h / 2 - 1e-12);
    CHECK(v <= 2 * m * h + 1e-12);
}

TEST_CASE("DP equals exhaustive family enumeration (d=1)") {
    for (int J : {2, 3, 4}) {
        auto f = make_function("cusp:0.31;0.6", 1, J);
        for (double p : {1.0, 1.5}) {
            VariationTable t(f, 1, p, NormExponent(2.0));
            const double dp = t.dp_value(DyadicSet::cube(DyadicCube::root(1)));
            const double ex =
                exhaustive_variation_p(t, DyadicCube::root(1), [](const DyadicCube&) { return true; });
            CHECK(std::fabs(dp - ex) <= 1e-12 * std::max(1.0, ex));
        }
    }
}

TEST_CASE("ring DP equals constrained enumeration (d=1)") {
    auto f = make_function("cusp:0.47;0.5", 1, 4);
    VariationTable t(f, 1, 1.0, NormExponent(2.0));
    const DyadicCube outer = DyadicCube::root(1);
    for (std::uint32_t idx : {0u, 3u, 9u}) {
        const DyadicCube inner(1, idx == 0 ? 2 : 4, idx == 0 ? Index{0} : Index{idx});
        auto ring = DyadicSet::ring(outer, inner);
        const double dp = t.dp_value(ring);
        const double ex = exhaustive_variation_p(
            t, outer, [&](const DyadicCube& q) { return q.disjoint(inner); });
        CHECK(std::fabs(dp - ex) <= 1e-12 * std::max(1.0, ex));
    }
}

TEST_CASE("variation is monotone under set inclusion") {
    auto f = make_function("radial:0.4,0.6;0.25", 2, 5);
    VariationTable t(f, 1, 1.2, NormExponent(2.0));
    const double whole = t.variation(DyadicSet::cube(DyadicCube::root(2)));
    for (auto& s : sons(DyadicCube::root(2))) {
        CHECK(t.variation(DyadicSet::cube(s)) <= whole);
        for (auto& ss : sons(s)) CHECK(t.variation(DyadicSet::cube(ss)) <= t.variation(DyadicSet::cube(s)));
    }
    CHECK(t.variation(DyadicSet::ring(DyadicCube::root(2), DyadicCube(2, 2, {1, 1}))) <= whole);
}

TEST_CASE("weight normalization and subadditivity") {
    auto f = make_function("radial:0.5,0.5;0.3", 2, 5);
    VariationTable t(f, 1, 1.0, NormExponent(2.0));
    Weight w(t);
    REQUIRE(!w.degenerate());
    CHECK(w(DyadicSet::cube(DyadicCube::root(2))) == 1.0);

    SECTION("random partitions: exact subadditivity, no tolerance") {
        std::mt19937 rng(7);
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<DyadicCube> leaves;
            std::function<void(const DyadicCube&)> split = [&](const DyadicCube& q) {
                if (q.level == t.J || (rng() % 2u) == 0) {
                    leaves.push_back(q);
                    return;
                }
                for (auto& s : sons(q)) split(s);
            };
            split(DyadicCube::root(2));
            // exact up to summation order: the compared sums accumulate the
            // same DP values in different orders, which costs a few ulp
            const double ulp = 1e-13;
            double sum = 0;
            for (auto& q : leaves) sum += w.cube(q);
            CHECK(sum <= 1.0 + ulp);
            // drop a random subfamily; the union is then a cube list
            std::vector<DyadicCube> kept;
            double part = 0;
            for (auto& q : leaves)
                if (rng() % 4u) {
                    kept.push_back(q);
                    part += w.cube(q);
                }
            if (!kept.empty()) CHECK(part <= w(DyadicSet::list_unchecked(kept)) * (1.0 + ulp) + ulp);
        }
    }
    SECTION("ring plus hole stays below the cube") {
        const DyadicCube outer(2, 1, {0, 1});
        const DyadicCube inner(2, 3, {2, 5});
        CHECK(w.ring(outer, inner) + w.cube(inner) <= w.cube(outer));
    }
    SECTION("degenerate function raises") {
        auto g = make_function("const:0.25", 2, 4);
        VariationTable tg(g, 1, 1.0, NormExponent(2.0));
        Weight wg(tg);
        CHECK(wg.degenerate());
        CHECK_THROWS_AS(wg.cube(DyadicCube::root(2)), DegenerateFunction);
    }
}

TEST_CASE("lower semicontinuity under value-wise convergence") {
    auto f = make_function("sin:1,1", 2, 4);
    auto g = make_function("cusp:0.3,0.7;0.8", 2, 4);
    VariationTable tf(f, 1, 1.0, NormExponent(2.0));
    const double vf = tf.variation(DyadicSet::cube(DyadicCube::root(2)));
    double liminf = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= 4; ++j) {
        GridFunction fj = f;
        const double scale = 1e-13 / std::ldexp(1.0, j);
        for (std::size_t i = 0; i < fj.values.size(); ++i) fj.values[i] += scale * g.values[i];
        VariationTable tj(fj, 1, 1.0, NormExponent(2.0));
        liminf = std::min(liminf, tj.variation(DyadicSet::cube(DyadicCube::root(2))));
    }
    CHECK(vf <= liminf + 1e-9);
}

TEST_CASE("weights of small cubes decay at the smoothness rate") {
    const int J = 7, d = 2, k = 1;
    const double p = 1.0, qv = 2.0;
    auto f = make_function("sin:1,1", d, J);
    VariationTable t(f, k, p, NormExponent(qv));
    Weight w(t);
    // s = d(1/p - 1/q) = 1 <= k; expected log2 slope of max cell weight per level
    const double s = d * (1.0 / p - 1.0 / qv);
    std::vector<double> xs, ys;
    for (int j = 2; j <= J - 2; ++j) {
        double mx = 0;
        const std::uint64_t n = std::uint64_t(1) << (std::uint64_t)(j * d);
        for (std::uint64_t c = 0; c < n; ++c) {
            Index idx(d);
            for (int i = 0; i < d; ++i)
                idx[i] = (std::uint32_t)((c >> ((d - 1 - i) * j)) & ((std::uint64_t(1) << j) - 1));
            mx = std::max(mx, w.cube(DyadicCube(d, j, idx)));
        }
        xs.push_back(j);
        ys.push_back(std::log2(mx));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= (double)xs.size();
    my /= (double)ys.size();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        num += (xs[i] - mx) * (ys[i] - my);
        den += (xs[i] - mx) * (xs[i] - mx);
    }
    const double slope = num / den;
    CHECK(slope <= -d * p * (1.0 / qv + s / d) + 0.5);
}

TEST_CASE("hierarchical moment errors agree with the direct solver") {
    GridFunction f;
    f.dim = 2;
    f.J = 4;
    f.values.resize(256);
    std::mt19937 rng(17);
    for (auto& v : f.values) v = (double)(rng() % 1000) / 999.0;
    for (int k : {1, 2, 3}) {
        VariationTable t(f, k, 1.0, NormExponent(2.0));
        for (int j = 0; j <= 4; ++j) {
            const std::uint64_t n = std::uint64_t(1) << (2 * j);
            for (std::uint64_t c = 0; c < n; ++c) {
                Index idx = {(std::uint32_t)(c >> j), (std::uint32_t)(c & ((1u << j) - 1))};
                DyadicCube q(2, j, idx);
                const double direct = best_approx(f, DyadicSet::cube(q), k, NormExponent(2.0)).error;
                // the normal-equations route cancels to ~sqrt(eps) when the
                // fit is nearly exact; away from zero the two routes agree
                CHECK(std::fabs(t.E(q) - direct) <= 1e-8 + 1e-10 * direct);
            }
        }
    }
}

TEST_CASE("mollification keeps local approximation errors controlled") {
    // discrete surrogate of the continuum inequality: E_k of the mollified
    // function on an interior cube stays below the worst E_k of f over the
    // kernel-shifted cubes, up to grid slack 10*2^-J
    const int J = 5, d = 2, k = 1;
    auto f = make_function("cusp:0.52,0.48;0.8", d, J);
    const long m = 2;
    const double eps = (double)m * std::ldexp(1.0, -J);
    auto fm = mollify(f, eps);

    const DyadicCube Q(d, 2, {1, 2});  // interior, distance 1/4 >= eps from the boundary
    const double lhs = best_approx(fm, DyadicSet::cube(Q), k, NormExponent(2.0)).error;

    double rhs = 0;
    const std::int64_t lo0 = (std::int64_t)Q.index[0] << (J - Q.level);
    const std::int64_t lo1 = (std::int64_t)Q.index[1] << (J - Q.level);
    const std::int64_t side = std::int64_t(1) << (J - Q.level);
    for (long o0 = -m; o0 <= m; ++o0)
        for (long o1 = -m; o1 <= m; ++o1) {
            std::vector<DyadicCube> cells;
            for (std::int64_t a = 0; a < side; ++a)
                for (std::int64_t b = 0; b < side; ++b)
                    cells.emplace_back(d, J, Index{(std::uint32_t)(lo0 + a - o0), (std::uint32_t)(lo1 + b - o1)});
            rhs = std::max(rhs, best_approx(f, DyadicSet::list_unchecked(std::move(cells)), k,
                                            NormExponent(2.0))
                                    .error);
        }
    CHECK(lhs <= rhs + 10.0 * std::ldexp(1.0, -J));
}

TEST_CASE("mollification does not inflate the dyadic variation") {
    // surrogate of the variation bound for regularized functions: on an
    // interior cube at distance >= eps from the boundary, the mollified
    // variation stays below the variation of f on the whole cube plus slack
    const int J = 5, d = 2, k = 1;
    const double p = 1.0;
    auto f = make_function("radial:0.5,0.5;0.28", d, J);
    const double eps = 2.0 * std::ldexp(1.0, -J);
    auto fm = mollify(f, eps);
    VariationTable tf(f, k, p, NormExponent(2.0));
    VariationTable tm(fm, k, p, NormExponent(2.0));
    const DyadicCube Q(d, 2, {1, 1});
    const double cells_in_q = std::ldexp(1.0, (J - Q.level) * d);
    const double slack = 10.0 * std::ldexp(1.0, -J) * std::pow(cells_in_q, 1.0 / p);
    CHECK(tm.variation(DyadicSet::cube(Q)) <=
          tf.variation(DyadicSet::cube(DyadicCube::root(d))) + slack);
}

TEST_CASE("variation table CSV dump is well formed") {
    auto f = make_function("sin:1", 1, 2);
    VariationTable t(f, 1, 1.0, NormExponent(2.0));
    std::ostringstream os;
    dump_variation_csv(t, os);
    const std::string s = os.str();
    CHECK(s.rfind("cube,E_k,E_k_p,dp\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 1 + 1 + 2 + 4);
}
