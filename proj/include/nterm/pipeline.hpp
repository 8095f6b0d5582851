#pragma once

// End-to-end runs: configuration validation (1 <= p < q <= inf with
// s = d(1/p - 1/q) in (0, k]), the per-N pipeline, and the rate sweep with
// its log-log slope fit.

#include <chrono>

#include "approximant.hpp"

namespace nterm {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string spec;
    int d = 2;
    int J = 6;
    int k = 1;
    double p = 1.0;
    NormExponent q{2.0};
    std::vector<int> Ns = {16};
    int threads = 1;
    bool dump_tree = false;
    bool rings = true;
    bool verify = false;

    double smoothness() const { return d * (1.0 / p - (q.is_inf() ? 0.0 : 1.0 / q.q)); }

    void validate() const {
        if (d < 1) throw ConfigError("d must be >= 1");
        if (J < 1 || d * J > 40) throw ConfigError("J out of range");
        if (k < 1) throw ConfigError("k must be >= 1");
        if (!(p >= 1.0)) throw ConfigError("p must be >= 1");
        if (!(q.is_inf() || q.q > p))
            throw ConfigError("need p < q (got p=" + std::to_string(p) + ", q=" + std::to_string(q.q) + ")");
        const double s = smoothness();
        if (!(s > 0.0) || s > (double)k + 1e-12)
            throw ConfigError("smoothness s = d(1/p-1/q) = " + std::to_string(s) + " must lie in (0, k] with k=" +
                              std::to_string(k));
        for (int N : Ns)
            if (N < 1) throw ConfigError("N must be >= 1");
    }
};

struct RunResult {
    int N = 1;
    bool degenerate = false;
    BadSet bad;
    BasicPathSet paths;
    Covering covering;
    PiecewisePoly g;
    RingPartition rings;
    double error = 0;
    double error_rings = 0;
    double seconds = 0;
};

// One N with a prebuilt weight; table and fit cache are shared across a sweep.
inline RunResult run_single(FitCache& fits, const Weight& w, int N, bool build_rings = true) {
    const auto t0 = std::chrono::steady_clock::now();
    RunResult out;
    out.N = N;
    const GridFunction& f = fits.f();
    const int J = f.J;

    if (w.degenerate()) {
        out.degenerate = true;
        out.covering.N = N;
        out.covering.entries.emplace_back(DyadicCube::root(f.dim), CubeTag::Root);
        out.covering.literal_count = 1;
        out.g = degenerate_piecewise(fits);
    } else {
        out.paths = run_tree_algorithm(w, N, &out.bad);
        out.covering = build_covering(out.paths, out.bad, J);
        out.g = build_piecewise(fits, out.paths);
    }
    out.error = approx_error(f, out.g, fits.q());
    if (build_rings) {
        out.rings = to_ring_partition(out.covering, out.g);
        auto rv = out.rings.values();
        GridFunction diff = f;
        for (std::size_t i = 0; i < rv.size(); ++i) diff.values[i] -= rv[i];
        out.error_rings = lq_norm_full(diff, fits.q());
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

struct SweepRow {
    int N;
    std::size_t card_covering;
    std::size_t card_basic_paths;
    double error;
    double error_rings;
    double seconds;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    double slope = 0;          // least-squares slope of log error vs log N
    double predicted = 0;      // -s/d
    bool slope_valid = false;  // false when errors are at exactness level
};

inline SweepReport rate_sweep(const GridFunction& f, const RunConfig& cfg) {
    cfg.validate();
    SweepReport rep;
    rep.predicted = -cfg.smoothness() / cfg.d;

    VariationTable table(f, cfg.k, cfg.p, cfg.q, cfg.threads);
    Weight w(table);
    FitCache fits(f, cfg.k, cfg.q);
    for (int N : cfg.Ns) {
        RunResult r = run_single(fits, w, N, cfg.rings);
        rep.rows.push_back({N, r.covering.entries.size(), r.paths.paths.size(), r.error, r.error_rings, r.seconds});
    }

    // slope of log error against log N; skipped when the approximation is exact
    std::vector<double> xs, ys;
    for (auto& row : rep.rows)
        if (row.error > 1e-9) {
            xs.push_back(std::log((double)row.N));
            ys.push_back(std::log(row.error));
        }
    if (xs.size() >= 2) {
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
        if (den > 0) {
            rep.slope = num / den;
            rep.slope_valid = true;
        }
    }
    return rep;
}

inline void write_sweep_csv(const SweepReport& rep, std::ostream& os) {
    os << "N,card_covering,card_basic_paths,error_q,error_q_rings,seconds\n";
    char buf[256];
    for (auto& r : rep.rows) {
        std::snprintf(buf, sizeof buf, "%d,%zu,%zu,%.12g,%.12g,%.12g\n", r.N, r.card_covering,
                      r.card_basic_paths, r.error, r.error_rings, r.seconds);
        os << buf;
    }
}

}  // namespace nterm
