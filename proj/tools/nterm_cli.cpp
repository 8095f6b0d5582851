// Batch front end: generate grids, run the N-term approximation pipeline,
// sweep N for rate fits, build and verify ring covers, render SVG.
//
// Exit codes: 0 success, 2 configuration rejected, 3 invariant failure.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "nterm/io.hpp"
#include "nterm/pipeline.hpp"
#include "nterm/verify.hpp"

namespace fs = std::filesystem;
using namespace nterm;

namespace {

NormExponent parse_q(const std::string& s) {
    if (s == "inf" || s == "INF" || s == "infinity") return NormExponent::inf();
    return NormExponent(std::stod(s));
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

struct CommonOpts {
    std::string spec;
    int d = 2, J = 6, k = 1;
    double p = 1.0;
    std::string q = "2";
    int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--spec", o.spec, "source descriptor, e.g. radial:0.5,0.5;0.3 or csv:grid.csv")->required();
    cmd->add_option("--d", o.d, "dimension");
    cmd->add_option("--J", o.J, "grid resolution level");
    cmd->add_option("--k", o.k, "approximation order (degree k-1)");
    cmd->add_option("--p", o.p, "variation exponent p");
    cmd->add_option("--q", o.q, "error norm exponent q, or 'inf'");
    cmd->add_option("--threads", o.threads, "parallelism cap for table construction");
}

RunConfig to_config(const CommonOpts& o, const std::vector<int>& Ns) {
    RunConfig cfg;
    cfg.spec = o.spec;
    cfg.d = o.d;
    cfg.J = o.J;
    cfg.k = o.k;
    cfg.p = o.p;
    cfg.q = parse_q(o.q);
    cfg.Ns = Ns;
    cfg.threads = o.threads;
    cfg.validate();
    return cfg;
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << contents;
}

int run_approx(const CommonOpts& o, int N, const std::string& out_dir, bool dump_tree, bool rings,
               bool verify) {
    RunConfig cfg = to_config(o, {N});
    GridFunction f = make_function(cfg.spec, cfg.d, cfg.J);
    VariationTable table(f, cfg.k, cfg.p, cfg.q, cfg.threads);
    Weight w(table);
    FitCache fits(f, cfg.k, cfg.q);
    RunResult r = run_single(fits, w, N, rings);

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        ojson j = approximant_json(r.covering, r.g, rings ? &r.rings : nullptr);
        write_file((fs::path(out_dir) / "approx.json").string(), j.dump(2) + "\n");
        GridFunction recon = f;
        recon.values = r.g.values();
        write_csv_grid(recon, (fs::path(out_dir) / "reconstruction.csv").string());
        if (dump_tree)
            write_file((fs::path(out_dir) / "tree.json").string(), tree_json(r.bad, r.paths).dump(2) + "\n");
    }
    char buf[256];
    std::snprintf(buf, sizeof buf, "N=%d error_q=%.12g error_q_rings=%.12g card_covering=%zu card_B=%zu\n", N,
                  r.error, r.error_rings, r.covering.entries.size(), r.paths.paths.size());
    std::cout << buf;

    if (verify) {
        auto rep = verify_run(f, w, r);
        for (auto& v : rep.violations) std::cerr << "invariant violation: " << v << "\n";
        if (!rep.ok()) return 3;
        std::cout << "invariants: ok\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nonlinear N-term piecewise polynomial approximation over dyadic cubes"};
    app.require_subcommand(1);
    app.set_config("--config");

    // gen
    auto* gen = app.add_subcommand("gen", "sample a builtin generator to a CSV grid");
    CommonOpts gen_o;
    std::string gen_out = "-";
    add_common(gen, gen_o);
    gen->add_option("--out", gen_out, "output CSV path, or - for stdout");

    // approx
    auto* approx = app.add_subcommand("approx", "run the pipeline for one N");
    CommonOpts ap_o;
    int ap_N = 16;
    std::string ap_out;
    bool ap_tree = false, ap_rings = true, ap_verify = false;
    add_common(approx, ap_o);
    approx->add_option("--N", ap_N, "term budget")->required();
    approx->add_option("--out-dir", ap_out, "directory for approx.json / reconstruction.csv");
    approx->add_flag("--dump-tree", ap_tree, "also write tree.json (G_N, boundary, contact, B_N)");
    approx->add_flag("!--no-rings", ap_rings, "skip the ring-partition conversion");
    approx->add_flag("--verify", ap_verify, "run the invariant suite; exit 3 on violation");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run a list of N and fit the error decay slope");
    CommonOpts sw_o;
    std::string sw_Ns = "8,16,32,64,128,256,512,1024";
    std::string sw_out;
    add_common(sweep, sw_o);
    sweep->add_option("--N-list", sw_Ns, "comma separated, increasing");
    sweep->add_option("--out", sw_out, "sweep CSV path (stdout when omitted)");

    // ring-cover
    auto* rc = app.add_subcommand("ring-cover", "cover a dyadic ring Q*\\Q by overlapping cubes");
    std::string rc_outer = "0:0,0", rc_inner;
    std::string rc_json, rc_svg;
    rc->add_option("--outer", rc_outer, "outer cube id j:a1,...,ad");
    rc->add_option("--inner", rc_inner, "inner cube id")->required();
    rc->add_option("--out", rc_json, "JSON output path (stdout when omitted)");
    rc->add_option("--svg", rc_svg, "SVG rendering path (d=2)");

    // verify
    auto* ver = app.add_subcommand("verify", "run the invariant suite for one configuration");
    CommonOpts ve_o;
    int ve_N = 16;
    add_common(ver, ve_o);
    ver->add_option("--N", ve_N, "term budget")->required();

    // render
    auto* ren = app.add_subcommand("render", "render an artifact as SVG (d=2)");
    CommonOpts re_o;
    std::string re_what = "covering", re_out = "out.svg";
    int re_N = 16;
    std::string re_outer, re_inner;
    add_common(ren, re_o);
    ren->add_option("--what", re_what, "covering | rings | function | cover");
    ren->add_option("--N", re_N, "term budget (covering/rings)");
    ren->add_option("--outer", re_outer, "outer cube id (cover)");
    ren->add_option("--inner", re_inner, "inner cube id (cover)");
    ren->add_option("--out", re_out, "SVG path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            // gen only needs d and J; the p/q window is not validated here
            GridFunction f = make_function(gen_o.spec, gen_o.d, gen_o.J);
            if (gen_out == "-")
                write_csv_grid(f, std::cout);
            else
                write_csv_grid(f, gen_out);
            return 0;
        }
        if (approx->parsed()) return run_approx(ap_o, ap_N, ap_out, ap_tree, ap_rings, ap_verify);
        if (sweep->parsed()) {
            RunConfig cfg = to_config(sw_o, parse_int_list(sw_Ns));
            if (cfg.Ns.size() < 4) throw ConfigError("sweep needs at least 4 values of N");
            for (std::size_t i = 1; i < cfg.Ns.size(); ++i)
                if (cfg.Ns[i] <= cfg.Ns[i - 1]) throw ConfigError("N list must increase");
            GridFunction f = make_function(cfg.spec, cfg.d, cfg.J);
            SweepReport rep = rate_sweep(f, cfg);
            if (sw_out.empty()) {
                write_sweep_csv(rep, std::cout);
            } else {
                std::ofstream out(sw_out);
                write_sweep_csv(rep, out);
            }
            char buf[160];
            if (rep.slope_valid)
                std::snprintf(buf, sizeof buf, "slope=%.12g predicted=%.12g\n", rep.slope, rep.predicted);
            else
                std::snprintf(buf, sizeof buf, "slope=skipped (errors at exactness level) predicted=%.12g\n",
                              rep.predicted);
            std::cout << buf;
            return 0;
        }
        if (rc->parsed()) {
            DyadicCube outer = parse_cube_id(rc_outer);
            DyadicCube inner = parse_cube_id(rc_inner);
            auto cc = cover_ring(inner, outer);
            auto rep = verify_cover(cc, inner, outer);
            ojson j = cycle_cover_json(cc);
            j["verified"] = rep.ok();
            j["violations"] = rep.violations;
            if (rc_json.empty())
                std::cout << j.dump(2) << "\n";
            else
                write_file(rc_json, j.dump(2) + "\n");
            if (!rc_svg.empty()) {
                std::ofstream out(rc_svg, std::ios::binary);
                render_cycle_cover_svg(cc, out);
            }
            return rep.ok() ? 0 : 3;
        }
        if (ver->parsed()) {
            RunConfig cfg = to_config(ve_o, {ve_N});
            GridFunction f = make_function(cfg.spec, cfg.d, cfg.J);
            VariationTable table(f, cfg.k, cfg.p, cfg.q, cfg.threads);
            Weight w(table);
            FitCache fits(f, cfg.k, cfg.q);
            RunResult r = run_single(fits, w, ve_N, true);
            auto rep = verify_run(f, w, r);
            for (auto& v : rep.violations) std::cerr << "invariant violation: " << v << "\n";
            std::cout << (rep.ok() ? "invariants: ok\n" : "invariants: FAILED\n");
            return rep.ok() ? 0 : 3;
        }
        if (ren->parsed()) {
            std::ofstream out(re_out, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write " + re_out);
            if (re_what == "function") {
                GridFunction f = make_function(re_o.spec, re_o.d, re_o.J);
                render_function_svg(f, out);
            } else if (re_what == "cover") {
                auto cc = cover_ring(parse_cube_id(re_inner), parse_cube_id(re_outer));
                render_cycle_cover_svg(cc, out);
            } else {
                RunConfig cfg = to_config(re_o, {re_N});
                GridFunction f = make_function(cfg.spec, cfg.d, cfg.J);
                VariationTable table(f, cfg.k, cfg.p, cfg.q, cfg.threads);
                Weight w(table);
                FitCache fits(f, cfg.k, cfg.q);
                RunResult r = run_single(fits, w, re_N, re_what == "rings");
                if (re_what == "rings")
                    render_rings_svg(r.rings, out);
                else
                    render_covering_svg(r.covering, cfg.d, out);
            }
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const UnsupportedDimension& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
