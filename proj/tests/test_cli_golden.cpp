// Golden-file pins for the CLI surface: sweep CSV, approximant JSON + tree
// dump, ring-cover JSON + SVG. Regenerate with NTERM_REGEN=1 after a
// deliberate format change.

#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CliRunner {
    std::string cli;
    fs::path golden;
    fs::path work;
    bool regen;

    CliRunner() {
        const char* c = std::getenv("NTERM_CLI");
        const char* g = std::getenv("NTERM_GOLDEN_DIR");
        REQUIRE(c != nullptr);
        REQUIRE(g != nullptr);
        cli = c;
        golden = g;
        work = fs::temp_directory_path() / "nterm_golden_work";
        fs::create_directories(work);
        regen = std::getenv("NTERM_REGEN") != nullptr;
        if (regen) fs::create_directories(golden);
    }

    int run(const std::string& args) { return std::system((cli + " " + args).c_str()); }

    void compare(const fs::path& produced, const std::string& name) {
        if (regen) {
            fs::copy_file(produced, golden / name, fs::copy_options::overwrite_existing);
            SUCCEED();
            return;
        }
        CHECK(slurp(produced) == slurp(golden / name));
    }

    // wall-clock columns cannot be pinned; blank the last CSV field per row
    static std::string strip_seconds(const std::string& csv) {
        std::istringstream in(csv);
        std::ostringstream out;
        std::string line;
        while (std::getline(in, line)) {
            auto last = line.rfind(',');
            out << (last == std::string::npos ? line : line.substr(0, last + 1) + "T") << "\n";
        }
        return out.str();
    }

    void compare_csv_no_seconds(const fs::path& produced, const std::string& name) {
        if (regen) {
            std::ofstream out(golden / name, std::ios::binary);
            out << strip_seconds(slurp(produced));
            SUCCEED();
            return;
        }
        CHECK(strip_seconds(slurp(produced)) == slurp(golden / name));
    }
};

}  // namespace

TEST_CASE("golden: sweep CSV") {
    CliRunner r;
    auto out = r.work / "sweep.csv";
    REQUIRE(r.run("sweep --spec \"radial:0.5,0.5;0.3\" --d 2 --J 6 --k 1 --p 1 --q 2 "
                  "--N-list 4,8,16,32 --out " +
                  out.string() + " > " + (r.work / "sweep_stdout.txt").string()) == 0);
    r.compare_csv_no_seconds(out, "sweep.csv");
}

TEST_CASE("golden: approx JSON and tree dump") {
    CliRunner r;
    auto dir = r.work / "approx_out";
    REQUIRE(r.run("\"approx\" --spec \"radial:0.21875,0.34375;0.02\" --d 2 --J 4 --k 1 --p 1 --q 2 --N 4 "
                  "--dump-tree --out-dir " +
                  dir.string() + " > " + (r.work / "approx_stdout.txt").string()) == 0);
    r.compare(dir / "approx.json", "approx.json");
    r.compare(dir / "tree.json", "tree.json");
    r.compare(dir / "reconstruction.csv", "reconstruction.csv");
}

TEST_CASE("golden: ring cover JSON and SVG") {
    CliRunner r;
    auto js = r.work / "cover.json";
    auto svg = r.work / "cover.svg";
    REQUIRE(r.run("ring-cover --outer 0:0,0 --inner 2:1,1 --out " + js.string() + " --svg " +
                  svg.string()) == 0);
    r.compare(js, "cover.json");
    r.compare(svg, "cover.svg");
    // the interior d=2 cover draws exactly 12 rectangles
    const std::string s = slurp(svg);
    std::size_t rects = 0, pos = 0;
    while ((pos = s.find("<rect", pos)) != std::string::npos) {
        ++rects;
        pos += 5;
    }
    CHECK(rects == 12);
}

TEST_CASE("sweep on a polynomial input skips the slope fit") {
    CliRunner r;
    auto log = r.work / "poly_sweep.txt";
    REQUIRE(r.run("sweep --spec \"poly:0.1 + 0.5*x1\" --d 2 --J 5 --k 2 --p 1 --q 2 "
                  "--N-list 4,8,16,32 > " +
                  log.string()) == 0);
    const std::string s = slurp(log);
    CHECK(s.find("slope=skipped") != std::string::npos);
    // every sweep error sits at exactness level
    std::istringstream in(s);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line) && line.rfind("slope", 0) != 0) {
        const auto c1 = line.find(',', line.find(',', line.find(',') + 1) + 1);
        const double err = std::stod(line.substr(c1 + 1));
        CHECK(err <= 1e-9);
    }
}

TEST_CASE("config file provides defaults, flags override") {
    CliRunner r;
    auto cfg = r.work / "run.ini";
    {
        std::ofstream out(cfg);
        out << "[approx]\nspec=\"radial:0.5,0.5;0.3\"\nd=2\nJ=5\nk=1\np=1\nq=2\nN=4\n";
    }
    auto log = r.work / "cfg_run.txt";
    REQUIRE(r.run("--config " + cfg.string() + " approx --N 8 --no-rings > " + log.string()) == 0);
    // the command line N wins over the config file value
    CHECK(slurp(log).find("N=8") != std::string::npos);
}

TEST_CASE("render: degenerate covering draws a single unit square") {
    CliRunner r;
    auto svg = r.work / "degenerate.svg";
    REQUIRE(r.run("render --what covering --spec const:0.5 --d 2 --J 4 --k 1 --p 1 --q 2 --N 4 --out " +
                  svg.string()) == 0);
    const std::string s = slurp(svg);
    std::size_t rects = 0, pos = 0;
    while ((pos = s.find("<rect", pos)) != std::string::npos) {
        ++rects;
        pos += 5;
    }
    CHECK(rects == 1);
}

TEST_CASE("verify exits 3 when an invariant fails") {
    CliRunner r;
    // at p = 1 this interface function drives the boundary count past 2^d N
    const int code = r.run("verify --spec \"step:1,-0.5;0.3\" --d 2 --J 5 --k 1 --p 1 --q 2 --N 16 "
                           ">/dev/null 2>&1");
    CHECK(WEXITSTATUS(code) == 3);
}

TEST_CASE("config rejection exits with code 2") {
    CliRunner r;
    // q <= p violates the smoothness window
    const int code = r.run("sweep --spec const:1 --d 2 --J 4 --k 1 --p 2 --q 1.5 --N-list 4,8,16,32 "
                           ">/dev/null 2>&1");
    CHECK(WEXITSTATUS(code) == 2);
}
