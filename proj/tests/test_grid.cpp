#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

#include "nterm/grid.hpp"

using namespace nterm;

TEST_CASE("generator sampling at cell centers") {
    SECTION("1 + 2x on four cells") {
        auto f = make_function("poly:1 + 2*x1", 1, 2);
        REQUIRE(f.values.size() == 4);
        CHECK(f.values[0] == Catch::Approx(1.25).margin(1e-15));
        CHECK(f.values[1] == Catch::Approx(1.75).margin(1e-15));
        CHECK(f.values[2] == Catch::Approx(2.25).margin(1e-15));
        CHECK(f.values[3] == Catch::Approx(2.75).margin(1e-15));
    }
    SECTION("constants") {
        for (int d : {1, 2, 3}) {
            auto f = make_function("const:0.7", d, 2);
            for (double v : f.values) CHECK(v == 0.7);
        }
    }
    SECTION("poly with cross terms") {
        auto f = make_function("poly:0.5*x1*x2^2", 2, 1);
        // cell centers 0.25/0.75 each axis
        CHECK(f.values[0] == Catch::Approx(0.5 * 0.25 * 0.25 * 0.25));
        CHECK(f.values[3] == Catch::Approx(0.5 * 0.75 * 0.75 * 0.75));
    }
    SECTION("radial indicator is 0/1") {
        auto f = make_function("radial:0.5,0.5;0.3", 2, 4);
        for (double v : f.values) CHECK((v == 0.0 || v == 1.0));
        double mass = 0;
        for (double v : f.values) mass += v * f.cell_volume();
        CHECK(mass == Catch::Approx(M_PI * 0.09).margin(0.02));
    }
}

TEST_CASE("pgm ingestion") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "nterm_grid_test";
    fs::create_directories(dir);
    SECTION("full scale maps to 1.0") {
        auto path = (dir / "white.pgm").string();
        std::ofstream out(path);
        out << "P2\n4 4\n255\n";
        for (int i = 0; i < 16; ++i) out << 255 << "\n";
        out.close();
        auto f = make_function("pgm:" + path, 2, 2);
        for (double v : f.values) CHECK(v == 1.0);
    }
    SECTION("wrong dimension rejected") {
        auto path = (dir / "white.pgm").string();
        CHECK_THROWS_AS(make_function("pgm:" + path, 3, 2), DimensionMismatch);
    }
    SECTION("non power of two side rejected") {
        auto path = (dir / "odd.pgm").string();
        std::ofstream out(path);
        out << "P2\n3 3\n255\n";
        for (int i = 0; i < 9; ++i) out << 1 << "\n";
        out.close();
        CHECK_THROWS_AS(make_function("pgm:" + path, 2, 2), DimensionMismatch);
    }
    SECTION("binary P5 with comments") {
        auto path = (dir / "bin.pgm").string();
        std::ofstream out(path, std::ios::binary);
        out << "P5\n# a comment\n4 4\n255\n";
        for (int i = 0; i < 16; ++i) out.put((char)(unsigned char)(i * 17));
        out.close();
        auto f = make_function("pgm:" + path, 2, 2);
        CHECK(f.values[0] == 0.0);
        CHECK(f.values[15] == Catch::Approx(255.0 / 255.0));
        CHECK(f.values[5] == Catch::Approx(85.0 / 255.0));
    }
}

TEST_CASE("bad descriptors are rejected") {
    CHECK_THROWS_AS(make_function("nope:1", 2, 3), BadFormat);
    CHECK_THROWS_AS(make_function("radial:0.5;0.3", 2, 3), DimensionMismatch);
    CHECK_THROWS_AS(make_function("poly:x3", 2, 3), BadFormat);
    CHECK_THROWS_AS(NormExponent(0.5), std::invalid_argument);
}

TEST_CASE("csv round trip") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "nterm_grid_test";
    fs::create_directories(dir);
    auto f = make_function("sin:1,2", 2, 3);
    auto path = (dir / "grid.csv").string();
    write_csv_grid(f, path);
    auto g = make_function("csv:" + path, 2, 3);
    REQUIRE(g.values.size() == f.values.size());
    for (std::size_t i = 0; i < f.values.size(); ++i)
        CHECK(g.values[i] == Catch::Approx(f.values[i]).margin(1e-11));
}

TEST_CASE("lq_norm") {
    SECTION("normalization on the unit cube") {
        auto f = make_function("const:1", 2, 3);
        CHECK(lq_norm_full(f, NormExponent(2.0)) == Catch::Approx(1.0).margin(1e-14));
    }
    SECTION("single level-1 cell has measure 1/4 in L1, d=2") {
        auto f = make_function("const:1", 2, 3);
        auto cell = DyadicCube(2, 1, {0, 1});
        CHECK(lq_norm(f, DyadicSet::cube(cell), NormExponent(1.0)) == Catch::Approx(0.25).margin(1e-14));
    }
    SECTION("max norm") {
        GridFunction f;
        f.dim = 1;
        f.J = 2;
        f.values = {0, 1, 0, 1};
        CHECK(lq_norm_full(f, NormExponent::inf()) == 1.0);
    }
    SECTION("monotone in the set") {
        auto f = make_function("sin:1,1", 2, 4);
        auto root = DyadicCube::root(2);
        for (auto& s : sons(root)) {
            CHECK(lq_norm(f, DyadicSet::cube(s), NormExponent(2.0)) <=
                  lq_norm_full(f, NormExponent(2.0)) + 1e-15);
        }
    }
    SECTION("monotone in q on a normalized set (Jensen)") {
        auto f = make_function("sin:1,1", 2, 4);
        auto full = DyadicSet::cube(DyadicCube::root(2));
        double n1 = lq_norm(f, full, NormExponent(1.0));
        double n15 = lq_norm(f, full, NormExponent(1.5));
        double n2 = lq_norm(f, full, NormExponent(2.0));
        double ninf = lq_norm(f, full, NormExponent::inf());
        CHECK(n1 <= n15 + 1e-14);
        CHECK(n15 <= n2 + 1e-14);
        CHECK(n2 <= ninf + 1e-14);
    }
}

TEST_CASE("mollify") {
    SECTION("constants are fixed points") {
        auto f = make_function("const:0.4", 2, 4);
        auto g = mollify(f, 2.0 / 16.0);
        for (std::size_t i = 0; i < f.values.size(); ++i)
            CHECK(g.values[i] == Catch::Approx(0.4).margin(1e-13));
    }
    SECTION("spike: nonnegative, mass preserved") {
        GridFunction f;
        f.dim = 1;
        f.J = 4;
        f.values.assign(16, 0.0);
        f.values[7] = 1.0;
        auto g = mollify(f, 2.0 / 16.0);
        double mass_in = 0, mass_out = 0;
        for (double v : f.values) mass_in += v * f.cell_volume();
        for (double v : g.values) {
            CHECK(v >= -1e-15);
            mass_out += v * g.cell_volume();
        }
        CHECK(mass_out == Catch::Approx(mass_in).margin(1e-12));
    }
    SECTION("smoothing error decreases as eps halves") {
        auto f = make_function("sin:1,1", 2, 6);
        double prev = std::numeric_limits<double>::infinity();
        for (int m : {4, 2, 1}) {
            auto g = mollify(f, m * std::ldexp(1.0, -6));
            GridFunction diff = f;
            for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] -= g.values[i];
            double err = lq_norm_full(diff, NormExponent(2.0));
            CHECK(err < prev);
            prev = err;
        }
    }
    SECTION("eps below the grid is rejected") {
        auto f = make_function("const:1", 1, 3);
        CHECK_THROWS_AS(mollify(f, 1.0 / 32.0), ScaleTooFine);
    }
}
