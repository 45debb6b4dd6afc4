#include <catch2/catch_amalgamated.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pra/config.hpp"
#include "pra/csv.hpp"
#include "pra/manifest.hpp"

using namespace pra;

TEST_CASE("config parsing") {
    const Config c = Config::from_string(
        "# comment\n"
        "cell_radius_m = 250\n"
        "road_offsets_m = 50, 100, 150\n"
        "label = desk\n"
        "\n"
        "rate = 0.5\n");
    CHECK(c.get_double("cell_radius_m") == 250.0);
    CHECK(c.get_int("cell_radius_m") == 250);
    CHECK(c.get_list("road_offsets_m") == std::vector<double>{50.0, 100.0, 150.0});
    CHECK(c.get_string("label") == "desk");
    CHECK(c.get_double("rate") == 0.5);
    CHECK(c.get_double("missing", 7.0) == 7.0);
    CHECK_THROWS(c.get_double("missing"));
    CHECK_THROWS(c.get_double("label"));
    CHECK_THROWS(c.get_int("rate"));
}

TEST_CASE("config parse errors carry line numbers") {
    try {
        Config::from_string("a = 1\nbogus line\n");
        FAIL("expected ParseError");
    } catch (const Config::ParseError& e) {
        CHECK(e.line_no == 2);
    }
}

TEST_CASE("doubles round-trip through the CSV format") {
    for (double v : {0.1, 1.0 / 3.0, 2.5e-19, -7.25, 1e300, 0.0, 116.2740473e6}) {
        const std::string s = csv::format_double(v);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        CHECK(back == v);
    }
}

TEST_CASE("manifest hash is recomputable from the raw bytes") {
    const std::string bytes = "trials = 3\nseed = 9\n";
    const RunManifest a = RunManifest::for_config(bytes, 9);
    const RunManifest b = RunManifest::for_config(bytes, 9);
    CHECK(a.config_hash == b.config_hash);
    CHECK(a.config_hash.size() == 16);
    const RunManifest c = RunManifest::for_config(bytes + " ", 9);
    CHECK(a.config_hash != c.config_hash);
}

TEST_CASE("csv writer emits the expected bytes") {
    const auto path = std::filesystem::temp_directory_path() / "pra_test_out.csv";
    {
        csv::Writer w(path.string());
        w.header({"a", "b"});
        w.row({csv::Writer::cell(1), csv::Writer::cell(0.5)});
    }
    std::ifstream is(path);
    std::string all((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    CHECK(all == "a,b\n1,0.5\n");
    std::filesystem::remove(path);
}
