#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "wvsort/error.hpp"
#include "wvsort/pdw_io.hpp"

using namespace wvsort;

namespace {

PdwStream random_records(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1e4, 1e4);
    PdwStream s;
    double toa = 0;
    for (std::size_t i = 0; i < n; ++i) {
        toa += std::fabs(u(rng));
        s.push_back({toa, u(rng), std::fabs(u(rng)) + 1e-3, u(rng), std::fmod(std::fabs(u(rng)), 360.0),
                     static_cast<Label>(i % 7)});
    }
    return s;
}

}  // namespace

TEST_CASE("binary round trip is bit exact and re-writes identical bytes") {
    const auto s = random_records(1000, 1);
    std::stringstream a;
    write_pdw_binary(a, s);
    const auto bytes = a.str();
    CHECK(bytes.substr(0, 4) == "PDW1");
    CHECK(bytes.size() == 8 + 1000 * (5 * 8 + 2));
    std::stringstream in(bytes);
    const auto back = read_pdw_binary(in);
    CHECK(back == s);
    std::stringstream b;
    write_pdw_binary(b, back);
    CHECK(b.str() == bytes);
}

TEST_CASE("binary reader rejects bad magic and truncation") {
    std::stringstream bad("XXXX\0\0\0\0");
    CHECK_THROWS_AS(read_pdw_binary(bad), FormatError);
    std::stringstream full;
    write_pdw_binary(full, random_records(3, 2));
    std::stringstream cut(full.str().substr(0, 30));
    CHECK_THROWS_AS(read_pdw_binary(cut), FormatError);
}

TEST_CASE("csv round trip keeps values to 9 significant digits") {
    const auto s = random_records(500, 3);
    std::stringstream out;
    write_pdw_csv(out, s);
    CHECK(out.str().rfind(std::string(kCsvHeader) + "\n", 0) == 0);
    const auto back = read_pdw_csv(out);
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t n = 0; n < kNumVariables; ++n) {
            REQUIRE(back[i].feature(n) == Catch::Approx(s[i].feature(n)).epsilon(1e-9));
        }
        REQUIRE(back[i].label == s[i].label);
    }
}

TEST_CASE("csv accepts any column order") {
    std::stringstream in("label,doa_deg,pa_dbm,pw_us,rf_mhz,toa_us\n3,10,-50,1.5,9000,12.5\n");
    const auto s = read_pdw_csv(in);
    REQUIRE(s.size() == 1);
    CHECK(s[0].toa == 12.5);
    CHECK(s[0].rf == 9000);
    CHECK(s[0].label == 3);
}

TEST_CASE("csv errors: missing column, unknown column, malformed row") {
    std::stringstream missing("toa_us,rf_mhz,pw_us,pa_dbm,label\n1,2,3,4,0\n");
    CHECK_THROWS_WITH(read_pdw_csv(missing), Catch::Matchers::ContainsSubstring("missing column `doa"));
    std::stringstream unknown("toa_us,rf_mhz,pw_us,pa_dbm,doa_deg,label,extra\n");
    CHECK_THROWS_WITH(read_pdw_csv(unknown), Catch::Matchers::ContainsSubstring(std::string(kCsvHeader)));
    std::stringstream bad(std::string(kCsvHeader) + "\n1,2,3,4,5,0\n1,2,x,4,5,0\n");
    CHECK_THROWS_WITH(read_pdw_csv(bad, "f.csv"), Catch::Matchers::ContainsSubstring("3"));
    std::stringstream few(std::string(kCsvHeader) + "\n1,2,3\n");
    CHECK_THROWS_AS(read_pdw_csv(few), FormatError);
}

TEST_CASE("empty file is an empty stream") {
    std::stringstream empty("");
    CHECK(read_pdw_csv(empty).empty());
    const auto path = std::filesystem::temp_directory_path() / "wvsort_empty_test.csv";
    { std::ofstream f(path); }
    CHECK(read_pdw(path).empty());
    std::filesystem::remove(path);
}

TEST_CASE("path dispatch on extension") {
    const auto s = random_records(20, 4);
    const auto dir = std::filesystem::temp_directory_path();
    write_pdw(dir / "wvsort_io_test.csv", s);
    write_pdw(dir / "wvsort_io_test.pdw", s);
    CHECK(read_pdw(dir / "wvsort_io_test.pdw") == s);
    CHECK(read_pdw(dir / "wvsort_io_test.csv").size() == 20);
    std::filesystem::remove(dir / "wvsort_io_test.csv");
    std::filesystem::remove(dir / "wvsort_io_test.pdw");
    CHECK_THROWS(read_pdw(dir / "wvsort_definitely_missing.pdw"));
}
