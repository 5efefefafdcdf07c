#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "wvsort/cli.hpp"
#include "wvsort/kv_config.hpp"

namespace fs = std::filesystem;
using namespace wvsort;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("wvsort_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct Result {
    int code;
    std::string out, err;
};

Result invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

fs::path write_config(const fs::path& dir, const std::string& extra, bool with_data = true) {
    const auto path = dir / "run.in.cfg";
    std::ofstream f(path);
    f << "seed = 4\nscenario.preset = easy\nscenario.window_len = 32\nscenario.window_stride = 16\n"
      << "model.blocks = 1\nmodel.kernel = 3\ntrain.epochs = 1\ntrain.batch_size = 8\n";
    if (with_data) f << "data.dir = " << (dir / "data").string() << '\n';
    f << extra;
    return path;
}

}  // namespace

TEST_CASE("synth writes streams and a manifest") {
    TempDir tmp("synth");
    const auto cfg = write_config(tmp.path, "");
    const auto r = invoke({"synth", "--config", cfg.string(), "--out", (tmp.path / "data").string()});
    REQUIRE(r.code == cli::kExitOk);
    CHECK(r.out.rfind("# wvsort 0.1.0 root_seed=4 config_hash=", 0) == 0);
    for (const char* name : {"train_0.pdw", "train_1.pdw", "train_2.pdw", "val.pdw", "test.pdw", "run.cfg"})
        CHECK(fs::exists(tmp.path / "data" / name));
    const auto manifest = KeyValueConfig::load(tmp.path / "data" / "manifest.txt");
    CHECK(manifest.require("command") == "synth");
    CHECK(manifest.require("root_seed") == "4");
    CHECK(manifest.require("artifacts") == "train_0.pdw,train_1.pdw,train_2.pdw,val.pdw,test.pdw");
    const auto run_cfg = KeyValueConfig::load(tmp.path / "data" / "run.cfg");
    std::ostringstream hash;
    hash << std::hex;
    hash.width(16);
    hash.fill('0');
    hash << run_cfg.hash();
    CHECK(manifest.require("config_hash") == hash.str());
}

TEST_CASE("train, eval and sweep through the command line") {
    TempDir tmp("train");
    const auto cfg = write_config(tmp.path, "").string();
    REQUIRE(invoke({"synth", "--config", cfg, "--out", (tmp.path / "data").string(), "-q"}).code == 0);
    const auto out = (tmp.path / "run").string();
    const auto r = invoke({"train", "--config", cfg, "--out", out});
    REQUIRE(r.code == 0);
    for (const char* name : {"model.wvck", "train_log.ndjson", "val_metrics.csv", "val_confusion.csv"})
        CHECK(fs::exists(fs::path(out) / name));
    const auto metrics = read_file(fs::path(out) / "val_metrics.csv");
    CHECK(metrics.find("# mode=wvembs\n") != std::string::npos);
    CHECK(metrics.find("# seed=4\n") != std::string::npos);
    CHECK(metrics.find("class,precision,recall,f1,support\n") != std::string::npos);

    const auto ck = (fs::path(out) / "model.wvck").string();
    const auto e = invoke({"eval", "--checkpoint", ck, "--config", cfg, "--out", (tmp.path / "eval").string()});
    REQUIRE(e.code == 0);
    CHECK(fs::exists(tmp.path / "eval" / "test_metrics.csv"));
    CHECK(fs::exists(tmp.path / "eval" / "test_confusion.csv"));

    const auto s = invoke({"sweep", "--checkpoint", ck, "--snr", "-10", "10", "--out", (tmp.path / "sweep").string()});
    REQUIRE(s.code == 0);
    const auto sweep = read_file(tmp.path / "sweep" / "sweep.csv");
    CHECK(sweep.rfind("snr_db,accuracy,macro_f1\n-10,", 0) == 0);
    CHECK(std::count(sweep.begin(), sweep.end(), '\n') == 3);

    const auto again = (tmp.path / "run2").string();
    REQUIRE(invoke({"train", "--config", cfg, "--out", again}).code == 0);
    for (const char* name : {"model.wvck", "train_log.ndjson", "val_metrics.csv", "manifest.txt"})
        CHECK(read_file(fs::path(out) / name) == read_file(fs::path(again) / name));
}

TEST_CASE("missing data.dir is a config error naming the key") {
    TempDir tmp("nodata");
    const auto cfg = write_config(tmp.path, "", false).string();
    const auto r = invoke({"train", "--config", cfg, "--out", (tmp.path / "o").string()});
    CHECK(r.code == cli::kExitData);
    CHECK(r.err.find("data.dir") != std::string::npos);
}

TEST_CASE("bad config values exit with the config code") {
    TempDir tmp("badcfg");
    const auto cfg = write_config(tmp.path, "train.epoch = 3\n").string();
    const auto r = invoke({"synth", "--config", cfg, "--out", (tmp.path / "o").string()});
    CHECK(r.code == cli::kExitData);
    CHECK(r.err.find("train.epoch") != std::string::npos);
    CHECK(invoke({"synth", "--config", (tmp.path / "absent.cfg").string()}).code == cli::kExitData);
}

TEST_CASE("diverging training exits with the numeric code") {
    TempDir tmp("diverge");
    const auto cfg = write_config(tmp.path, "train.lr = 1e300\n").string();
    REQUIRE(invoke({"synth", "--config", cfg, "--out", (tmp.path / "data").string()}).code == 0);
    const auto r = invoke({"train", "--config", cfg, "--out", (tmp.path / "o").string()});
    CHECK(r.code == cli::kExitNumeric);
    CHECK(r.err.find("non-finite") != std::string::npos);
}

TEST_CASE("inspect prints an embedding") {
    const auto r = invoke({"inspect", "--value", "2.5", "--dim", "8"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("-1 0 0.5 -0.5 0.05 -0.95 0.005 -0.995") != std::string::npos);
}

TEST_CASE("usage errors list the valid flags") {
    const auto r = invoke({"train", "--config", "x.cfg", "--bogus"});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("--bogus") != std::string::npos);
    CHECK(r.err.find("--mask-prob") != std::string::npos);
    CHECK(invoke({"frobnicate"}).code == cli::kExitUsage);
    CHECK(invoke({"train", "--mask-prob", "1.5", "--config", "x"}).code == cli::kExitUsage);
    CHECK(invoke({"train", "--mode", "cnn", "--config", "x"}).code == cli::kExitUsage);
    CHECK(invoke({"train"}).code == cli::kExitUsage);
    const auto h = invoke({"--help"});
    CHECK(h.code == 0);
    CHECK(h.out.find("synth") != std::string::npos);
}

TEST_CASE("every flag is documented in help") {
    const auto flags = cli::flag_registry();
    REQUIRE(flags.size() > 20);
    for (const auto& f : flags) {
        if (f.name == "--help") continue;
        INFO(f.subcommand << " " << f.name);
        CHECK(!f.description.empty());
        const auto help = cli::help_text(f.subcommand);
        CHECK(help.find(f.name) != std::string::npos);
        CHECK(help.find(f.description.substr(0, 20)) != std::string::npos);
    }
}
