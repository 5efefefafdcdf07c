#include "wvsort/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "wvsort/embedding.hpp"
#include "wvsort/error.hpp"
#include "wvsort/log.hpp"
#include "wvsort/masking.hpp"
#include "wvsort/metrics.hpp"
#include "wvsort/nn/checkpoint.hpp"
#include "wvsort/pdw_io.hpp"
#include "wvsort/pipeline.hpp"
#include "wvsort/seed.hpp"

namespace fs = std::filesystem;

namespace wvsort::cli {
namespace {

const std::vector<double> kDefaultSweep = {-20.0, -10.0, 0.0, 10.0, 20.0};

struct Options {
    std::vector<std::string> config;
    std::string out;
    std::string checkpoint;
    std::uint64_t seed = 0;
    std::vector<double> snr;
    double mask_prob = 0.0;
    std::string mask_fill;
    std::string mode;
    bool quiet = false;
    int verbose = 0;
    std::size_t runs = 3;
    std::size_t window = 0;
    double value = 0.0;
    double k = 10.0;
    std::size_t delta = 2;
    std::size_t dim = 8;
    std::string f_variant = "linear_periodic";

    CLI::Option* seed_opt = nullptr;
    CLI::Option* snr_opt = nullptr;
    CLI::Option* mask_prob_opt = nullptr;
    CLI::Option* value_opt = nullptr;
};

struct Command {
    std::unique_ptr<CLI::App> app;
    Options opts;
};

void add_common(CLI::App* sub, Options& o, bool config_required) {
    auto* c = sub->add_option("--config", o.config, "Run config file (key = value)")->expected(1);
    if (config_required) c->required();
    sub->add_option("--out", o.out, "Output directory");
    o.seed_opt = sub->add_option("--seed", o.seed, "Root seed; overrides `seed` in the config");
    sub->add_flag("-q,--quiet", o.quiet, "Suppress progress and warnings");
    sub->add_flag("-v,--verbose", o.verbose, "More output; repeat for per-epoch detail");
}

void add_training_flags(CLI::App* sub, Options& o) {
    o.mask_prob_opt = sub->add_option("--mask-prob", o.mask_prob, "Masking probability per (window, variable)")
                          ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--mask-fill", o.mask_fill, "Fill distribution of masked entries")
        ->check(CLI::IsMember({"uniform01", "uniform_pm1"}));
    sub->add_option("--mode", o.mode, "Embedding: wide-value (wvembs) or learned baseline (lembs)")
        ->check(CLI::IsMember({"wvembs", "lembs"}));
}

std::unique_ptr<Command> build() {
    auto cmd = std::make_unique<Command>();
    auto& o = cmd->opts;
    cmd->app = std::make_unique<CLI::App>("Radar pulse sorting with wide-value embeddings", "wvsort");
    auto& app = *cmd->app;
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", std::string(kToolVersion), "Print the tool version");

    auto* synth = app.add_subcommand("synth", "Synthesize single-emitter trains plus val/test streams");
    add_common(synth, o, true);
    o.snr_opt = synth->add_option("--snr", o.snr, "Evaluation SNR in dB for the val/test streams")->expected(1);

    auto* fit = app.add_subcommand("fit", "Fit the affine transform and mask spread distribution");
    add_common(fit, o, true);

    auto* embed = app.add_subcommand("embed", "Dump one embedded test window as CSV (l,n,d,value)");
    add_common(embed, o, true);
    add_training_flags(embed, o);
    embed->add_option("--window", o.window, "Index of the test-stream window to dump");

    auto* train = app.add_subcommand("train", "Train a token classifier and write its checkpoint");
    add_common(train, o, true);
    add_training_flags(train, o);

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a test stream");
    add_common(eval, o, false);
    eval->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
    eval->add_option("--snr", o.snr, "Regenerate the test stream at this SNR in dB instead of reading data.dir")
        ->expected(1);

    auto* sweep = app.add_subcommand("sweep", "Accuracy and macro-F1 of a checkpoint across SNRs");
    add_common(sweep, o, false);
    sweep->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
    sweep->add_option("--snr", o.snr, "SNR points in dB (default -20 -10 0 10 20)");

    auto* ablate = app.add_subcommand("ablate", "Train lembs / wvembs / wvembs+mask over several seeds");
    add_common(ablate, o, true);
    ablate->get_option("--config")->description("Run config file; repeat for several scenarios")->expected(1, 64);
    ablate->add_option("--runs", o.runs, "Seeds per variant (root, root+1, ...)")->check(CLI::PositiveNumber);
    ablate->add_option("--mask-prob", o.mask_prob, "Masking probability of the masked variant")
        ->check(CLI::Range(0.0, 1.0));
    ablate->add_option("--mask-fill", o.mask_fill, "Fill distribution of masked entries")
        ->check(CLI::IsMember({"uniform01", "uniform_pm1"}));

    auto* inspect = app.add_subcommand("inspect", "Print the embedding of one value, or a checkpoint summary");
    inspect->add_option("--value", o.value, "Transformed value to embed");
    inspect->add_option("--k", o.k, "Base k");
    inspect->add_option("--delta", o.delta, "Dimensions per group");
    inspect->add_option("--dim", o.dim, "Embedding width D");
    inspect->add_option("--f", o.f_variant, "Periodic function")->check(CLI::IsMember({"linear_periodic", "sinusoidal"}));
    inspect->add_option("--checkpoint", o.checkpoint, "Checkpoint to summarize instead");
    inspect->add_flag("-q,--quiet", o.quiet, "Suppress progress and warnings");
    inspect->add_flag("-v,--verbose", o.verbose, "More output");
    return cmd;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

KeyValueConfig load_config(const Options& o, std::size_t index = 0) {
    KeyValueConfig cfg;
    if (index < o.config.size()) cfg = KeyValueConfig::load(o.config[index]);
    if (o.mask_prob_opt && o.mask_prob_opt->count()) cfg.set("mask.prob", o.mask_prob);
    if (!o.mask_fill.empty()) cfg.set("mask.fill", o.mask_fill);
    if (!o.mode.empty()) cfg.set("model.mode", o.mode);
    return cfg;
}

std::optional<std::uint64_t> seed_override(const Options& o) {
    if (o.seed_opt && o.seed_opt->count()) return o.seed;
    return std::nullopt;
}

fs::path output_dir(const Options& o) {
    if (o.out.empty()) throw ConfigError("--out is required for this subcommand");
    fs::create_directories(o.out);
    return o.out;
}

void print_header(std::ostream& out, std::uint64_t root_seed, const KeyValueConfig& cfg) {
    out << "# " << kToolVersion << " root_seed=" << root_seed << " config_hash=" << hex64(cfg.hash()) << '\n';
}

/// `run.cfg` holds the effective config; `manifest.txt` ties artifacts to it.
void write_manifest(const fs::path& dir, const KeyValueConfig& run_cfg, std::uint64_t root_seed,
                    std::string_view command, const std::vector<std::string>& artifacts) {
    run_cfg.save(dir / "run.cfg");
    KeyValueConfig m;
    m.set("tool_version", std::string(kToolVersion));
    m.set("command", std::string(command));
    m.set("root_seed", std::to_string(root_seed));
    m.set("config_hash", hex64(run_cfg.hash()));
    std::string list;
    for (const auto& a : artifacts) list += (list.empty() ? "" : ",") + a;
    m.set("artifacts", list);
    m.save(dir / "manifest.txt");
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write `" + path.string() + "`");
    return f;
}

Dataset read_dataset(const KeyValueConfig& cfg, const ScenarioConfig& scenario) {
    const auto dir_value = cfg.get("data.dir");
    if (!dir_value) throw ConfigError("config key `data.dir` is required (directory written by `wvsort synth`)");
    const fs::path dir = *dir_value;
    if (!fs::is_directory(dir)) throw ConfigError("data.dir: `" + dir.string() + "` is not a directory");
    auto read = [&dir](const std::string& name) {
        const auto path = dir / name;
        if (!fs::exists(path)) throw ConfigError("data.dir: missing `" + path.string() + "`");
        return read_pdw(path);
    };
    Dataset ds;
    for (std::size_t c = 0; c < scenario.num_classes(); ++c) ds.single_trains.push_back(read("train_" + std::to_string(c) + ".pdw"));
    ds.val = read("val.pdw");
    ds.test = read("test.pdw");
    return ds;
}

void save_report(const fs::path& dir, const std::string& stem, const EvalReport& report) {
    auto m = open_out(dir / (stem + "_metrics.csv"));
    write_metrics_csv(m, report);
    auto c = open_out(dir / (stem + "_confusion.csv"));
    write_confusion_csv(c, report);
}

void add_report_metadata(EvalReport& report, const KeyValueConfig& cfg, std::uint64_t seed, const ExperimentConfig& ex) {
    report.metadata["config_hash"] = hex64(cfg.hash());
    report.metadata["seed"] = std::to_string(seed);
    report.metadata["tool_version"] = std::string(kToolVersion);
    report.metadata["mode"] = std::string(nn::to_string(ex.model.mode));
    report.metadata["epochs"] = std::to_string(ex.train.epochs);
    report.metadata["batch_size"] = std::to_string(ex.train.batch_size);
    report.metadata["patience"] = std::to_string(ex.train.patience);
    if (!report.metadata.count("snr_db")) report.metadata["snr_db"] = format_double(ex.scenario.eval_snr_db);
}

int cmd_synth(const Options& o, std::ostream& out) {
    auto cfg = load_config(o);
    auto ex = experiment_from_config(cfg, seed_override(o));
    if (o.snr_opt->count()) ex.scenario.eval_snr_db = o.snr.at(0);
    const auto run_cfg = ex.to_config();
    print_header(out, ex.seed, run_cfg);
    const auto dir = output_dir(o);
    const auto ds = synthesize(ex.scenario);
    std::vector<std::string> artifacts;
    for (std::size_t c = 0; c < ds.single_trains.size(); ++c) {
        const auto name = "train_" + std::to_string(c) + ".pdw";
        write_pdw(dir / name, ds.single_trains[c]);
        artifacts.push_back(name);
    }
    write_pdw(dir / "val.pdw", ds.val);
    write_pdw(dir / "test.pdw", ds.test);
    artifacts.insert(artifacts.end(), {"val.pdw", "test.pdw"});
    write_manifest(dir, run_cfg, ex.seed, "synth", artifacts);
    std::size_t train_pulses = 0;
    for (const auto& t : ds.single_trains) train_pulses += t.size();
    out << "scenario " << ex.scenario.name << ": " << ds.single_trains.size() << " emitters, " << train_pulses
        << " train pulses, " << ds.val.size() << " val, " << ds.test.size() << " test\n";
    return kExitOk;
}

int cmd_fit(const Options& o, std::ostream& out) {
    auto cfg = load_config(o);
    const auto ex = experiment_from_config(cfg, seed_override(o));
    const auto ds = read_dataset(cfg, ex.scenario);
    print_header(out, ex.seed, ex.to_config());
    const auto dir = output_dir(o);
    const auto prep = fit_preprocessor(ds, ex.scenario, ex.embed);
    KeyValueConfig fitted;
    embed_config_to(prep.embed, fitted);
    spreads_to_config(prep.spreads, fitted);
    fitted.save(dir / "preprocess.cfg");
    auto run_cfg = ex.to_config();
    run_cfg.set("data.dir", *cfg.get("data.dir"));
    write_manifest(dir, run_cfg, ex.seed, "fit", {"preprocess.cfg"});
    for (std::size_t n = 0; n < kNumVariables; ++n) {
        const auto& v = prep.embed.variables[n];
        out << kVariableNames[n] << ": a=" << format_double(v.a) << " b=" << format_double(v.b)
            << " spreads=" << prep.spreads.spreads[n].size() << '\n';
    }
    return kExitOk;
}

int cmd_embed(const Options& o, std::ostream& out) {
    auto cfg = load_config(o);
    const auto ex = experiment_from_config(cfg, seed_override(o));
    const auto ds = read_dataset(cfg, ex.scenario);
    const auto run_cfg = ex.to_config();
    print_header(out, ex.seed, run_cfg);
    const auto prep = fit_preprocessor(ds, ex.scenario, ex.embed);
    const auto windows = windowize(ds.test, ex.scenario.window_len, ex.scenario.window_len);
    if (o.window >= windows.size()) {
        throw ConfigError("--window " + std::to_string(o.window) + " out of range; test stream has " +
                          std::to_string(windows.size()) + " windows");
    }
    auto e = encode(windows[o.window], prep.embed);
    if (ex.mask.mask_prob > 0.0) {
        e = apply_mask(e, prep.spreads, prep.embed, ex.mask, derive_seed(ex.seed, "embed", o.window));
    }
    const auto dir = output_dir(o);
    auto f = open_out(dir / "embedding.csv");
    f << "l,n,d,value\n";
    for (std::size_t l = 0; l < e.length; ++l)
        for (std::size_t n = 0; n < kNumVariables; ++n)
            for (std::size_t d = 0; d < prep.embed.variables[n].dim; ++d)
                f << l << ',' << n << ',' << d << ',' << format_double(e.at(l, n, d)) << '\n';
    write_manifest(dir, run_cfg, ex.seed, "embed", {"embedding.csv"});
    return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
    auto cfg = load_config(o);
    const auto ex = experiment_from_config(cfg, seed_override(o));
    const auto ds = read_dataset(cfg, ex.scenario);
    const auto run_cfg = ex.to_config();
    print_header(out, ex.seed, run_cfg);
    const auto dir = output_dir(o);
    const auto prep = fit_preprocessor(ds, ex.scenario, ex.embed);
    nn::Model model(ex.model, derive_seed(ex.train.seed, "init"));
    auto log_file = open_out(dir / "train_log.ndjson");
    const auto result = train(model, ds, prep, ex, nullptr);
    write_log(log_file, result.log);
    nn::save_checkpoint(dir / "model.wvck", make_checkpoint(model, prep, ex));
    auto report = evaluate(model, prep, ds.val, ex.scenario.window_len);
    add_report_metadata(report, run_cfg, ex.seed, ex);
    save_report(dir, "val", report);
    write_manifest(dir, run_cfg, ex.seed, "train",
                   {"model.wvck", "train_log.ndjson", "val_metrics.csv", "val_confusion.csv"});
    out << "best epoch " << result.best_epoch << " of " << result.val_f1_per_epoch.size() << ", val macro-F1 "
        << format_double(result.best_val_f1) << '\n';
    return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
    const auto cp = nn::load_checkpoint(o.checkpoint);
    auto loaded = load_model(cp);
    auto& ex = loaded.config;
    const auto run_cfg = cp.config;
    print_header(out, ex.seed, run_cfg);
    PdwStream test;
    double snr = ex.scenario.eval_snr_db;
    if (!o.snr.empty()) {
        snr = o.snr.at(0);
        test = generate_eval_stream(ex.scenario, "test", snr);
    } else {
        auto cfg = load_config(o);
        test = read_dataset(cfg, ex.scenario).test;
    }
    auto report = evaluate(loaded.model, loaded.prep, test, ex.scenario.window_len);
    report.metadata["snr_db"] = format_double(snr);
    add_report_metadata(report, run_cfg, ex.seed, ex);
    const auto dir = output_dir(o);
    save_report(dir, "test", report);
    write_manifest(dir, run_cfg, ex.seed, "eval", {"test_metrics.csv", "test_confusion.csv"});
    out << "macro-F1 " << format_double(report.macro_f1) << " accuracy " << format_double(report.accuracy) << '\n';
    return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
    const auto cp = nn::load_checkpoint(o.checkpoint);
    auto loaded = load_model(cp);
    const auto& ex = loaded.config;
    print_header(out, ex.seed, cp.config);
    const auto& snrs = o.snr.empty() ? kDefaultSweep : o.snr;
    const auto reports = snr_sweep(loaded.model, loaded.prep, ex.scenario, snrs);
    const auto dir = output_dir(o);
    auto f = open_out(dir / "sweep.csv");
    write_sweep_csv(f, snrs, reports);
    write_sweep_csv(out, snrs, reports);
    write_manifest(dir, cp.config, ex.seed, "sweep", {"sweep.csv"});
    return kExitOk;
}

int cmd_ablate(const Options& o, std::ostream& out) {
    std::vector<KeyValueConfig> cfgs;
    for (std::size_t i = 0; i < o.config.size(); ++i) cfgs.push_back(load_config(o, i));
    const auto dir = output_dir(o);
    std::vector<AblationEntry> entries;
    std::vector<std::string> artifacts;
    KeyValueConfig combined;
    std::uint64_t root = 0;
    for (std::size_t s = 0; s < cfgs.size(); ++s) {
        const auto base0 = experiment_from_config(cfgs[s], seed_override(o));
        root = base0.seed;
        if (s == 0) print_header(out, root, base0.to_config());
        for (std::size_t r = 0; r < o.runs; ++r) {
            const std::uint64_t seed = base0.seed + r;
            const auto base = experiment_from_config(cfgs[s], seed);
            const auto ds = synthesize(base.scenario);
            const auto prep = fit_preprocessor(ds, base.scenario, base.embed);
            for (auto variant : kAblationVariants) {
                const auto ex = ablation_variant(base, variant);
                nn::Model model(ex.model, derive_seed(ex.train.seed, "init"));
                const auto result = train(model, ds, prep, ex);
                auto report = evaluate(model, prep, ds.test, ex.scenario.window_len);
                const auto stem = ex.scenario.name + "_" + std::string(to_string(variant)) + "_seed" + std::to_string(seed);
                nn::save_checkpoint(dir / (stem + ".wvck"), make_checkpoint(model, prep, ex));
                artifacts.push_back(stem + ".wvck");
                out << stem << " macro-F1 " << format_double(report.macro_f1) << '\n';
                entries.push_back({ex.scenario.name, variant, seed, std::move(report), result.val_f1_per_epoch});
            }
        }
        const auto prefixed = base0.to_config();
        for (const auto& [key, value] : prefixed.entries()) combined.set("run" + std::to_string(s) + "." + key, value);
    }
    auto table = open_out(dir / "ablation.csv");
    write_ablation_table(table, entries);
    auto raw = open_out(dir / "ablation_raw.csv");
    write_ablation_raw(raw, entries);
    artifacts.insert(artifacts.end(), {"ablation.csv", "ablation_raw.csv"});
    combined.set("runs", static_cast<std::int64_t>(o.runs));
    write_manifest(dir, combined, root, "ablate", artifacts);
    write_ablation_table(out, entries);
    return kExitOk;
}

int cmd_inspect(const Options& o, std::ostream& out) {
    if (!o.checkpoint.empty()) {
        const auto cp = nn::load_checkpoint(o.checkpoint);
        out << cp.config.to_string();
        for (const auto& [name, t] : cp.tensors) out << "# " << name << ' ' << nn::shape_string(t.shape()) << '\n';
        return kExitOk;
    }
    VariableEmbedding var;
    var.dim = o.dim;
    var.delta = o.delta;
    var.k = o.k;
    var.a = 1.0;
    var.b = 0.0;
    var.validate("inspect");
    std::vector<double> e(var.dim);
    encode_value(o.value, var, periodic_function_from_string(o.f_variant), e);
    out << std::setprecision(12);
    for (std::size_t d = 0; d < e.size(); ++d) out << (d ? " " : "") << (e[d] == 0.0 ? 0.0 : e[d]);
    out << '\n';
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    auto cmd = build();
    auto& app = *cmd->app;
    const auto& o = cmd->opts;
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        const auto parsed = app.get_subcommands();
        err << (parsed.empty() ? app.help() : parsed.back()->help());
        return kExitUsage;
    }
    const int saved_verbosity = log::verbosity();
    log::verbosity() = o.quiet ? 0 : 1 + o.verbose;
    int status = kExitOk;
    try {
        const auto* sub = app.get_subcommands().front();
        const auto& name = sub->get_name();
        if (name == "synth") status = cmd_synth(o, out);
        else if (name == "fit") status = cmd_fit(o, out);
        else if (name == "embed") status = cmd_embed(o, out);
        else if (name == "train") status = cmd_train(o, out);
        else if (name == "eval") status = cmd_eval(o, out);
        else if (name == "sweep") status = cmd_sweep(o, out);
        else if (name == "ablate") status = cmd_ablate(o, out);
        else status = cmd_inspect(o, out);
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        status = kExitNumeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        status = kExitData;
    }
    log::verbosity() = saved_verbosity;
    return status;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

std::vector<FlagInfo> flag_registry() {
    auto cmd = build();
    std::vector<FlagInfo> flags;
    auto collect = [&flags](const CLI::App* app, const std::string& sub) {
        for (const auto* opt : app->get_options()) {
            std::string name = opt->get_name(false, true);
            const auto& longs = opt->get_lnames();
            if (!longs.empty()) name = "--" + longs.front();
            flags.push_back({sub, name, opt->get_description()});
        }
    };
    collect(cmd->app.get(), "");
    for (const auto* sub : cmd->app->get_subcommands({})) collect(sub, sub->get_name());
    return flags;
}

std::string help_text(std::string_view subcommand) {
    auto cmd = build();
    if (subcommand.empty()) return cmd->app->help();
    return cmd->app->get_subcommand(std::string(subcommand))->help();
}

}  // namespace wvsort::cli
