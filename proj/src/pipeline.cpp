#include "wvsort/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "wvsort/error.hpp"
#include "wvsort/log.hpp"
#include "wvsort/nn/ops.hpp"
#include "wvsort/nn/optim.hpp"
#include "wvsort/seed.hpp"

namespace wvsort {
namespace {

constexpr std::size_t kEvalBatch = 32;

const std::set<std::string> kKnownKeys = {
    "seed",
    "data.dir",
    "scenario.preset",
    "scenario.name",
    "scenario.emitter_count",
    "scenario.drop_prob",
    "scenario.snr_db",
    "scenario.eval_snr_db",
    "scenario.noise.toa_us",
    "scenario.noise.rf_mhz",
    "scenario.noise.pw_us",
    "scenario.noise.doa_deg",
    "scenario.window_len",
    "scenario.window_stride",
    "scenario.eval_fraction",
    "scenario.intercept_min_fraction",
    "scenario.seed",
    "embed.D",
    "embed.delta",
    "embed.k",
    "embed.f_variant",
    "mask.prob",
    "mask.fill",
    "model.blocks",
    "model.kernel",
    "model.ffn_mult",
    "model.dropout",
    "model.mode",
    "model.lembs_dim",
    "model.embed_dim",
    "model.classes",
    "train.epochs",
    "train.batch_size",
    "train.lr",
    "train.weight_decay",
    "train.patience",
    "train.seed",
};

bool known_key(const std::string& key) {
    if (kKnownKeys.count(key)) return true;
    if (key.rfind("scenario.emitter.", 0) == 0) {
        static const std::set<std::string> fields = {"doa_deg", "pw_us",       "rf_mhz",     "pri_us",
                                                     "pa_dbm",  "pri_pattern", "stagger_us", "pulse_count"};
        const auto dot = key.rfind('.');
        return fields.count(key.substr(dot + 1)) != 0;
    }
    if (key.rfind("embed.", 0) == 0 || key.rfind("spreads.", 0) == 0) {
        for (auto name : kVariableNames) {
            const std::string p1 = "embed." + std::string(name) + ".";
            const std::string p2 = "spreads." + std::string(name);
            if (key.rfind(p1, 0) == 0) {
                static const std::set<std::string> fields = {"D", "delta", "k", "a", "b"};
                return fields.count(key.substr(p1.size())) != 0;
            }
            if (key == p2 || key == p2 + ".a") return true;
        }
    }
    return false;
}

void check_known_keys(const KeyValueConfig& cfg) {
    for (const auto& [key, value] : cfg.entries()) {
        if (!known_key(key)) throw ConfigError("unknown config key `" + key + "`");
    }
}

std::size_t positive_size(const KeyValueConfig& cfg, const char* key, std::size_t fallback) {
    const auto v = cfg.get_int(key, static_cast<std::int64_t>(fallback));
    if (v <= 0) throw ConfigError(std::string("config key `") + key + "` must be positive");
    return static_cast<std::size_t>(v);
}

std::vector<nn::NamedTensor> deep_copy(const std::vector<nn::NamedTensor>& state) {
    std::vector<nn::NamedTensor> out;
    out.reserve(state.size());
    for (const auto& [name, t] : state) {
        out.emplace_back(name, nn::Tensor::from(t.shape(), std::vector<double>(t.data().begin(), t.data().end())));
    }
    return out;
}

std::uint64_t digest_windows(const std::vector<PdwWindow>& windows) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix = [&h](const void* data, std::size_t bytes) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < bytes; ++i) {
            h ^= p[i];
            h *= 0x100000001B3ULL;
        }
    };
    for (const auto& w : windows) {
        mix(w.features.data(), w.features.size() * sizeof(double));
        mix(w.labels.data(), w.labels.size() * sizeof(Label));
    }
    return h;
}

// Activations are a few MB each and are freed every step. With glibc's
// defaults they bounce between mmap and heap trimming, and the page faults
// cost about a third of the wall time.
void keep_heap_resident() {
#if defined(__GLIBC__)
    static const bool once = [] {
        mallopt(M_MMAP_THRESHOLD, 1 << 30);
        mallopt(M_TRIM_THRESHOLD, 1 << 30);
        return true;
    }();
    (void)once;
#endif
}

std::string tag_with(std::string_view tag, std::string_view suffix) {
    std::string s(tag);
    s += '/';
    s += suffix;
    return s;
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs == 0) throw ConfigError("train.epochs must be positive");
    if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
    if (!(lr > 0.0)) throw ConfigError("train.lr must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be >= 0");
    if (patience == 0) throw ConfigError("train.patience must be positive");
}

KeyValueConfig ExperimentConfig::to_config() const {
    KeyValueConfig cfg;
    cfg.set("seed", std::to_string(seed));
    scenario_to_config(scenario, cfg);
    embed_config_to(embed, cfg);
    nn::model_config_to(model, cfg);
    cfg.set("train.epochs", static_cast<std::int64_t>(train.epochs));
    cfg.set("train.batch_size", static_cast<std::int64_t>(train.batch_size));
    cfg.set("train.lr", train.lr);
    cfg.set("train.weight_decay", train.weight_decay);
    cfg.set("train.patience", static_cast<std::int64_t>(train.patience));
    cfg.set("train.seed", std::to_string(train.seed));
    mask_config_to(mask, cfg);
    return cfg;
}

ExperimentConfig experiment_from_config(const KeyValueConfig& cfg, std::optional<std::uint64_t> seed_override) {
    check_known_keys(cfg);
    ExperimentConfig ex;
    ex.seed = seed_override ? *seed_override : cfg.get_uint("seed", 1);
    ex.scenario = scenario_from_config(cfg);
    if (seed_override || !cfg.contains("scenario.seed")) ex.scenario.seed = derive_seed(ex.seed, "scenario");
    ex.embed = embed_config_from(cfg);
    ex.mask = mask_config_from(cfg);
    ex.train.epochs = positive_size(cfg, "train.epochs", ex.train.epochs);
    ex.train.batch_size = positive_size(cfg, "train.batch_size", ex.train.batch_size);
    ex.train.lr = cfg.get_double("train.lr", ex.train.lr);
    ex.train.weight_decay = cfg.get_double("train.weight_decay", ex.train.weight_decay);
    ex.train.patience = positive_size(cfg, "train.patience", ex.train.patience);
    ex.train.seed = (seed_override || !cfg.contains("train.seed")) ? derive_seed(ex.seed, "train")
                                                                   : cfg.get_uint("train.seed", 0);
    ex.train.validate();
    ex.model = nn::model_config_from(cfg, ex.scenario.num_classes(), ex.embed.max_dim());
    return ex;
}

PdwStream generate_eval_stream(const ScenarioConfig& scenario, std::string_view tag, double snr_db) {
    scenario.validate();
    std::vector<PdwStream> trains;
    for (const auto& emitter : scenario.emitters) {
        EmitterSpec spec = emitter;
        spec.pulse_count = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(static_cast<double>(emitter.pulse_count) * scenario.eval_fraction)));
        std::mt19937_64 rng(derive_seed(scenario.seed, tag_with(tag, "start"), spec.id));
        const double t0 = std::uniform_real_distribution<double>(0.0, spec.pri_us.hi)(rng);
        trains.push_back(generate_train(spec, t0, derive_seed(scenario.seed, tag, spec.id)));
    }
    return apply_nonideal(interleave(trains), scenario.drop_prob, snr_db, scenario.noise,
                          derive_seed(scenario.seed, tag_with(tag, "nonideal")));
}

Dataset synthesize(const ScenarioConfig& scenario) {
    scenario.validate();
    Dataset ds;
    for (const auto& emitter : scenario.emitters) {
        ds.single_trains.push_back(generate_train(emitter, 0.0, derive_seed(scenario.seed, "train", emitter.id)));
    }
    ds.val = generate_eval_stream(scenario, "val", scenario.eval_snr_db);
    ds.test = generate_eval_stream(scenario, "test", scenario.eval_snr_db);
    return ds;
}

std::vector<PdwWindow> training_mixture(const std::vector<PdwStream>& single_trains, const ScenarioConfig& scenario,
                                        std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<PdwStream> pieces;
    for (const auto& train : single_trains) {
        if (train.empty()) continue;
        const std::size_t n = train.size();
        const double fraction = scenario.intercept_min_fraction + (1.0 - scenario.intercept_min_fraction) * unit(rng);
        const std::size_t count =
            std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))), 1, n);
        const std::size_t start = std::uniform_int_distribution<std::size_t>(0, n - count)(rng);
        PdwStream piece(train.begin() + static_cast<std::ptrdiff_t>(start),
                        train.begin() + static_cast<std::ptrdiff_t>(start + count));
        const double span = piece.back().toa - piece.front().toa;
        const double offset = 0.25 * span * unit(rng);
        const double origin = piece.front().toa;
        for (auto& rec : piece) rec.toa = rec.toa - origin + offset;
        pieces.push_back(std::move(piece));
    }
    const double snr = scenario.snr_db[std::uniform_int_distribution<std::size_t>(0, scenario.snr_db.size() - 1)(rng)];
    const auto stream = apply_nonideal(interleave(pieces), scenario.drop_prob, snr, scenario.noise, rng());
    return windowize(stream, scenario.window_len, scenario.window_stride);
}

std::vector<PdwStream> single_class_chunks(const std::vector<PdwStream>& single_trains, std::size_t chunk_len) {
    std::vector<PdwStream> chunks;
    for (const auto& train : single_trains) {
        if (train.size() <= chunk_len) {
            if (!train.empty()) chunks.push_back(train);
            continue;
        }
        for (std::size_t begin = 0; begin + chunk_len <= train.size(); begin += chunk_len) {
            chunks.emplace_back(train.begin() + static_cast<std::ptrdiff_t>(begin),
                                train.begin() + static_cast<std::ptrdiff_t>(begin + chunk_len));
        }
    }
    return chunks;
}

Preprocessor fit_preprocessor(const Dataset& dataset, const ScenarioConfig& scenario, const EmbedConfig& skeleton) {
    Preprocessor prep;
    const auto corpus = training_mixture(dataset.single_trains, scenario, derive_seed(scenario.seed, "fit"));
    prep.embed = fit_affine(corpus, skeleton);
    prep.spreads = estimate_spreads(single_class_chunks(dataset.single_trains, scenario.window_len), prep.embed);
    return prep;
}

nn::Tensor build_input(std::span<const PdwWindow* const> windows, nn::EmbeddingMode mode, const Preprocessor& prep,
                       std::optional<MaskPlan> mask) {
    if (windows.empty()) throw PreconditionError("build_input: empty batch");
    const std::size_t batch = windows.size();
    const std::size_t length = windows.front()->length;
    for (const auto* w : windows) {
        if (w->length != length) throw PreconditionError("build_input: windows differ in length");
    }
    if (mode == nn::EmbeddingMode::lembs) {
        std::vector<double> values;
        values.reserve(batch * length * kNumVariables);
        for (const auto* w : windows) values.insert(values.end(), w->features.begin(), w->features.end());
        return nn::Tensor::from({batch, length, kNumVariables}, std::move(values));
    }
    const std::size_t dim = prep.embed.max_dim();
    std::vector<double> values;
    values.reserve(batch * length * kNumVariables * dim);
    for (std::size_t b = 0; b < batch; ++b) {
        EmbeddedWindow e = encode(*windows[b], prep.embed);
        if (mask && mask->config && mask->config->mask_prob > 0.0) {
            e = apply_mask(e, prep.spreads, prep.embed, *mask->config,
                           derive_seed(mask->seed, "window", mask->first_window_index + b));
        }
        values.insert(values.end(), e.values.begin(), e.values.end());
    }
    return nn::Tensor::from({batch, length, kNumVariables, dim}, std::move(values));
}

void write_log(std::ostream& out, std::span<const LogRecord> records) {
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["step"] = r.step;
        j["epoch"] = r.epoch;
        j["loss"] = r.loss;
        j["lr"] = r.lr;
        j["grad_norm"] = r.grad_norm;
        j["val_f1"] = r.val_f1 ? nlohmann::ordered_json(*r.val_f1) : nlohmann::ordered_json(nullptr);
        out << j.dump() << '\n';
    }
}

TrainResult train(nn::Model& model, const Dataset& dataset, const Preprocessor& prep, const ExperimentConfig& config,
                  std::ostream* log_stream) {
    config.train.validate();
    keep_heap_resident();
    const auto& tc = config.train;
    const auto& scenario = config.scenario;
    const auto mode = model.config().mode;
    const bool masking = mode == nn::EmbeddingMode::wvembs && config.mask.mask_prob > 0.0;

    auto params = model.parameter_tensors();
    nn::AdamW optimizer(params, {.lr = tc.lr, .weight_decay = tc.weight_decay});
    std::mt19937_64 dropout_rng(derive_seed(tc.seed, "dropout"));
    const std::uint64_t mask_seed = derive_seed(tc.seed, "mask");

    TrainResult result;
    result.best_val_f1 = -1.0;
    std::uint64_t step = 0;
    std::uint64_t window_counter = 0;
    std::size_t since_best = 0;
    double last_grad_norm = 0.0;

    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        const auto windows = training_mixture(dataset.single_trains, scenario, derive_seed(tc.seed, "data", epoch));
        result.epoch_data_digest.push_back(digest_windows(windows));
        std::vector<std::size_t> order(windows.size());
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 shuffle_rng(derive_seed(tc.seed, "shuffle", epoch));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_loss = 0.0;
        std::size_t epoch_batches = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += tc.batch_size) {
            const std::size_t end = std::min(order.size(), begin + tc.batch_size);
            std::vector<const PdwWindow*> batch;
            std::vector<Label> labels;
            for (std::size_t i = begin; i < end; ++i) {
                batch.push_back(&windows[order[i]]);
                labels.insert(labels.end(), windows[order[i]].labels.begin(), windows[order[i]].labels.end());
            }
            std::optional<MaskPlan> plan;
            if (masking) plan = MaskPlan{&config.mask, mask_seed, window_counter};
            window_counter += batch.size();

            const auto input = build_input(batch, mode, prep, plan);
            optimizer.zero_grad();
            auto loss = nn::cross_entropy_logits(model.logits(input, nn::Mode::train, &dropout_rng), labels);
            if (!std::isfinite(loss.item())) {
                std::ostringstream msg;
                msg << "training diverged at step " << step + 1 << " (epoch " << epoch << "): loss is non-finite; "
                    << "gradient norm at the previous step was " << last_grad_norm;
                throw NumericError(msg.str());
            }
            loss.backward();
            const double gnorm = nn::grad_norm(params);
            if (!std::isfinite(gnorm)) {
                std::ostringstream msg;
                msg << "training diverged at step " << step + 1 << " (epoch " << epoch
                    << "): gradient norm is non-finite; previous step's norm was " << last_grad_norm;
                throw NumericError(msg.str());
            }
            optimizer.step();
            ++step;
            last_grad_norm = gnorm;
            epoch_loss += loss.item();
            ++epoch_batches;
            result.log.push_back({step, epoch, loss.item(), tc.lr, gnorm, std::nullopt});
        }

        const auto val = evaluate(model, prep, dataset.val, scenario.window_len);
        result.val_f1_per_epoch.push_back(val.macro_f1);
        result.log.push_back(
            {step, epoch, epoch_loss / static_cast<double>(std::max<std::size_t>(1, epoch_batches)), tc.lr,
             last_grad_norm, val.macro_f1});
        if (log_stream) write_log(*log_stream, std::span<const LogRecord>(&result.log.back(), 1));
        {
            std::ostringstream msg;
            msg << "epoch " << epoch << " loss " << result.log.back().loss << " val_f1 " << val.macro_f1;
            log::debug(msg.str());
        }

        if (val.macro_f1 > result.best_val_f1) {
            result.best_val_f1 = val.macro_f1;
            result.best_epoch = epoch;
            result.best_state = deep_copy(model.state());
            since_best = 0;
        } else if (++since_best >= tc.patience) {
            break;
        }
    }
    model.load_state(result.best_state);
    return result;
}

TokenPredictions predict_stream(nn::Model& model, const Preprocessor& prep, const PdwStream& stream,
                                std::size_t window_len) {
    const auto windows = windowize(stream, window_len, window_len);
    TokenPredictions out;
    const std::size_t classes = model.config().classes;
    for (std::size_t begin = 0; begin < windows.size(); begin += kEvalBatch) {
        const std::size_t end = std::min(windows.size(), begin + kEvalBatch);
        std::vector<const PdwWindow*> batch;
        for (std::size_t i = begin; i < end; ++i) {
            batch.push_back(&windows[i]);
            out.labels.insert(out.labels.end(), windows[i].labels.begin(), windows[i].labels.end());
        }
        const auto logits = model.logits(build_input(batch, model.config().mode, prep), nn::Mode::eval, nullptr);
        const auto values = logits.data();
        for (std::size_t r = 0; r < logits.dim(0); ++r) {
            const double* row = values.data() + r * classes;
            out.predicted.push_back(static_cast<Label>(std::max_element(row, row + classes) - row));
        }
    }
    return out;
}

EvalReport evaluate(nn::Model& model, const Preprocessor& prep, const PdwStream& stream, std::size_t window_len) {
    for (const auto& rec : stream) {
        if (rec.label >= model.config().classes) {
            throw ConfigError("evaluate: stream holds class " + std::to_string(rec.label) + " but the model has " +
                              std::to_string(model.config().classes) + " classes");
        }
    }
    const auto preds = predict_stream(model, prep, stream, window_len);
    return compute_report(preds.labels, preds.predicted, model.config().classes);
}

nn::Checkpoint make_checkpoint(const nn::Model& model, const Preprocessor& prep, const ExperimentConfig& config) {
    nn::Checkpoint cp;
    ExperimentConfig ex = config;
    ex.model = model.config();
    ex.embed = prep.embed;
    cp.config = ex.to_config();
    spreads_to_config(prep.spreads, cp.config);
    cp.tensors = deep_copy(model.state());
    return cp;
}

LoadedModel load_model(const nn::Checkpoint& checkpoint) {
    const auto& cfg = checkpoint.config;
    ExperimentConfig ex = experiment_from_config(cfg);
    Preprocessor prep{ex.embed, spreads_from_config(cfg)};
    const auto classes = static_cast<std::size_t>(cfg.get_int("model.classes", static_cast<std::int64_t>(ex.model.classes)));
    if (classes != ex.scenario.num_classes()) throw ConfigError("checkpoint: class count does not match its scenario");
    LoadedModel loaded{nn::Model(ex.model, 0), std::move(prep), ex};
    loaded.model.load_state(checkpoint.tensors);
    return loaded;
}

std::vector<EvalReport> snr_sweep(nn::Model& model, const Preprocessor& prep, const ScenarioConfig& scenario,
                                  std::span<const double> snr_list) {
    if (snr_list.empty()) throw PreconditionError("snr_sweep: SNR list is empty");
    std::vector<EvalReport> reports;
    for (double snr : snr_list) {
        auto report = evaluate(model, prep, generate_eval_stream(scenario, "test", snr), scenario.window_len);
        report.metadata["snr_db"] = format_double(snr);
        reports.push_back(std::move(report));
    }
    return reports;
}

void write_sweep_csv(std::ostream& out, std::span<const double> snr_list, std::span<const EvalReport> reports) {
    if (snr_list.size() != reports.size()) throw PreconditionError("write_sweep_csv: SNR/report count mismatch");
    out << "snr_db,accuracy,macro_f1\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        out << format_double(snr_list[i]) << ',' << format_double(reports[i].accuracy) << ','
            << format_double(reports[i].macro_f1) << '\n';
    }
}

std::string_view to_string(AblationVariant variant) {
    switch (variant) {
        case AblationVariant::lembs: return "lembs";
        case AblationVariant::wvembs_no_mask: return "wvembs_no_mask";
        case AblationVariant::wvembs_mask: return "wvembs_mask";
    }
    return "lembs";
}

ExperimentConfig ablation_variant(const ExperimentConfig& base, AblationVariant variant) {
    ExperimentConfig ex = base;
    switch (variant) {
        case AblationVariant::lembs:
            ex.model.mode = nn::EmbeddingMode::lembs;
            ex.mask.mask_prob = 0.0;
            break;
        case AblationVariant::wvembs_no_mask:
            ex.model.mode = nn::EmbeddingMode::wvembs;
            ex.mask.mask_prob = 0.0;
            break;
        case AblationVariant::wvembs_mask:
            ex.model.mode = nn::EmbeddingMode::wvembs;
            break;
    }
    return ex;
}

double median(std::vector<double> values) {
    if (values.empty()) return std::nan("");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double tail_variance(std::span<const double> values, std::size_t count) {
    if (values.empty()) return 0.0;
    const auto tail = values.subspan(values.size() - std::min(count, values.size()));
    const double mean = std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(tail.size());
    double var = 0.0;
    for (double v : tail) var += (v - mean) * (v - mean);
    return var / static_cast<double>(tail.size());
}

void write_ablation_table(std::ostream& out, std::span<const AblationEntry> entries) {
    std::vector<std::string> scenarios;
    for (const auto& e : entries) {
        if (std::find(scenarios.begin(), scenarios.end(), e.scenario) == scenarios.end()) scenarios.push_back(e.scenario);
    }
    out << "scenario,metric";
    for (auto v : kAblationVariants) out << ',' << to_string(v);
    out << '\n';
    static constexpr std::array<std::string_view, 3> kMetrics = {"Pre", "Rec", "F1"};
    for (const auto& scenario : scenarios) {
        for (std::size_t m = 0; m < kMetrics.size(); ++m) {
            out << scenario << ',' << kMetrics[m];
            for (auto v : kAblationVariants) {
                std::vector<double> values;
                for (const auto& e : entries) {
                    if (e.scenario != scenario || e.variant != v) continue;
                    values.push_back(m == 0 ? e.report.macro_precision
                                            : m == 1 ? e.report.macro_recall : e.report.macro_f1);
                }
                if (values.empty()) {
                    throw ConfigError("ablation: no result for variant `" + std::string(to_string(v)) +
                                      "` on scenario `" + scenario + "`");
                }
                std::ostringstream cell;
                cell << std::fixed << std::setprecision(3) << 100.0 * median(values);
                out << ',' << cell.str();
            }
            out << '\n';
        }
    }
}

void write_ablation_raw(std::ostream& out, std::span<const AblationEntry> entries) {
    out << "scenario,variant,seed,precision,recall,f1,accuracy\n";
    for (const auto& e : entries) {
        out << e.scenario << ',' << to_string(e.variant) << ',' << e.seed << ',' << format_double(e.report.macro_precision)
            << ',' << format_double(e.report.macro_recall) << ',' << format_double(e.report.macro_f1) << ','
            << format_double(e.report.accuracy) << '\n';
    }
}

}  // namespace wvsort
