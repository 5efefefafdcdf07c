#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wvsort/embedding.hpp"
#include "wvsort/kv_config.hpp"
#include "wvsort/masking.hpp"
#include "wvsort/metrics.hpp"
#include "wvsort/nn/checkpoint.hpp"
#include "wvsort/nn/model.hpp"
#include "wvsort/pdw.hpp"

namespace wvsort {

inline constexpr std::string_view kToolVersion = "wvsort 0.1.0";

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    double weight_decay = 1e-2;
    std::size_t patience = 10;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Everything one run needs. `seed` is the root; scenario and training seeds
/// derive from it unless `scenario.seed` / `train.seed` are set explicitly.
struct ExperimentConfig {
    std::uint64_t seed = 1;
    ScenarioConfig scenario;
    EmbedConfig embed;
    nn::ModelConfig model;
    TrainConfig train;
    MaskConfig mask;

    KeyValueConfig to_config() const;
};

/// Reads all sections of a run config. `seed_override` replaces the root seed.
ExperimentConfig experiment_from_config(const KeyValueConfig& cfg, std::optional<std::uint64_t> seed_override = {});

/// Clean single-emitter trains (the augmentation source) plus interleaved
/// validation and test streams at the scenario's evaluation SNR.
struct Dataset {
    std::vector<PdwStream> single_trains;
    PdwStream val;
    PdwStream test;
};

Dataset synthesize(const ScenarioConfig& scenario);

/// Interleaved evaluation stream; `tag` ("val", "test") selects the seed
/// family. Drops and noise draws depend only on the seed, so streams at two
/// SNRs differ only in noise magnitude and amplitude offset.
PdwStream generate_eval_stream(const ScenarioConfig& scenario, std::string_view tag, double snr_db);

/// One augmented training mixture: random interception of every single-emitter
/// train, random time offsets, recombination, drops and noise at an SNR drawn
/// from scenario.snr_db, cut into windows.
std::vector<PdwWindow> training_mixture(const std::vector<PdwStream>& single_trains, const ScenarioConfig& scenario,
                                        std::uint64_t seed);

/// Splits every single-emitter train into window-length chunks.
std::vector<PdwStream> single_class_chunks(const std::vector<PdwStream>& single_trains, std::size_t chunk_len);

/// Fitted embedding plus the spread distribution used for masking.
struct Preprocessor {
    EmbedConfig embed;
    SpreadDistribution spreads;
};

Preprocessor fit_preprocessor(const Dataset& dataset, const ScenarioConfig& scenario, const EmbedConfig& skeleton);

/// Model input for a batch of windows: [B, L, N, D] embeddings (WV mode) or
/// raw [B, L, N] values (LEmbs mode). When `mask` is given each window is
/// masked with seed derive_seed(mask_seed, "window", first_window_index + b).
struct MaskPlan {
    const MaskConfig* config = nullptr;
    std::uint64_t seed = 0;
    std::uint64_t first_window_index = 0;
};
nn::Tensor build_input(std::span<const PdwWindow* const> windows, nn::EmbeddingMode mode, const Preprocessor& prep,
                       std::optional<MaskPlan> mask = std::nullopt);

struct LogRecord {
    std::uint64_t step = 0;
    std::size_t epoch = 0;
    double loss = 0.0;
    double lr = 0.0;
    double grad_norm = 0.0;
    std::optional<double> val_f1;
};

/// Newline-delimited JSON, one object per record.
void write_log(std::ostream& out, std::span<const LogRecord> records);

struct TrainResult {
    std::vector<nn::NamedTensor> best_state;
    std::size_t best_epoch = 0;
    double best_val_f1 = 0.0;
    std::vector<double> val_f1_per_epoch;
    std::vector<std::uint64_t> epoch_data_digest;
    std::vector<LogRecord> log;
};

/// Full training loop with per-epoch regenerated mixtures, masking in WV mode
/// only, AdamW, validation macro-F1 each epoch and early stopping. The model
/// ends holding the best-validation weights.
/// Throws NumericError when the loss becomes non-finite.
TrainResult train(nn::Model& model, const Dataset& dataset, const Preprocessor& prep, const ExperimentConfig& config,
                  std::ostream* log_stream = nullptr);

/// Mask-free, dropout-free token classification of a stream cut into
/// non-overlapping windows of `window_len`.
EvalReport evaluate(nn::Model& model, const Preprocessor& prep, const PdwStream& stream, std::size_t window_len);

/// Per-token argmax predictions with their labels for the same window cut.
struct TokenPredictions {
    std::vector<Label> labels;
    std::vector<Label> predicted;
};
TokenPredictions predict_stream(nn::Model& model, const Preprocessor& prep, const PdwStream& stream,
                                std::size_t window_len);

/// Model + preprocessing + provenance in one checkpoint.
nn::Checkpoint make_checkpoint(const nn::Model& model, const Preprocessor& prep, const ExperimentConfig& config);
struct LoadedModel {
    nn::Model model;
    Preprocessor prep;
    ExperimentConfig config;
};
LoadedModel load_model(const nn::Checkpoint& checkpoint);

/// Test stream regenerated at each SNR with the same seeds; one report per point.
std::vector<EvalReport> snr_sweep(nn::Model& model, const Preprocessor& prep, const ScenarioConfig& scenario,
                                  std::span<const double> snr_list);
/// `snr_db,accuracy,macro_f1` header plus one row per point.
void write_sweep_csv(std::ostream& out, std::span<const double> snr_list, std::span<const EvalReport> reports);

enum class AblationVariant { lembs, wvembs_no_mask, wvembs_mask };
inline constexpr std::array<AblationVariant, 3> kAblationVariants = {
    AblationVariant::lembs, AblationVariant::wvembs_no_mask, AblationVariant::wvembs_mask};
std::string_view to_string(AblationVariant variant);
/// The run config of one variant: embedding mode and mask probability are
/// overridden, everything else is shared.
ExperimentConfig ablation_variant(const ExperimentConfig& base, AblationVariant variant);

struct AblationEntry {
    std::string scenario;
    AblationVariant variant = AblationVariant::lembs;
    std::uint64_t seed = 0;
    EvalReport report;
    std::vector<double> val_f1_per_epoch;
};

/// Median-over-seeds table: one row per (scenario, metric), one column per
/// variant, in Pre/Rec/F1 rows. Throws ConfigError if a
/// (scenario, variant) cell has no entries.
void write_ablation_table(std::ostream& out, std::span<const AblationEntry> entries);
/// Raw per-seed values: scenario,variant,seed,precision,recall,f1,accuracy.
void write_ablation_raw(std::ostream& out, std::span<const AblationEntry> entries);

double median(std::vector<double> values);
/// Population variance of the last `count` values (all values if fewer).
double tail_variance(std::span<const double> values, std::size_t count);

}  // namespace wvsort
