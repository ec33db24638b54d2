#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tscrec/comment.hpp"
#include "tscrec/corpus_io.hpp"
#include "tscrec/model.hpp"

namespace tscrec {

struct TrainConfig {
    ModelSettings model;
    double learning_rate = 0.001;  // Adam; >= 0 (0 performs no updates)
    int batch_size = 64;
    int epochs = 10;
    std::uint64_t seed = 1;
    int l_max = 50;      // token truncation length
    int min_count = 1;   // vocabulary threshold
    int patience = 0;    // > 0 enables early stopping on a held-out split
    double validation_fraction = 0.1;  // used when patience > 0
    std::vector<std::string> freeze;   // tensor names excluded from updates
};

struct PreparedCorpus {
    std::vector<PreparedExample> examples;
    int missing_visual = 0;  // zero-substituted frame features
};

// Tokenizes windows against the vocabulary and attaches frame features (zero
// vector + count when a video has none). HEA variants tokenize all slots,
// others only the target.
PreparedCorpus prepare_examples(const Dataset& dataset,
                                const std::vector<ContextWindow>& windows,
                                const Vocabulary& vocab, int l_max,
                                const VisualFeatureTable* features, Variant variant);

// Mean bce loss over a set of examples under fixed parameters.
double batch_mean_loss(const ModelParams& params, const ModelSettings& settings,
                       const std::vector<PreparedExample>& examples);

struct FitResult {
    Checkpoint checkpoint;
    std::vector<double> epoch_mean_loss;  // index 0 = epoch 1
    int epochs_run = 0;
    int missing_visual = 0;
};

// Trains one variant from scratch (or from warm_start's parameters). Fully
// deterministic for a fixed config and seed. Throws ConfigError when a visual
// variant lacks a feature table and std::runtime_error when the loss turns
// non-finite.
FitResult fit(const Dataset& train, const VisualFeatureTable* features, const TrainConfig& cfg,
              const Checkpoint* warm_start = nullptr);

// ---- gradient verification -------------------------------------------------

struct TensorCheckReport {
    std::string name;
    double max_rel_err = 0.0;
    int coords_checked = 0;
    bool skipped = false;  // listed in TrainConfig::freeze
};

// Central finite differences on a small built-in fixture against the analytic
// backward pass. Checks every trainable tensor of the configured variant:
// all coordinates of small tensors, an evenly spread sample (>= min_coords)
// of large ones. Relative error uses max(|analytic|, |numeric|, 1e-6).
std::vector<TensorCheckReport> gradient_check(const TrainConfig& cfg, double fd_step = 1e-5,
                                              int min_coords = 20);

}  // namespace tscrec
