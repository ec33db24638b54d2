#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tscrec/comment.hpp"
#include "tscrec/model.hpp"
#include "tscrec/vocab.hpp"

namespace tscrec {

// ---- comment corpus (UTF-8 JSON Lines) ------------------------------------

struct CorpusLoadStats {
    int total_records = 0;  // non-blank lines
    int loaded = 0;
    std::vector<std::pair<int, std::string>> rejects;  // (line number, reason)
};

// Loads, canonically sorts, and indexes a corpus. Individual malformed lines
// are rejected and reported; the load fails when more than 10% of records are
// rejected or when a tsc_id appears twice.
Dataset load_tsc_corpus(const std::string& path, CorpusLoadStats* stats = nullptr);

// Canonical writer: sorted order, fixed key order, shortest-round-trip
// numbers. write -> read -> write is byte-identical.
void save_tsc_corpus(const std::string& path, const Dataset& dataset);

// ---- frame feature table ---------------------------------------------------

struct VisualFeatureTable {
    int dim = 0;
    // per video: frame_time-sorted feature vectors
    std::map<std::string, std::vector<std::pair<double, Eigen::VectorXd>>> videos;

    std::size_t rows() const;
};

struct FeatureLoadStats {
    int rows = 0;
    std::vector<std::string> warnings;
};

// Header line {"dim": D}, then video_id TAB frame_time TAB comma-separated
// floats. A repeated (video, time) key keeps the last row and warns.
VisualFeatureTable load_visual_features(const std::string& path,
                                        FeatureLoadStats* stats = nullptr);

// 9-significant-digit decimal text; save -> load -> save is byte-identical.
void save_visual_features(const std::string& path, const VisualFeatureTable& table);

// Feature of the latest frame at or before video_time (earliest frame when
// the comment precedes all frames). Throws DataError when the video is absent.
const Eigen::VectorXd& match_frame_feature(const VisualFeatureTable& table,
                                           const std::string& video_id, double video_time);
// Same lookup, nullptr when the video is absent (zero-substitution callers).
const Eigen::VectorXd* try_match_frame_feature(const VisualFeatureTable& table,
                                               const std::string& video_id, double video_time);

// ---- checkpoints -------------------------------------------------------------

inline constexpr int kCheckpointFormatVersion = 1;

struct CheckpointManifest {
    int format_version = kCheckpointFormatVersion;
    std::string model_variant;  // "tm" | "t-hea" | "itf" | "itf-hea"
    std::string hea_mode;       // "literal" | "masked"
    int d = 0;
    int m = 0;
    double beta = 0.0;
    int vocab_size = 0;
    int visual_dim = 0;
    int l_max = 0;
    long long seed = 0;
    std::string parameter_blob_path;  // relative to the checkpoint directory
};

// A trained model: manifest + vocabulary + user/video row order + tensors.
struct Checkpoint {
    CheckpointManifest manifest;
    Vocabulary vocab;
    std::vector<std::string> users;   // row order of user_factors
    std::vector<std::string> videos;  // row order of video_factors
    ModelParams params;

    ModelSettings settings() const;
    std::map<std::string, int> user_map() const;
    std::map<std::string, int> video_map() const;
};

// Directory layout: manifest.json, params.bin (binary tensor blob),
// vocab.json, index.json. load(save(x)) restores every parameter bit-exactly.
void save_checkpoint(const std::string& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& dir);

}  // namespace tscrec
