#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tscrec/comment.hpp"
#include "tscrec/corpus_io.hpp"

namespace tscrec {

struct SynthConfig {
    int n_users = 30;
    int n_videos = 60;
    int n_comments = 5000;
    int latent_dim = 16;
    double herd_prob = 0.5;    // chance a comment copies a recent predecessor
    double herd_window = 30.0; // seconds a copied predecessor may lie back
    int pos_vocab = 200;       // positive token pool size
    int neg_vocab = 200;
    int visual_dim = 64;
    double video_duration = 600.0;
    double frame_interval = 10.0;
    std::uint64_t seed = 7;
};

struct SynthOutput {
    Dataset train;
    Dataset test;
    VisualFeatureTable features;
    Eigen::MatrixXd affinity;  // n_users x n_videos ground-truth preferences
    std::vector<std::string> user_ids, video_ids;
};

// Draws user/video latents from a spherical Gaussian; each comment's polarity
// is Bernoulli(sigmoid(u . v)). With probability herd_prob a comment copies
// at least half of its tokens from a uniformly chosen same-video predecessor
// within herd_window seconds. Frame features are a per-video base vector (a
// fixed random mixing of the video latent) plus per-frame Gaussian noise.
// Each user's videos are split half/half into train/test comments.
SynthOutput generate(const SynthConfig& cfg);

// Fraction of comments sharing at least half of their token set with some
// earlier same-video comment at most `window` seconds older.
double measure_herding(const std::vector<TimeSyncComment>& comments, double window);

// TSV: user_id TAB video_id TAB affinity (9 significant digits).
void save_affinities(const std::string& path, const SynthOutput& out);

}  // namespace tscrec
