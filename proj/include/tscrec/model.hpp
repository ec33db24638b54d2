#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "tscrec/attention.hpp"
#include "tscrec/fusion.hpp"
#include "tscrec/rng.hpp"
#include "tscrec/text_encoder.hpp"

namespace tscrec {

// The four recommenders: text-only, text + herding attention, image-text
// fusion, and fusion with attention.
enum class Variant { kTm, kThea, kItf, kItfHea };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& name);
bool uses_hea(Variant v);
bool uses_visual(Variant v);

struct ModelSettings {
    Variant variant = Variant::kTm;
    HeaMode hea_mode = HeaMode::kLiteral;
    int d = 128;        // latent width (also the embedding width)
    int m = 10;         // context window length
    double beta = 0.2;  // time-decay rate
};

struct ModelShape {
    Variant variant = Variant::kTm;
    int d = 0;
    int vocab_size = 0;
    int n_users = 0;
    int n_videos = 0;
    int visual_dim = 0;  // 0 for text-only variants
};

// Every trainable tensor of one variant. Blocks unused by the variant are
// allocated empty so the named-tensor walk skips them.
struct ModelParams {
    Eigen::MatrixXd user_factors;   // n_users x d
    Eigen::MatrixXd video_factors;  // n_videos x d
    TextEncoderParams text;
    HeaParams hea;
    FusionParams fusion;

    static ModelParams zeros(const ModelShape& shape);
    static ModelParams zeros_like(const ModelParams& other);
};

// Flat named view over a parameter set; the enumeration order is fixed, so
// two same-shaped sets walk in lockstep (optimizer moments, gradients, IO).
struct TensorRef {
    std::string name;
    double* data;
    Eigen::Index rows, cols;
    Eigen::Index size() const { return rows * cols; }
};
std::vector<TensorRef> tensor_refs(ModelParams& params);

// Seeded init: weights uniform in [-1/sqrt(d), 1/sqrt(d)], biases zero except
// LSTM forget gates at 1.
void init_params(ModelParams& params, int d, Rng& rng);

// ---- interaction scoring ------------------------------------------------

// Element-wise merge of a factor row with a content feature.
Eigen::VectorXd merge(const Eigen::VectorXd& factors, const Eigen::VectorXd& feature);

// sigmoid(p . q)
double predict_interaction(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

// Binary cross-entropy with the prediction clamped to [eps, 1-eps].
inline constexpr double kBceEps = 1e-7;
double bce_objective(double pred, double label);
// dL/d(logit) for pred = sigmoid(logit); 0 where the clamp is active, so the
// analytic value matches finite differences of bce_objective everywhere.
double bce_logit_grad(double pred, double label);

// Test-time ranking score: raw inner product of the factor rows.
double score_user_video(const Eigen::MatrixXd& user_factors,
                        const Eigen::MatrixXd& video_factors, int user, int video);

// ---- end-to-end forward/backward ----------------------------------------

// One training interaction, fully tokenized. member_tokens has m entries;
// pad slots are empty lists. Text-only variants read only the target slot.
struct PreparedExample {
    std::vector<std::vector<int>> member_tokens;
    std::vector<double> timestamps;
    std::vector<bool> pad_mask;
    int user = 0;
    int video = 0;
    Eigen::VectorXd visual;  // empty for text-only variants
    double label = 0.0;
};

struct ForwardTrace {
    std::vector<EncodeTrace> member_traces;  // per slot (HEA) or target only
    Eigen::MatrixXd seq;                     // m x d sentence vectors (HEA)
    AttentionTrace attention;
    FusionTrace fusion;
    Eigen::VectorXd textual, feature, p, q;
    double logit = 0.0;
    double prediction = 0.5;
};

// Returns sigmoid(p . q) for the example; fills `trace` for backward.
double model_forward(const ModelParams& params, const ModelSettings& settings,
                     const PreparedExample& example, ForwardTrace* trace = nullptr);

// Accumulates dL/dparams for loss = bce_objective(prediction, label).
void model_backward(const ModelParams& params, const ModelSettings& settings,
                    const PreparedExample& example, const ForwardTrace& trace,
                    ModelParams& grads);

}  // namespace tscrec
