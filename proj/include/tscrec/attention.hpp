#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "tscrec/lstm.hpp"

namespace tscrec {

// How the final attention softmax treats entries whose decayed score is
// structurally zero (future/self slots, padding):
//   kLiteral - the equations verbatim; zero entries still contribute e^0, and
//              a row with no predecessors becomes uniform.
//   kMasked  - zero-decay and pad entries are removed from the softmax; a row
//              left empty (no real predecessor) falls back to a one-hot on
//              itself.
enum class HeaMode { kLiteral, kMasked };

const char* to_string(HeaMode mode);
HeaMode hea_mode_from_string(const std::string& name);

// Context encoder/decoder pair around the attention block, both width d.
struct HeaParams {
    LstmCell encoder;  // d -> d, over the raw sentence vectors
    LstmCell decoder;  // d -> d, over the context vectors

    static HeaParams zeros(Eigen::Index d);
};

// Full record of one attention application (also serves as the backward
// cache and as the debug dump payload).
struct AttentionTrace {
    Eigen::MatrixXd similarity;       // M x M cosine similarities
    Eigen::MatrixXd similarity_norm;  // row-softmaxed similarities
    Eigen::MatrixXd decay;            // M x M time decay, strictly lower-triangular
    Eigen::MatrixXd scores;           // similarity_norm .* decay
    Eigen::MatrixXd weights;          // row-softmaxed scores (final attention)
    Eigen::MatrixXd encoder_states;   // M x d, encoder LSTM outputs
    Eigen::MatrixXd contexts;         // M x d, attention-weighted sums
    Eigen::VectorXd output;           // d, final decoder state

    // backward caches
    LstmTrace encoder_trace, decoder_trace;
    std::vector<double> row_norms;  // |sentence_j|
    std::vector<bool> pad_mask;
    HeaMode mode = HeaMode::kLiteral;
};

// cos(a, b); defined as 0 when either vector has zero norm.
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// e^{-beta * (t_j - t_k)} for j > k (negative gaps clamp to 0), exactly 0 for
// j <= k. Indices only matter through the j > k comparison.
double time_decay(double t_j, double t_k, int j, int k, double beta);

// Computes the similarity/decay/score/weight matrices for M sentence vectors
// (rows of seq). beta >= 0.
void attention_scores(const Eigen::MatrixXd& seq, const std::vector<double>& timestamps,
                      const std::vector<bool>& pad_mask, double beta, HeaMode mode,
                      AttentionTrace& trace);

// Full block: encoder LSTM over seq rows, attention-weighted context vectors,
// decoder LSTM over contexts; returns the final decoder state.
Eigen::VectorXd apply_hea(const Eigen::MatrixXd& seq, const std::vector<double>& timestamps,
                          const std::vector<bool>& pad_mask, double beta, HeaMode mode,
                          const HeaParams& params, AttentionTrace* trace = nullptr);

// Backward through the whole block. Returns dL/dseq (M x d) and accumulates
// encoder/decoder gradients into `grad`.
Eigen::MatrixXd hea_backward(const HeaParams& params, const Eigen::MatrixXd& seq,
                             const AttentionTrace& trace, const Eigen::VectorXd& doutput,
                             HeaParams& grad);

}  // namespace tscrec
