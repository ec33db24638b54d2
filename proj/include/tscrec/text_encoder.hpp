#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tscrec/lstm.hpp"

namespace tscrec {

// Bi-LSTM sentence encoder: token embeddings feed a forward and a backward
// LSTM of width d/2 each; per-step states are concatenated and mean-pooled
// into a single d-dimensional sentence vector.
struct TextEncoderParams {
    Eigen::MatrixXd embedding;  // vocab_size x d_w (d_w == d)
    LstmCell forward_cell;      // d_w -> d/2
    LstmCell backward_cell;     // d_w -> d/2

    Eigen::Index output_size() const {
        return forward_cell.hidden_size() + backward_cell.hidden_size();
    }

    static TextEncoderParams zeros(Eigen::Index vocab_size, Eigen::Index d);
};

struct EncodeTrace {
    std::vector<int> token_ids;
    LstmTrace forward_pass;
    LstmTrace backward_pass;  // runs over the reversed token sequence
};

// Empty token list encodes to the zero vector. Token ids must lie in
// [0, vocab_size).
Eigen::VectorXd encode_tokens(const TextEncoderParams& params, const std::vector<int>& ids,
                              EncodeTrace* trace = nullptr);

// Accumulates dL/d(embedding rows) and cell gradients given dL/d(sentence vector).
void encode_backward(const TextEncoderParams& params, const EncodeTrace& trace,
                     const Eigen::VectorXd& dsentence, TextEncoderParams& grad);

}  // namespace tscrec
