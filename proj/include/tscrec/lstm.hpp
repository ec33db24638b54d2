#pragma once

#include <Eigen/Dense>
#include <vector>

namespace tscrec {

// Single LSTM cell with gates packed row-wise as [input; forget; candidate;
// output] blocks of `hidden` rows each. Sigmoid gates, tanh candidate/output.
struct LstmCell {
    Eigen::MatrixXd w_x;  // 4h x n_in
    Eigen::MatrixXd w_h;  // 4h x h
    Eigen::VectorXd b;    // 4h

    Eigen::Index hidden_size() const { return w_h.cols(); }
    Eigen::Index input_size() const { return w_x.cols(); }

    static LstmCell zeros(Eigen::Index n_in, Eigen::Index h);
};

// Per-sequence activations kept for backpropagation through time.
struct LstmTrace {
    std::vector<Eigen::VectorXd> inputs;
    std::vector<Eigen::VectorXd> gate_i, gate_f, gate_g, gate_o;  // post-nonlinearity
    std::vector<Eigen::VectorXd> cell, hidden;

    void clear();
};

// Unrolls the cell over `inputs` with zero initial state; fills `trace`.
void lstm_forward(const LstmCell& cell, const std::vector<Eigen::VectorXd>& inputs,
                  LstmTrace& trace);

// BPTT. dhidden[t] is the external dL/dh_t; parameter gradients are
// accumulated into `grad` (same shapes as the cell); returns dL/dx_t.
std::vector<Eigen::VectorXd> lstm_backward(const LstmCell& cell, const LstmTrace& trace,
                                           const std::vector<Eigen::VectorXd>& dhidden,
                                           LstmCell& grad);

}  // namespace tscrec
