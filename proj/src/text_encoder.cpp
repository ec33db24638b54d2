#include "tscrec/text_encoder.hpp"

#include <stdexcept>

namespace tscrec {

TextEncoderParams TextEncoderParams::zeros(Eigen::Index vocab_size, Eigen::Index d) {
    if (d % 2 != 0) throw std::invalid_argument("text encoder: d must be even");
    TextEncoderParams p;
    p.embedding = Eigen::MatrixXd::Zero(vocab_size, d);
    p.forward_cell = LstmCell::zeros(d, d / 2);
    p.backward_cell = LstmCell::zeros(d, d / 2);
    return p;
}

Eigen::VectorXd encode_tokens(const TextEncoderParams& params, const std::vector<int>& ids,
                              EncodeTrace* trace) {
    const Eigen::Index d = params.output_size();
    const Eigen::Index half = params.forward_cell.hidden_size();
    if (ids.empty()) {
        if (trace) *trace = EncodeTrace{};
        return Eigen::VectorXd::Zero(d);
    }

    const int L = static_cast<int>(ids.size());
    std::vector<Eigen::VectorXd> xs(L), xs_rev(L);
    for (int t = 0; t < L; ++t) {
        const int id = ids[t];
        if (id < 0 || id >= params.embedding.rows())
            throw std::invalid_argument("encode_tokens: token id out of range");
        xs[t] = params.embedding.row(id).transpose();
    }
    for (int t = 0; t < L; ++t) xs_rev[t] = xs[L - 1 - t];

    EncodeTrace local;
    EncodeTrace& tr = trace ? *trace : local;
    tr.token_ids = ids;
    lstm_forward(params.forward_cell, xs, tr.forward_pass);
    lstm_forward(params.backward_cell, xs_rev, tr.backward_pass);

    // Mean over positions of [fwd_t ; bwd_t]; the mean of each half is
    // order-independent, so the reversed trace can be pooled directly.
    Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
    for (int t = 0; t < L; ++t) {
        out.head(half) += tr.forward_pass.hidden[t];
        out.tail(half) += tr.backward_pass.hidden[t];
    }
    return out / static_cast<double>(L);
}

void encode_backward(const TextEncoderParams& params, const EncodeTrace& trace,
                     const Eigen::VectorXd& dsentence, TextEncoderParams& grad) {
    const int L = static_cast<int>(trace.token_ids.size());
    if (L == 0) return;  // constant zero output

    const Eigen::Index half = params.forward_cell.hidden_size();
    const Eigen::VectorXd dfwd = dsentence.head(half) / static_cast<double>(L);
    const Eigen::VectorXd dbwd = dsentence.tail(half) / static_cast<double>(L);

    const std::vector<Eigen::VectorXd> dh_fwd(L, dfwd), dh_bwd(L, dbwd);
    const auto dx_fwd =
        lstm_backward(params.forward_cell, trace.forward_pass, dh_fwd, grad.forward_cell);
    const auto dx_bwd =
        lstm_backward(params.backward_cell, trace.backward_pass, dh_bwd, grad.backward_cell);

    for (int t = 0; t < L; ++t) {
        grad.embedding.row(trace.token_ids[t]) +=
            (dx_fwd[t] + dx_bwd[L - 1 - t]).transpose();
    }
}

}  // namespace tscrec
