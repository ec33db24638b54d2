#include "tscrec/attention.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tscrec/errors.hpp"

namespace tscrec {

const char* to_string(HeaMode mode) {
    return mode == HeaMode::kLiteral ? "literal" : "masked";
}

HeaMode hea_mode_from_string(const std::string& name) {
    if (name == "literal") return HeaMode::kLiteral;
    if (name == "masked") return HeaMode::kMasked;
    throw ConfigError("unknown attention mode: " + name);
}

HeaParams HeaParams::zeros(Eigen::Index d) {
    HeaParams p;
    p.encoder = LstmCell::zeros(d, d);
    p.decoder = LstmCell::zeros(d, d);
    return p;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("cosine_similarity: size mismatch");
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

double time_decay(double t_j, double t_k, int j, int k, double beta) {
    if (beta < 0.0) throw std::invalid_argument("time_decay: beta must be >= 0");
    if (j <= k) return 0.0;
    const double gap = t_j - t_k;
    return std::exp(-beta * (gap > 0.0 ? gap : 0.0));
}

namespace {

Eigen::VectorXd softmax(const Eigen::VectorXd& x) {
    const double m = x.maxCoeff();
    Eigen::VectorXd e = (x.array() - m).exp();
    return e / e.sum();
}

// dL/dx of y = softmax(x), given y and dL/dy: dx_i = y_i * (dy_i - y.dy).
Eigen::VectorXd softmax_backward(const Eigen::VectorXd& y, const Eigen::VectorXd& dy) {
    const double dot = y.dot(dy);
    return y.cwiseProduct(dy.array().matrix() - Eigen::VectorXd::Constant(y.size(), dot));
}

}  // namespace

void attention_scores(const Eigen::MatrixXd& seq, const std::vector<double>& timestamps,
                      const std::vector<bool>& pad_mask, double beta, HeaMode mode,
                      AttentionTrace& trace) {
    const Eigen::Index m = seq.rows();
    if (static_cast<Eigen::Index>(timestamps.size()) != m ||
        static_cast<Eigen::Index>(pad_mask.size()) != m)
        throw std::invalid_argument("attention_scores: window size mismatch");
    if (beta < 0.0) throw std::invalid_argument("attention_scores: beta must be >= 0");

    trace.mode = mode;
    trace.pad_mask = pad_mask;
    trace.row_norms.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) trace.row_norms[j] = seq.row(j).norm();

    trace.similarity.resize(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index k = 0; k <= j; ++k) {
            const double nj = trace.row_norms[j], nk = trace.row_norms[k];
            const double s =
                (nj == 0.0 || nk == 0.0) ? 0.0 : seq.row(j).dot(seq.row(k)) / (nj * nk);
            trace.similarity(j, k) = s;
            trace.similarity(k, j) = s;
        }
    }

    trace.similarity_norm.resize(m, m);
    for (Eigen::Index j = 0; j < m; ++j)
        trace.similarity_norm.row(j) = softmax(trace.similarity.row(j).transpose()).transpose();

    trace.decay.resize(m, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index k = 0; k < m; ++k)
            trace.decay(j, k) = time_decay(timestamps[j], timestamps[k], static_cast<int>(j),
                                           static_cast<int>(k), beta);

    trace.scores = trace.similarity_norm.cwiseProduct(trace.decay);

    trace.weights.setZero(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        if (mode == HeaMode::kLiteral) {
            trace.weights.row(j) = softmax(trace.scores.row(j).transpose()).transpose();
            continue;
        }
        // Masked: only entries with positive decay over real comments compete.
        std::vector<Eigen::Index> valid;
        for (Eigen::Index k = 0; k < m; ++k)
            if (trace.decay(j, k) > 0.0 && pad_mask[k]) valid.push_back(k);
        if (valid.empty()) {
            trace.weights(j, j) = 1.0;  // no usable predecessor: keep self
            continue;
        }
        Eigen::VectorXd sub(valid.size());
        for (std::size_t v = 0; v < valid.size(); ++v) sub[v] = trace.scores(j, valid[v]);
        const Eigen::VectorXd w = softmax(sub);
        for (std::size_t v = 0; v < valid.size(); ++v) trace.weights(j, valid[v]) = w[v];
    }
}

Eigen::VectorXd apply_hea(const Eigen::MatrixXd& seq, const std::vector<double>& timestamps,
                          const std::vector<bool>& pad_mask, double beta, HeaMode mode,
                          const HeaParams& params, AttentionTrace* trace) {
    const Eigen::Index m = seq.rows();
    const Eigen::Index d = seq.cols();
    if (m < 1) throw std::invalid_argument("apply_hea: empty window");
    if (params.encoder.input_size() != d || params.decoder.input_size() != d)
        throw std::invalid_argument("apply_hea: cell width mismatch");

    AttentionTrace local;
    AttentionTrace& tr = trace ? *trace : local;

    std::vector<Eigen::VectorXd> xs(m);
    for (Eigen::Index j = 0; j < m; ++j) xs[j] = seq.row(j).transpose();
    lstm_forward(params.encoder, xs, tr.encoder_trace);

    tr.encoder_states.resize(m, d);
    for (Eigen::Index j = 0; j < m; ++j)
        tr.encoder_states.row(j) = tr.encoder_trace.hidden[j].transpose();

    attention_scores(seq, timestamps, pad_mask, beta, mode, tr);

    tr.contexts = tr.weights * tr.encoder_states;

    std::vector<Eigen::VectorXd> cs(m);
    for (Eigen::Index j = 0; j < m; ++j) cs[j] = tr.contexts.row(j).transpose();
    lstm_forward(params.decoder, cs, tr.decoder_trace);

    tr.output = tr.decoder_trace.hidden.back();
    return tr.output;
}

Eigen::MatrixXd hea_backward(const HeaParams& params, const Eigen::MatrixXd& seq,
                             const AttentionTrace& trace, const Eigen::VectorXd& doutput,
                             HeaParams& grad) {
    const Eigen::Index m = seq.rows();
    const Eigen::Index d = seq.cols();

    // Decoder BPTT: only the final state leaves the block.
    std::vector<Eigen::VectorXd> dh_dec(m, Eigen::VectorXd::Zero(d));
    dh_dec[m - 1] = doutput;
    const auto dcontexts = lstm_backward(params.decoder, trace.decoder_trace, dh_dec, grad.decoder);

    // contexts = weights * encoder_states.
    Eigen::MatrixXd dweights(m, m);
    Eigen::MatrixXd denc = Eigen::MatrixXd::Zero(m, d);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index k = 0; k < m; ++k) {
            dweights(j, k) = dcontexts[j].dot(trace.encoder_states.row(k).transpose());
            denc.row(k) += trace.weights(j, k) * dcontexts[j].transpose();
        }
    }

    // Final softmax rows. Rows where `weights` is zero at an entry kill that
    // entry's gradient inside softmax_backward, which handles both the
    // masked-out entries and the constant fallback rows.
    Eigen::MatrixXd dscores(m, m);
    for (Eigen::Index j = 0; j < m; ++j)
        dscores.row(j) =
            softmax_backward(trace.weights.row(j).transpose(), dweights.row(j).transpose())
                .transpose();

    // scores = similarity_norm .* decay (decay is data, not a parameter).
    const Eigen::MatrixXd dsim_norm = dscores.cwiseProduct(trace.decay);

    Eigen::MatrixXd dsim(m, m);
    for (Eigen::Index j = 0; j < m; ++j)
        dsim.row(j) = softmax_backward(trace.similarity_norm.row(j).transpose(),
                                       dsim_norm.row(j).transpose())
                          .transpose();

    // Cosine rows: sim(j,k) = u_j . u_k with u = s/|s|;
    // d sim / d s_j = (u_k - sim * u_j) / |s_j|.
    Eigen::MatrixXd dseq = Eigen::MatrixXd::Zero(m, d);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double nj = trace.row_norms[j];
        if (nj == 0.0) continue;
        const Eigen::RowVectorXd uj = seq.row(j) / nj;
        for (Eigen::Index k = 0; k < m; ++k) {
            const double g = dsim(j, k);
            if (g == 0.0) continue;
            const double nk = trace.row_norms[k];
            if (nk == 0.0) continue;
            const Eigen::RowVectorXd uk = seq.row(k) / nk;
            const double s = trace.similarity(j, k);
            dseq.row(j) += g * (uk - s * uj) / nj;
            dseq.row(k) += g * (uj - s * uk) / nk;
        }
    }

    // Encoder BPTT adds the path through H.
    std::vector<Eigen::VectorXd> dh_enc(m);
    for (Eigen::Index j = 0; j < m; ++j) dh_enc[j] = denc.row(j).transpose();
    const auto dxs = lstm_backward(params.encoder, trace.encoder_trace, dh_enc, grad.encoder);
    for (Eigen::Index j = 0; j < m; ++j) dseq.row(j) += dxs[j].transpose();

    return dseq;
}

}  // namespace tscrec
