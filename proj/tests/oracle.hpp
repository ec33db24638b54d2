// Scalar-loop reference implementations, written independently of the library
// code paths they verify: plain std::vector math, naive softmax (no max
// subtraction), explicit per-gate LSTM recurrences, and a brute-force top-X
// metric. Tests compare library outputs against these.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "tscrec/attention.hpp"
#include "tscrec/fusion.hpp"
#include "tscrec/lstm.hpp"
#include "tscrec/text_encoder.hpp"

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline Vec from_eigen(const Eigen::VectorXd& v) {
    return Vec(v.data(), v.data() + v.size());
}

inline Mat from_eigen(const Eigen::MatrixXd& m) {
    Mat out(static_cast<std::size_t>(m.rows()), Vec(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = m(r, c);
    return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline Vec matvec(const Mat& m, const Vec& v) {
    Vec out(m.size(), 0.0);
    for (std::size_t r = 0; r < m.size(); ++r)
        for (std::size_t c = 0; c < v.size(); ++c) out[r] += m[r][c] * v[c];
    return out;
}

// Naive softmax straight from the definition.
inline Vec softmax(const Vec& v) {
    double denom = 0.0;
    for (double x : v) denom += std::exp(x);
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::exp(v[i]) / denom;
    return out;
}

inline double cosine(const Vec& a, const Vec& b) {
    double na = std::sqrt(dot(a, a)), nb = std::sqrt(dot(b, b));
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

// ---- LSTM / sentence encoder ------------------------------------------------

struct LstmWeights {
    Mat w_x, w_h;
    Vec b;
    std::size_t hidden = 0;
};

inline LstmWeights lstm_weights(const tscrec::LstmCell& cell) {
    LstmWeights w{from_eigen(cell.w_x), from_eigen(cell.w_h), from_eigen(cell.b),
                  static_cast<std::size_t>(cell.hidden_size())};
    return w;
}

// One recurrence step; gate rows are packed [input; forget; candidate; output].
inline void lstm_step(const LstmWeights& w, const Vec& x, Vec& h, Vec& c) {
    const std::size_t n = w.hidden;
    Vec a = matvec(w.w_x, x);
    Vec ah = matvec(w.w_h, h);
    for (std::size_t r = 0; r < a.size(); ++r) a[r] += ah[r] + w.b[r];
    Vec c_new(n), h_new(n);
    for (std::size_t j = 0; j < n; ++j) {
        double gi = sigmoid(a[j]);
        double gf = sigmoid(a[n + j]);
        double gg = std::tanh(a[2 * n + j]);
        double go = sigmoid(a[3 * n + j]);
        c_new[j] = gf * c[j] + gi * gg;
        h_new[j] = go * std::tanh(c_new[j]);
    }
    h = h_new;
    c = c_new;
}

// Hidden state after every step, from zero initial state.
inline Mat lstm_states(const LstmWeights& w, const Mat& inputs) {
    Vec h(w.hidden, 0.0), c(w.hidden, 0.0);
    Mat states;
    for (const Vec& x : inputs) {
        lstm_step(w, x, h, c);
        states.push_back(h);
    }
    return states;
}

// Mean over time of the per-step [forward; backward] concatenations.
inline Vec bilstm_encode(const tscrec::TextEncoderParams& params, const std::vector<int>& ids) {
    const std::size_t d = static_cast<std::size_t>(params.output_size());
    if (ids.empty()) return Vec(d, 0.0);
    Mat fwd_in, bwd_in;
    for (int id : ids)
        fwd_in.push_back(from_eigen(Eigen::VectorXd(params.embedding.row(id).transpose())));
    for (std::size_t i = ids.size(); i-- > 0;)
        bwd_in.push_back(from_eigen(Eigen::VectorXd(params.embedding.row(ids[i]).transpose())));

    Mat fwd = lstm_states(lstm_weights(params.forward_cell), fwd_in);
    Mat bwd = lstm_states(lstm_weights(params.backward_cell), bwd_in);
    const std::size_t half = d / 2;
    const std::size_t len = ids.size();
    Vec mean(d, 0.0);
    for (std::size_t t = 0; t < len; ++t) {
        for (std::size_t j = 0; j < half; ++j) mean[j] += fwd[t][j];
        // step t pairs the forward state with the backward state for the same
        // original position, which the reversed pass visits at len-1-t
        for (std::size_t j = 0; j < half; ++j) mean[half + j] += bwd[len - 1 - t][j];
    }
    for (double& x : mean) x /= static_cast<double>(len);
    return mean;
}

// ---- attention -----------------------------------------------------------------

struct AttentionOracle {
    Mat sim, sim_norm, decay, scores, weights, states, contexts;
    Vec output;
};

inline AttentionOracle attention(const Mat& seq, const Vec& timestamps,
                                 const std::vector<bool>& pad_mask, double beta,
                                 tscrec::HeaMode mode, const tscrec::HeaParams& params) {
    const std::size_t m = seq.size();
    AttentionOracle out;
    out.sim.assign(m, Vec(m, 0.0));
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < m; ++k) out.sim[j][k] = cosine(seq[j], seq[k]);

    out.sim_norm.assign(m, Vec(m, 0.0));
    for (std::size_t j = 0; j < m; ++j) out.sim_norm[j] = softmax(out.sim[j]);

    out.decay.assign(m, Vec(m, 0.0));
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < m; ++k)
            if (j > k) {
                double gap = timestamps[j] - timestamps[k];
                if (gap < 0.0) gap = 0.0;
                out.decay[j][k] = std::exp(-beta * gap);
            }

    out.scores.assign(m, Vec(m, 0.0));
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < m; ++k) out.scores[j][k] = out.sim_norm[j][k] * out.decay[j][k];

    out.weights.assign(m, Vec(m, 0.0));
    for (std::size_t j = 0; j < m; ++j) {
        if (mode == tscrec::HeaMode::kLiteral) {
            out.weights[j] = softmax(out.scores[j]);
            continue;
        }
        std::vector<std::size_t> valid;
        for (std::size_t k = 0; k < m; ++k)
            if (out.decay[j][k] > 0.0 && pad_mask[k]) valid.push_back(k);
        if (valid.empty()) {
            out.weights[j][j] = 1.0;
            continue;
        }
        double denom = 0.0;
        for (std::size_t k : valid) denom += std::exp(out.scores[j][k]);
        for (std::size_t k : valid) out.weights[j][k] = std::exp(out.scores[j][k]) / denom;
    }

    out.states = lstm_states(lstm_weights(params.encoder), seq);
    const std::size_t d = out.states.empty() ? 0 : out.states[0].size();
    out.contexts.assign(m, Vec(d, 0.0));
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < m; ++k)
            for (std::size_t c = 0; c < d; ++c)
                out.contexts[j][c] += out.weights[j][k] * out.states[k][c];

    Mat dec = lstm_states(lstm_weights(params.decoder), out.contexts);
    out.output = dec.back();
    return out;
}

// ---- fusion ----------------------------------------------------------------------

inline double elu(double x) { return x > 0.0 ? x : std::exp(x) - 1.0; }

inline Vec fuse(const tscrec::FusionParams& params, const Vec& textual, const Vec& visual) {
    Vec pre = matvec(from_eigen(params.w_visual), visual);
    Vec bv = from_eigen(params.b_visual);
    for (std::size_t i = 0; i < pre.size(); ++i) pre[i] = elu(pre[i] + bv[i]);

    Vec cat = textual;
    cat.insert(cat.end(), pre.begin(), pre.end());
    Vec post = matvec(from_eigen(params.w_combine), cat);
    Vec bc = from_eigen(params.b_combine);
    for (std::size_t i = 0; i < post.size(); ++i) post[i] = elu(post[i] + bc[i]);
    return post;
}

// ---- top-X metrics ------------------------------------------------------------------

struct TruthRow {
    std::string user, video;
    int label = 0;
};

struct MetricsOracle {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    int users_evaluated = 0;
    std::vector<std::string> skipped;
};

inline MetricsOracle topx(
    const std::map<std::string, std::vector<std::pair<std::string, double>>>& scores,
    const std::vector<TruthRow>& truth, int x) {
    std::map<std::string, std::map<std::string, int>> labels;
    for (const TruthRow& row : truth) labels[row.user][row.video] = row.label;

    MetricsOracle out;
    double sum_p = 0.0, sum_r = 0.0;
    int n_recall = 0;
    for (const auto& [user, user_labels] : labels) {
        auto it = scores.find(user);
        std::vector<std::pair<std::string, double>> ranked =
            it == scores.end() ? std::vector<std::pair<std::string, double>>{} : it->second;
        if (static_cast<int>(ranked.size()) < x) {
            out.skipped.push_back(user);
            continue;
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& l, const auto& r) {
            if (l.second != r.second) return l.second > r.second;
            return l.first < r.first;
        });
        int hits = 0;
        for (int i = 0; i < x; ++i) {
            auto lab = user_labels.find(ranked[static_cast<std::size_t>(i)].first);
            if (lab != user_labels.end() && lab->second == 1) ++hits;
        }
        int positives = 0;
        for (const auto& [video, label] : user_labels) positives += label;
        sum_p += static_cast<double>(hits) / x;
        ++out.users_evaluated;
        if (positives > 0) {
            sum_r += static_cast<double>(hits) / positives;
            ++n_recall;
        }
    }
    if (out.users_evaluated > 0) out.precision = sum_p / out.users_evaluated;
    if (n_recall > 0) out.recall = sum_r / n_recall;
    if (out.precision + out.recall > 0.0)
        out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

// ---- finite differences ---------------------------------------------------------------

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

template <typename F>
double central_diff(double* slot, double h, F&& f) {
    const double saved = *slot;
    *slot = saved + h;
    const double fp = f();
    *slot = saved - h;
    const double fm = f();
    *slot = saved;
    return (fp - fm) / (2.0 * h);
}

}  // namespace oracle
