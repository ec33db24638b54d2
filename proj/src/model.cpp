#include "tscrec/model.hpp"

#include <cmath>
#include <stdexcept>

#include "tscrec/errors.hpp"

namespace tscrec {

const char* to_string(Variant v) {
    switch (v) {
        case Variant::kTm: return "tm";
        case Variant::kThea: return "t-hea";
        case Variant::kItf: return "itf";
        case Variant::kItfHea: return "itf-hea";
    }
    return "?";
}

Variant variant_from_string(const std::string& name) {
    if (name == "tm") return Variant::kTm;
    if (name == "t-hea") return Variant::kThea;
    if (name == "itf") return Variant::kItf;
    if (name == "itf-hea") return Variant::kItfHea;
    throw ConfigError("unknown variant: " + name);
}

bool uses_hea(Variant v) { return v == Variant::kThea || v == Variant::kItfHea; }
bool uses_visual(Variant v) { return v == Variant::kItf || v == Variant::kItfHea; }

ModelParams ModelParams::zeros(const ModelShape& shape) {
    if (shape.d <= 0 || shape.d % 2 != 0)
        throw std::invalid_argument("model: d must be positive and even");
    ModelParams p;
    p.user_factors = Eigen::MatrixXd::Zero(shape.n_users, shape.d);
    p.video_factors = Eigen::MatrixXd::Zero(shape.n_videos, shape.d);
    p.text = TextEncoderParams::zeros(shape.vocab_size, shape.d);
    if (uses_hea(shape.variant)) p.hea = HeaParams::zeros(shape.d);
    if (uses_visual(shape.variant)) p.fusion = FusionParams::zeros(shape.visual_dim, shape.d);
    return p;
}

ModelParams ModelParams::zeros_like(const ModelParams& o) {
    ModelParams p;
    p.user_factors = Eigen::MatrixXd::Zero(o.user_factors.rows(), o.user_factors.cols());
    p.video_factors = Eigen::MatrixXd::Zero(o.video_factors.rows(), o.video_factors.cols());
    p.text.embedding = Eigen::MatrixXd::Zero(o.text.embedding.rows(), o.text.embedding.cols());
    auto cell_like = [](const LstmCell& c) {
        return LstmCell::zeros(c.input_size(), c.hidden_size());
    };
    p.text.forward_cell = cell_like(o.text.forward_cell);
    p.text.backward_cell = cell_like(o.text.backward_cell);
    p.hea.encoder = cell_like(o.hea.encoder);
    p.hea.decoder = cell_like(o.hea.decoder);
    p.fusion = FusionParams::zeros(o.fusion.visual_dim(), o.fusion.output_size());
    return p;
}

namespace {

void push_matrix(std::vector<TensorRef>& refs, const std::string& name, Eigen::MatrixXd& m) {
    if (m.size() > 0) refs.push_back({name, m.data(), m.rows(), m.cols()});
}
void push_vector(std::vector<TensorRef>& refs, const std::string& name, Eigen::VectorXd& v) {
    if (v.size() > 0) refs.push_back({name, v.data(), v.size(), 1});
}
void push_cell(std::vector<TensorRef>& refs, const std::string& prefix, LstmCell& c) {
    push_matrix(refs, prefix + ".w_x", c.w_x);
    push_matrix(refs, prefix + ".w_h", c.w_h);
    push_vector(refs, prefix + ".b", c.b);
}

}  // namespace

std::vector<TensorRef> tensor_refs(ModelParams& params) {
    std::vector<TensorRef> refs;
    push_matrix(refs, "user_factors", params.user_factors);
    push_matrix(refs, "video_factors", params.video_factors);
    push_matrix(refs, "embedding", params.text.embedding);
    push_cell(refs, "text_forward", params.text.forward_cell);
    push_cell(refs, "text_backward", params.text.backward_cell);
    push_cell(refs, "hea_encoder", params.hea.encoder);
    push_cell(refs, "hea_decoder", params.hea.decoder);
    push_matrix(refs, "fusion.w_visual", params.fusion.w_visual);
    push_vector(refs, "fusion.b_visual", params.fusion.b_visual);
    push_matrix(refs, "fusion.w_combine", params.fusion.w_combine);
    push_vector(refs, "fusion.b_combine", params.fusion.b_combine);
    return refs;
}

namespace {

void init_uniform(Eigen::MatrixXd& m, double bound, Rng& rng) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-bound, bound);
}

// Weights uniform, biases zero with the forget block at 1.
void init_cell(LstmCell& cell, double bound, Rng& rng) {
    if (cell.w_x.size() == 0) return;
    init_uniform(cell.w_x, bound, rng);
    init_uniform(cell.w_h, bound, rng);
    cell.b.setZero();
    cell.b.segment(cell.hidden_size(), cell.hidden_size()).setOnes();
}

}  // namespace

void init_params(ModelParams& params, int d, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    init_uniform(params.user_factors, bound, rng);
    init_uniform(params.video_factors, bound, rng);
    init_uniform(params.text.embedding, bound, rng);
    init_cell(params.text.forward_cell, bound, rng);
    init_cell(params.text.backward_cell, bound, rng);
    init_cell(params.hea.encoder, bound, rng);
    init_cell(params.hea.decoder, bound, rng);
    if (params.fusion.w_visual.size() > 0) {
        init_uniform(params.fusion.w_visual, bound, rng);
        params.fusion.b_visual.setZero();
        init_uniform(params.fusion.w_combine, bound, rng);
        params.fusion.b_combine.setZero();
    }
}

Eigen::VectorXd merge(const Eigen::VectorXd& factors, const Eigen::VectorXd& feature) {
    if (factors.size() != feature.size())
        throw std::invalid_argument("merge: width mismatch");
    return factors.cwiseProduct(feature);
}

double predict_interaction(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    return 1.0 / (1.0 + std::exp(-p.dot(q)));
}

double bce_objective(double pred, double label) {
    if (label != 0.0 && label != 1.0)
        throw std::invalid_argument("bce_objective: label must be 0 or 1");
    const double y = std::min(std::max(pred, kBceEps), 1.0 - kBceEps);
    return -(label * std::log(y) + (1.0 - label) * std::log(1.0 - y));
}

double bce_logit_grad(double pred, double label) {
    if (pred <= kBceEps || pred >= 1.0 - kBceEps) return 0.0;  // clamp active
    return pred - label;
}

double score_user_video(const Eigen::MatrixXd& user_factors,
                        const Eigen::MatrixXd& video_factors, int user, int video) {
    if (user < 0 || user >= user_factors.rows())
        throw std::invalid_argument("score_user_video: user row out of range");
    if (video < 0 || video >= video_factors.rows())
        throw std::invalid_argument("score_user_video: video row out of range");
    return user_factors.row(user).dot(video_factors.row(video));
}

double model_forward(const ModelParams& params, const ModelSettings& settings,
                     const PreparedExample& example, ForwardTrace* trace) {
    const Eigen::Index d = settings.d;
    if (params.text.output_size() != d)
        throw std::invalid_argument("model_forward: encoder width != d");
    if (example.member_tokens.empty())
        throw std::invalid_argument("model_forward: example has no slots");
    if (example.user < 0 || example.user >= params.user_factors.rows() ||
        example.video < 0 || example.video >= params.video_factors.rows())
        throw std::invalid_argument("model_forward: factor row out of range");

    ForwardTrace local;
    ForwardTrace& tr = trace ? *trace : local;

    if (uses_hea(settings.variant)) {
        const int m = static_cast<int>(example.member_tokens.size());
        tr.member_traces.assign(m, EncodeTrace{});
        tr.seq.resize(m, d);
        for (int j = 0; j < m; ++j)
            tr.seq.row(j) =
                encode_tokens(params.text, example.member_tokens[j], &tr.member_traces[j])
                    .transpose();
        tr.textual = apply_hea(tr.seq, example.timestamps, example.pad_mask, settings.beta,
                               settings.hea_mode, params.hea, &tr.attention);
    } else {
        tr.member_traces.assign(1, EncodeTrace{});
        tr.textual = encode_tokens(params.text, example.member_tokens.back(),
                                   &tr.member_traces[0]);
    }

    if (uses_visual(settings.variant)) {
        const Eigen::VectorXd visual = example.visual.size() > 0
                                           ? example.visual
                                           : Eigen::VectorXd::Zero(params.fusion.visual_dim());
        const Eigen::VectorXd proj = project_visual(params.fusion, visual, &tr.fusion);
        tr.feature = fuse(params.fusion, tr.textual, proj, &tr.fusion);
    } else {
        tr.feature = tr.textual;
    }

    tr.p = merge(params.user_factors.row(example.user).transpose(), tr.feature);
    tr.q = merge(params.video_factors.row(example.video).transpose(), tr.feature);
    tr.logit = tr.p.dot(tr.q);
    tr.prediction = 1.0 / (1.0 + std::exp(-tr.logit));
    return tr.prediction;
}

void model_backward(const ModelParams& params, const ModelSettings& settings,
                    const PreparedExample& example, const ForwardTrace& trace,
                    ModelParams& grads) {
    const double dlogit = bce_logit_grad(trace.prediction, example.label);

    const Eigen::VectorXd gu = params.user_factors.row(example.user).transpose();
    const Eigen::VectorXd gv = params.video_factors.row(example.video).transpose();
    const Eigen::VectorXd dp = dlogit * trace.q;
    const Eigen::VectorXd dq = dlogit * trace.p;

    grads.user_factors.row(example.user) += dp.cwiseProduct(trace.feature).transpose();
    grads.video_factors.row(example.video) += dq.cwiseProduct(trace.feature).transpose();
    Eigen::VectorXd dfeature = dp.cwiseProduct(gu) + dq.cwiseProduct(gv);

    Eigen::VectorXd dtextual;
    if (uses_visual(settings.variant)) {
        Eigen::VectorXd dproj;
        fuse_backward(params.fusion, trace.fusion, dfeature, dtextual, dproj, grads.fusion);
        project_visual_backward(params.fusion, trace.fusion, dproj, grads.fusion);
    } else {
        dtextual = dfeature;
    }

    if (uses_hea(settings.variant)) {
        const Eigen::MatrixXd dseq =
            hea_backward(params.hea, trace.seq, trace.attention, dtextual, grads.hea);
        const int m = static_cast<int>(example.member_tokens.size());
        for (int j = 0; j < m; ++j) {
            if (example.member_tokens[j].empty()) continue;
            encode_backward(params.text, trace.member_traces[j], dseq.row(j).transpose(),
                            grads.text);
        }
    } else {
        if (!example.member_tokens.back().empty())
            encode_backward(params.text, trace.member_traces[0], dtextual, grads.text);
    }
}

}  // namespace tscrec
