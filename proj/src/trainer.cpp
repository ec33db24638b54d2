#include "tscrec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "tscrec/errors.hpp"

namespace tscrec {

PreparedCorpus prepare_examples(const Dataset& dataset,
                                const std::vector<ContextWindow>& windows,
                                const Vocabulary& vocab, int l_max,
                                const VisualFeatureTable* features, Variant variant) {
    PreparedCorpus out;
    out.examples.reserve(windows.size());
    const bool need_context = uses_hea(variant);
    const bool need_visual = uses_visual(variant);
    const std::size_t max_tokens = static_cast<std::size_t>(l_max);

    for (const auto& w : windows) {
        const auto& target = dataset.comments[static_cast<std::size_t>(w.target)];
        PreparedExample ex;
        const int m = static_cast<int>(w.members.size());
        ex.member_tokens.resize(m);
        for (int j = 0; j < m; ++j) {
            if (w.members[j] == ContextWindow::kPadSlot) continue;
            if (!need_context && j != m - 1) continue;
            const auto& c = dataset.comments[static_cast<std::size_t>(w.members[j])];
            ex.member_tokens[j] = vocab.encode(tokenize(c.text, max_tokens));
        }
        ex.timestamps = w.timestamps;
        ex.pad_mask = w.pad_mask;
        ex.user = dataset.user_index.at(target.user_id);
        ex.video = dataset.video_index.at(target.video_id);
        ex.label = static_cast<double>(target.polarity);
        if (need_visual && features) {
            const auto* f = try_match_frame_feature(*features, target.video_id, target.video_time);
            if (f) {
                ex.visual = *f;
            } else {
                ex.visual = Eigen::VectorXd::Zero(features->dim);
                ++out.missing_visual;
            }
        }
        out.examples.push_back(std::move(ex));
    }
    return out;
}

double batch_mean_loss(const ModelParams& params, const ModelSettings& settings,
                       const std::vector<PreparedExample>& examples) {
    double sum = 0.0;
    for (const auto& ex : examples)
        sum += bce_objective(model_forward(params, settings, ex), ex.label);
    return sum / static_cast<double>(examples.size());
}

namespace {

// Adam with bias correction; moments share the parameter layout.
struct Adam {
    double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long long t = 0;
    ModelParams m, v;

    Adam(const ModelParams& like, double lr_in)
        : lr(lr_in), m(ModelParams::zeros_like(like)), v(ModelParams::zeros_like(like)) {}

    void step(ModelParams& params, ModelParams& grads, const std::set<std::string>& frozen) {
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        auto pr = tensor_refs(params);
        auto gr = tensor_refs(grads);
        auto mr = tensor_refs(m);
        auto vr = tensor_refs(v);
        for (std::size_t i = 0; i < pr.size(); ++i) {
            if (frozen.count(pr[i].name)) continue;
            double* p = pr[i].data;
            const double* g = gr[i].data;
            double* mm = mr[i].data;
            double* vv = vr[i].data;
            const Eigen::Index n = pr[i].size();
            for (Eigen::Index k = 0; k < n; ++k) {
                mm[k] = beta1 * mm[k] + (1.0 - beta1) * g[k];
                vv[k] = beta2 * vv[k] + (1.0 - beta2) * g[k] * g[k];
                const double mhat = mm[k] / bc1;
                const double vhat = vv[k] / bc2;
                p[k] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }
};

void zero_params(ModelParams& p) {
    for (auto& r : tensor_refs(p))
        std::fill(r.data, r.data + r.size(), 0.0);
}

std::set<std::string> resolve_freeze(const std::vector<std::string>& freeze,
                                     ModelParams& params) {
    std::set<std::string> names;
    for (auto& r : tensor_refs(params)) names.insert(r.name);
    std::set<std::string> frozen;
    for (const auto& f : freeze) {
        if (!names.count(f)) throw ConfigError("freeze: unknown tensor \"" + f + "\"");
        frozen.insert(f);
    }
    return frozen;
}

std::string param_norms(ModelParams& params) {
    std::ostringstream os;
    for (auto& r : tensor_refs(params)) {
        double sq = 0.0;
        for (Eigen::Index i = 0; i < r.size(); ++i) sq += r.data[i] * r.data[i];
        os << " " << r.name << "=" << std::sqrt(sq);
    }
    return os.str();
}

}  // namespace

FitResult fit(const Dataset& train, const VisualFeatureTable* features, const TrainConfig& cfg,
              const Checkpoint* warm_start) {
    if (train.comments.empty()) throw DataError("fit: empty training corpus");
    if (cfg.model.d <= 0 || cfg.model.d % 2 != 0)
        throw ConfigError("fit: d must be positive and even");
    if (cfg.model.m < 1) throw ConfigError("fit: m must be >= 1");
    if (cfg.model.beta < 0.0) throw ConfigError("fit: beta must be >= 0");
    if (cfg.learning_rate < 0.0) throw ConfigError("fit: learning rate must be >= 0");
    if (cfg.batch_size < 1) throw ConfigError("fit: batch size must be >= 1");
    if (cfg.epochs < 1) throw ConfigError("fit: epochs must be >= 1");
    if (uses_visual(cfg.model.variant) && !features)
        throw ConfigError("fit: variant needs a frame feature table");

    FitResult result;
    Checkpoint& ckpt = result.checkpoint;

    if (warm_start) {
        ckpt = *warm_start;
    } else {
        std::vector<std::string> texts;
        texts.reserve(train.comments.size());
        for (const auto& c : train.comments) texts.push_back(c.text);
        ckpt.vocab = build_vocab(texts, cfg.min_count, static_cast<std::size_t>(cfg.l_max));
        ckpt.users.resize(train.user_index.size());
        for (const auto& [id, idx] : train.user_index)
            ckpt.users[static_cast<std::size_t>(idx)] = id;
        ckpt.videos.resize(train.video_index.size());
        for (const auto& [id, idx] : train.video_index)
            ckpt.videos[static_cast<std::size_t>(idx)] = id;

        ModelShape shape;
        shape.variant = cfg.model.variant;
        shape.d = cfg.model.d;
        shape.vocab_size = ckpt.vocab.size();
        shape.n_users = static_cast<int>(ckpt.users.size());
        shape.n_videos = static_cast<int>(ckpt.videos.size());
        shape.visual_dim = uses_visual(cfg.model.variant) ? features->dim : 0;
        ckpt.params = ModelParams::zeros(shape);
        Rng init_rng(cfg.seed);
        init_params(ckpt.params, cfg.model.d, init_rng);
    }

    ckpt.manifest.format_version = kCheckpointFormatVersion;
    ckpt.manifest.model_variant = to_string(cfg.model.variant);
    ckpt.manifest.hea_mode = to_string(cfg.model.hea_mode);
    ckpt.manifest.d = cfg.model.d;
    ckpt.manifest.m = cfg.model.m;
    ckpt.manifest.beta = cfg.model.beta;
    ckpt.manifest.vocab_size = ckpt.vocab.size();
    ckpt.manifest.visual_dim = uses_visual(cfg.model.variant) && features ? features->dim : 0;
    ckpt.manifest.l_max = cfg.l_max;
    ckpt.manifest.seed = static_cast<long long>(cfg.seed);
    ckpt.manifest.parameter_blob_path = "params.bin";

    if (warm_start) {
        if (ckpt.params.user_factors.cols() != cfg.model.d)
            throw DataError("fit: warm start width does not match config");
        if (static_cast<std::size_t>(ckpt.params.user_factors.rows()) != train.user_index.size() ||
            static_cast<std::size_t>(ckpt.params.video_factors.rows()) != train.video_index.size())
            throw DataError("fit: warm start index does not match corpus");
    }

    const auto windows = build_context_windows(train, cfg.model.m);
    auto prepared = prepare_examples(train, windows, ckpt.vocab, cfg.l_max, features,
                                     cfg.model.variant);
    result.missing_visual = prepared.missing_visual;
    auto& examples = prepared.examples;

    // Optional validation holdout for early stopping.
    std::vector<std::size_t> train_idx(examples.size());
    std::iota(train_idx.begin(), train_idx.end(), std::size_t{0});
    std::vector<PreparedExample> validation;
    if (cfg.patience > 0) {
        Rng split_rng(cfg.seed ^ 0xA5A5A5A5A5A5A5A5ULL);
        split_rng.shuffle(train_idx);
        const std::size_t n_val =
            std::min(examples.size() - 1,
                     static_cast<std::size_t>(cfg.validation_fraction *
                                              static_cast<double>(examples.size())));
        for (std::size_t i = 0; i < n_val; ++i)
            validation.push_back(examples[train_idx[train_idx.size() - 1 - i]]);
        train_idx.resize(train_idx.size() - n_val);
        std::sort(train_idx.begin(), train_idx.end());
    }

    auto frozen = resolve_freeze(cfg.freeze, ckpt.params);
    Adam adam(ckpt.params, cfg.learning_rate);
    ModelParams grads = ModelParams::zeros_like(ckpt.params);
    Rng order_rng(cfg.seed ^ 0x5DEECE66DULL);

    double best_val = std::numeric_limits<double>::infinity();
    int stall = 0;

    std::vector<std::size_t> order = train_idx;
    std::vector<double> per_example_loss(examples.size(), 0.0);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        std::fill(per_example_loss.begin(), per_example_loss.end(), 0.0);

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            zero_params(grads);
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                const auto& ex = examples[order[i]];
                ForwardTrace trace;
                const double pred = model_forward(ckpt.params, cfg.model, ex, &trace);
                const double loss = bce_objective(pred, ex.label);
                per_example_loss[order[i]] = loss;
                batch_loss += loss;
                model_backward(ckpt.params, cfg.model, ex, trace, grads);
            }
            const double scale = 1.0 / static_cast<double>(end - start);
            if (!std::isfinite(batch_loss)) {
                std::ostringstream msg;
                msg << "fit: non-finite loss at epoch " << epoch << ", batch "
                    << (start / static_cast<std::size_t>(cfg.batch_size)) << "; parameter norms:"
                    << param_norms(ckpt.params);
                throw std::runtime_error(msg.str());
            }
            for (auto& r : tensor_refs(grads))
                for (Eigen::Index k = 0; k < r.size(); ++k) r.data[k] *= scale;
            adam.step(ckpt.params, grads, frozen);
        }

        // Mean over the epoch's processed examples, summed in id order so the
        // log does not depend on the shuffle.
        double sum = 0.0;
        for (std::size_t idx : train_idx) sum += per_example_loss[idx];
        result.epoch_mean_loss.push_back(sum / static_cast<double>(train_idx.size()));
        result.epochs_run = epoch;

        if (cfg.patience > 0 && !validation.empty()) {
            const double val = batch_mean_loss(ckpt.params, cfg.model, validation);
            if (val < best_val) {
                best_val = val;
                stall = 0;
            } else if (++stall >= cfg.patience) {
                break;
            }
        }
    }
    return result;
}

// ---- gradient verification ---------------------------------------------------

namespace {

// Small deterministic corpus exercising every code path: multi-token texts,
// a short history (pads), repeated users/videos, both labels.
Dataset gradcheck_dataset() {
    Dataset ds;
    auto add = [&ds](const char* id, const char* user, const char* video, double t,
                     const char* text, int pol) {
        ds.comments.push_back({id, user, video, t, text, pol});
    };
    add("c01", "u1", "v1", 1.0, "alpha beta gamma", 1);
    add("c02", "u2", "v1", 3.0, "beta delta", 0);
    add("c03", "u1", "v1", 6.0, "gamma epsilon alpha zeta", 1);
    add("c04", "u2", "v1", 10.0, "delta alpha", 1);
    add("c05", "u1", "v2", 2.0, "eta theta", 0);
    add("c06", "u2", "v2", 5.0, "theta iota kappa", 1);
    add("c07", "u1", "v2", 9.0, "kappa eta lambda mu", 0);
    sort_canonical(ds.comments);
    ds.rebuild_indices();
    return ds;
}

VisualFeatureTable gradcheck_features(int dim, std::uint64_t seed) {
    VisualFeatureTable table;
    table.dim = dim;
    Rng rng(seed);
    for (const char* vid : {"v1", "v2"}) {
        for (double t : {0.0, 4.0}) {
            Eigen::VectorXd v(dim);
            for (int i = 0; i < dim; ++i) v[i] = rng.gaussian();
            table.videos[vid].emplace_back(t, v);
        }
    }
    return table;
}

}  // namespace

std::vector<TensorCheckReport> gradient_check(const TrainConfig& cfg, double fd_step,
                                              int min_coords) {
    const Dataset ds = gradcheck_dataset();
    const VisualFeatureTable features = gradcheck_features(6, cfg.seed + 17);
    const VisualFeatureTable* feat = uses_visual(cfg.model.variant) ? &features : nullptr;

    std::vector<std::string> texts;
    for (const auto& c : ds.comments) texts.push_back(c.text);
    const Vocabulary vocab = build_vocab(texts, 1, static_cast<std::size_t>(cfg.l_max));

    ModelShape shape;
    shape.variant = cfg.model.variant;
    shape.d = cfg.model.d;
    shape.vocab_size = vocab.size();
    shape.n_users = static_cast<int>(ds.user_index.size());
    shape.n_videos = static_cast<int>(ds.video_index.size());
    shape.visual_dim = feat ? features.dim : 0;
    ModelParams params = ModelParams::zeros(shape);
    Rng rng(cfg.seed);
    init_params(params, cfg.model.d, rng);

    const auto windows = build_context_windows(ds, cfg.model.m);
    const auto prepared =
        prepare_examples(ds, windows, vocab, cfg.l_max, feat, cfg.model.variant);
    const auto& examples = prepared.examples;

    // Analytic gradient of the mean loss.
    ModelParams grads = ModelParams::zeros_like(params);
    for (const auto& ex : examples) {
        ForwardTrace trace;
        model_forward(params, cfg.model, ex, &trace);
        model_backward(params, cfg.model, ex, trace, grads);
    }
    const double scale = 1.0 / static_cast<double>(examples.size());
    for (auto& r : tensor_refs(grads))
        for (Eigen::Index k = 0; k < r.size(); ++k) r.data[k] *= scale;

    const std::set<std::string> frozen(cfg.freeze.begin(), cfg.freeze.end());
    auto prefs = tensor_refs(params);
    auto grefs = tensor_refs(grads);

    std::vector<TensorCheckReport> reports;
    for (std::size_t ti = 0; ti < prefs.size(); ++ti) {
        TensorCheckReport rep;
        rep.name = prefs[ti].name;
        if (frozen.count(rep.name)) {
            rep.skipped = true;
            reports.push_back(rep);
            continue;
        }
        const Eigen::Index size = prefs[ti].size();
        std::vector<Eigen::Index> coords;
        if (size <= std::max<Eigen::Index>(64, min_coords)) {
            for (Eigen::Index k = 0; k < size; ++k) coords.push_back(k);
        } else {
            const Eigen::Index n = std::max<Eigen::Index>(min_coords, 24);
            for (Eigen::Index k = 0; k < n; ++k) coords.push_back(k * size / n);
        }
        for (const Eigen::Index k : coords) {
            double* slot = prefs[ti].data + k;
            const double saved = *slot;
            *slot = saved + fd_step;
            const double up = batch_mean_loss(params, cfg.model, examples);
            *slot = saved - fd_step;
            const double down = batch_mean_loss(params, cfg.model, examples);
            *slot = saved;
            const double numeric = (up - down) / (2.0 * fd_step);
            const double analytic = grefs[ti].data[k];
            const double denom =
                std::max({std::abs(analytic), std::abs(numeric), 1e-6});
            rep.max_rel_err = std::max(rep.max_rel_err, std::abs(analytic - numeric) / denom);
            ++rep.coords_checked;
        }
        reports.push_back(rep);
    }
    return reports;
}

}  // namespace tscrec
