#include "tscrec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tscrec/errors.hpp"
#include "tscrec/rng.hpp"
#include "tscrec/vocab.hpp"

namespace tscrec {
namespace {

std::string indexed_id(const char* prefix, int width, int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, index);
    return std::string(buf);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<std::string> split_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

}  // namespace

SynthOutput generate(const SynthConfig& cfg) {
    if (cfg.n_users < 1 || cfg.n_videos < 1 || cfg.n_comments < 1)
        throw ConfigError("synth: user/video/comment counts must be positive");
    if (cfg.latent_dim < 1) throw ConfigError("synth: latent_dim must be positive");
    if (cfg.herd_prob < 0.0 || cfg.herd_prob > 1.0)
        throw ConfigError("synth: herd_prob must lie in [0,1]");
    if (cfg.herd_window < 0.0) throw ConfigError("synth: herd_window must be nonnegative");
    if (cfg.pos_vocab < 1 || cfg.neg_vocab < 1)
        throw ConfigError("synth: token pools must be nonempty");
    if (cfg.visual_dim < 1) throw ConfigError("synth: visual_dim must be positive");
    if (cfg.video_duration <= 0.0 || cfg.frame_interval <= 0.0)
        throw ConfigError("synth: video_duration and frame_interval must be positive");

    Rng rng(cfg.seed);
    SynthOutput out;

    for (int u = 0; u < cfg.n_users; ++u) out.user_ids.push_back(indexed_id("u", 3, u));
    for (int v = 0; v < cfg.n_videos; ++v) out.video_ids.push_back(indexed_id("v", 3, v));

    // Latents scaled so the dot product has roughly unit variance, keeping
    // sigmoid(u . v) spread across (0,1) instead of saturating.
    const double scale = std::pow(static_cast<double>(cfg.latent_dim), -0.25);
    Eigen::MatrixXd user_latent(cfg.latent_dim, cfg.n_users);
    Eigen::MatrixXd video_latent(cfg.latent_dim, cfg.n_videos);
    for (int u = 0; u < cfg.n_users; ++u)
        for (int k = 0; k < cfg.latent_dim; ++k) user_latent(k, u) = scale * rng.gaussian();
    for (int v = 0; v < cfg.n_videos; ++v)
        for (int k = 0; k < cfg.latent_dim; ++k) video_latent(k, v) = scale * rng.gaussian();

    out.affinity.resize(cfg.n_users, cfg.n_videos);
    for (int u = 0; u < cfg.n_users; ++u)
        for (int v = 0; v < cfg.n_videos; ++v)
            out.affinity(u, v) = sigmoid(user_latent.col(u).dot(video_latent.col(v)));

    // Draw the who/where/when of every comment, then sort into timeline order
    // so herding can copy from genuine predecessors.
    std::vector<TimeSyncComment> comments(static_cast<std::size_t>(cfg.n_comments));
    for (int i = 0; i < cfg.n_comments; ++i) {
        TimeSyncComment& c = comments[static_cast<std::size_t>(i)];
        c.tsc_id = indexed_id("c", 6, i);
        int u = rng.uniform_int(cfg.n_users);
        int v = rng.uniform_int(cfg.n_videos);
        c.user_id = out.user_ids[static_cast<std::size_t>(u)];
        c.video_id = out.video_ids[static_cast<std::size_t>(v)];
        c.video_time = rng.uniform(0.0, cfg.video_duration);
        c.polarity = rng.uniform() < out.affinity(u, v) ? 1 : 0;
        c.text.clear();
    }
    sort_canonical(comments);

    // Texts in timeline order: herded comments copy most of a predecessor's
    // tokens, the rest draw fresh tokens matching their own polarity.
    std::map<std::string, std::vector<std::size_t>> per_video;  // indices in timeline order
    for (std::size_t i = 0; i < comments.size(); ++i) {
        TimeSyncComment& c = comments[i];
        std::vector<std::size_t>& history = per_video[c.video_id];

        std::vector<std::size_t> sources;
        for (std::size_t j : history) {
            double gap = c.video_time - comments[j].video_time;
            if (gap >= 0.0 && gap <= cfg.herd_window) sources.push_back(j);
        }

        const int length = 4 + rng.uniform_int(5);  // 4..8 distinct tokens
        std::set<std::string> chosen;
        if (!sources.empty() && rng.uniform() < cfg.herd_prob) {
            std::size_t src = sources[static_cast<std::size_t>(
                rng.uniform_int(static_cast<int>(sources.size())))];
            std::vector<std::string> pool = split_tokens(comments[src].text);
            std::set<std::string> distinct(pool.begin(), pool.end());
            pool.assign(distinct.begin(), distinct.end());
            rng.shuffle(pool);
            std::size_t want = static_cast<std::size_t>(
                std::ceil(0.6 * static_cast<double>(length)));
            want = std::min(want, pool.size());
            chosen.insert(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(want));
        }
        const char* pool_prefix = c.polarity == 1 ? "pos" : "neg";
        const int pool_size = c.polarity == 1 ? cfg.pos_vocab : cfg.neg_vocab;
        int guard = 0;
        while (static_cast<int>(chosen.size()) < length && guard++ < 1000)
            chosen.insert(indexed_id(pool_prefix, 3, rng.uniform_int(pool_size)));

        std::string text;
        for (const std::string& tok : chosen) {
            if (!text.empty()) text += ' ';
            text += tok;
        }
        c.text = text;
        history.push_back(i);
    }

    // Per-user split: half of the user's videos feed training comments, the
    // other half become unseen test interactions.
    std::map<std::string, std::set<std::string>> user_videos;
    for (const TimeSyncComment& c : comments) user_videos[c.user_id].insert(c.video_id);
    std::map<std::string, std::set<std::string>> test_side;
    for (const auto& [user, vids] : user_videos) {
        std::vector<std::string> order(vids.begin(), vids.end());
        rng.shuffle(order);
        std::size_t n_train = order.size() / 2;
        for (std::size_t i = n_train; i < order.size(); ++i) test_side[user].insert(order[i]);
    }

    for (const TimeSyncComment& c : comments) {
        const std::set<std::string>& tv = test_side[c.user_id];
        if (tv.count(c.video_id))
            out.test.comments.push_back(c);
        else
            out.train.comments.push_back(c);
    }
    sort_canonical(out.train.comments);
    sort_canonical(out.test.comments);
    out.train.rebuild_indices();
    out.test.rebuild_indices();

    // Frame features: fixed random mixing of the video latent plus noise.
    Eigen::MatrixXd mix(cfg.visual_dim, cfg.latent_dim);
    const double mix_scale = 1.0 / std::sqrt(static_cast<double>(cfg.latent_dim));
    for (int r = 0; r < cfg.visual_dim; ++r)
        for (int k = 0; k < cfg.latent_dim; ++k) mix(r, k) = mix_scale * rng.gaussian();
    out.features.dim = cfg.visual_dim;
    for (int v = 0; v < cfg.n_videos; ++v) {
        Eigen::VectorXd base = mix * video_latent.col(v);
        std::vector<std::pair<double, Eigen::VectorXd>>& frames =
            out.features.videos[out.video_ids[static_cast<std::size_t>(v)]];
        for (double t = 0.0; t < cfg.video_duration; t += cfg.frame_interval) {
            Eigen::VectorXd f = base;
            for (int r = 0; r < cfg.visual_dim; ++r) f(r) += 0.1 * rng.gaussian();
            frames.emplace_back(t, std::move(f));
        }
    }
    return out;
}

double measure_herding(const std::vector<TimeSyncComment>& comments, double window) {
    if (comments.empty()) return 0.0;
    std::vector<TimeSyncComment> ordered = comments;
    sort_canonical(ordered);
    std::map<std::string, std::vector<std::size_t>> per_video;
    std::size_t herded = 0;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        const TimeSyncComment& c = ordered[i];
        std::vector<std::string> toks = split_tokens(c.text);
        std::set<std::string> own(toks.begin(), toks.end());
        bool found = false;
        for (std::size_t j : per_video[c.video_id]) {
            double gap = c.video_time - ordered[j].video_time;
            if (gap < 0.0 || gap > window) continue;
            std::vector<std::string> prev = split_tokens(ordered[j].text);
            std::set<std::string> prev_set(prev.begin(), prev.end());
            std::size_t shared = 0;
            for (const std::string& t : own)
                if (prev_set.count(t)) ++shared;
            if (!own.empty() && 2 * shared >= own.size()) {
                found = true;
                break;
            }
        }
        if (found) ++herded;
        per_video[c.video_id].push_back(i);
    }
    return static_cast<double>(herded) / static_cast<double>(ordered.size());
}

void save_affinities(const std::string& path, const SynthOutput& out) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot open for writing: " + path);
    for (std::size_t u = 0; u < out.user_ids.size(); ++u)
        for (std::size_t v = 0; v < out.video_ids.size(); ++v) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.9g",
                          out.affinity(static_cast<Eigen::Index>(u),
                                       static_cast<Eigen::Index>(v)));
            file << out.user_ids[u] << '\t' << out.video_ids[v] << '\t' << buf << '\n';
        }
    if (!file.good()) throw DataError("write failed: " + path);
}

}  // namespace tscrec
