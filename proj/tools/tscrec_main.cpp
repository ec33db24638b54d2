// tscrec: batch CLI over the time-sync-comment recommender library.
// Subcommands: synth, train, evaluate, recommend, gradcheck, sweep-beta.
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 runtime failure.

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "tscrec/attention.hpp"
#include "tscrec/comment.hpp"
#include "tscrec/corpus_io.hpp"
#include "tscrec/errors.hpp"
#include "tscrec/evaluator.hpp"
#include "tscrec/model.hpp"
#include "tscrec/synth.hpp"
#include "tscrec/trainer.hpp"
#include "tscrec/vocab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tscrec;

namespace {

std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string g9(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << body;
    if (!out.good()) throw DataError("write failed: " + path);
}

void report_corpus_stats(const std::string& path, const CorpusLoadStats& stats) {
    if (stats.rejects.empty()) return;
    std::cerr << "warning: " << path << ": rejected " << stats.rejects.size() << " of "
              << stats.total_records << " records\n";
    std::size_t shown = std::min<std::size_t>(stats.rejects.size(), 5);
    for (std::size_t i = 0; i < shown; ++i)
        std::cerr << "  line " << stats.rejects[i].first << ": " << stats.rejects[i].second
                  << "\n";
}

Dataset load_corpus_verbose(const std::string& path) {
    CorpusLoadStats stats;
    Dataset d = load_tsc_corpus(path, &stats);
    report_corpus_stats(path, stats);
    return d;
}

std::optional<VisualFeatureTable> load_features_opt(const std::string& path) {
    if (path.empty()) return std::nullopt;
    FeatureLoadStats stats;
    VisualFeatureTable table = load_visual_features(path, &stats);
    for (const std::string& w : stats.warnings) std::cerr << "warning: " << path << ": " << w << "\n";
    return table;
}

// ---- JSON config file merged under explicit flags (flags win) ---------------

using ConfigSetters = std::map<std::string, std::function<void(const json&)>>;

void merge_config_file(CLI::App* cmd, const std::string& path, const ConfigSetters& setters) {
    if (path.empty()) return;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file " + path + " must hold a JSON object");
    for (const auto& [key, value] : j.items()) {
        auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError("unknown config key: " + key);
        if (cmd->count("--" + key) > 0) continue;  // explicit flag wins
        try {
            it->second(value);
        } catch (const json::exception& e) {
            throw ConfigError("config key '" + key + "': " + e.what());
        }
    }
}

// ---- shared evaluate/sweep plumbing -----------------------------------------

struct EvalInputs {
    std::vector<TestPair> truth;  // pairs scoreable by the checkpoint
    ScoreTable scores;
    std::vector<std::string> unknown_users;    // in truth, absent from checkpoint
    std::vector<std::string> excluded_videos;  // in test corpus, absent from checkpoint
};

EvalInputs build_eval_inputs(const Checkpoint& ckpt, const Dataset& test) {
    EvalInputs out;
    std::vector<TestPair> truth = build_ground_truth(test.comments);
    std::map<std::string, int> users = ckpt.user_map();
    std::map<std::string, int> videos = ckpt.video_map();

    std::set<std::string> candidates, excluded;
    for (const auto& [video, idx] : test.video_index)
        (videos.count(video) ? candidates : excluded).insert(video);
    out.excluded_videos.assign(excluded.begin(), excluded.end());

    std::set<std::string> unknown;
    for (const TestPair& pair : truth) {
        if (!users.count(pair.user_id)) {
            unknown.insert(pair.user_id);
            continue;
        }
        if (!videos.count(pair.video_id)) continue;  // unscoreable pair
        out.truth.push_back(pair);
    }
    out.unknown_users.assign(unknown.begin(), unknown.end());

    for (const TestPair& pair : out.truth) {
        if (out.scores.count(pair.user_id)) continue;
        int u = users.at(pair.user_id);
        std::vector<std::pair<std::string, double>>& row = out.scores[pair.user_id];
        row.reserve(candidates.size());
        for (const std::string& video : candidates)
            row.emplace_back(video, score_user_video(ckpt.params.user_factors,
                                                     ckpt.params.video_factors, u,
                                                     videos.at(video)));
    }
    return out;
}

json report_to_json(const std::vector<TopxReport>& reports, const EvalInputs& inputs,
                    const std::string& variant) {
    json results = json::array();
    for (const TopxReport& rep : reports) {
        json per_user = json::array();
        for (const UserTopx& u : rep.per_user) {
            per_user.push_back({{"user_id", u.user_id},
                                {"recommended", u.recommended},
                                {"precision", u.precision},
                                {"recall", u.recall},
                                {"f1", u.f1},
                                {"positives", u.positives},
                                {"candidates", u.candidates},
                                {"in_recall_average", u.in_recall_average}});
        }
        results.push_back({{"x", rep.x},
                           {"precision", rep.precision},
                           {"recall", rep.recall},
                           {"f1", rep.f1},
                           {"users_evaluated", rep.users_evaluated},
                           {"skipped_users", rep.skipped_users},
                           {"per_user", std::move(per_user)}});
    }
    return json{{"model_variant", variant},
                {"results", std::move(results)},
                {"unknown_users", inputs.unknown_users},
                {"excluded_videos", inputs.excluded_videos}};
}

// ---- synth -------------------------------------------------------------------

struct SynthArgs {
    CLI::App* cmd = nullptr;
    SynthConfig cfg;
    std::string out;
    std::string config_file;
};

void wire_synth(CLI::App& app, SynthArgs& a) {
    CLI::App* cmd = app.add_subcommand("synth", "generate a seeded synthetic comment corpus");
    a.cmd = cmd;
    cmd->add_option("--users", a.cfg.n_users, "number of users")->capture_default_str();
    cmd->add_option("--videos", a.cfg.n_videos, "number of videos")->capture_default_str();
    cmd->add_option("--comments", a.cfg.n_comments, "number of comments")->capture_default_str();
    cmd->add_option("--latent-dim", a.cfg.latent_dim, "ground-truth latent width")
        ->capture_default_str();
    cmd->add_option("--herd-prob", a.cfg.herd_prob,
                    "chance a comment copies a recent predecessor")
        ->capture_default_str();
    cmd->add_option("--herd-window", a.cfg.herd_window, "copyable predecessor age, seconds")
        ->capture_default_str();
    cmd->add_option("--pos-vocab", a.cfg.pos_vocab, "positive token pool size")
        ->capture_default_str();
    cmd->add_option("--neg-vocab", a.cfg.neg_vocab, "negative token pool size")
        ->capture_default_str();
    cmd->add_option("--visual-dim", a.cfg.visual_dim, "frame feature width")
        ->capture_default_str();
    cmd->add_option("--duration", a.cfg.video_duration, "video length, seconds")
        ->capture_default_str();
    cmd->add_option("--frame-interval", a.cfg.frame_interval, "seconds between frames")
        ->capture_default_str();
    cmd->add_option("--seed", a.cfg.seed, "generator seed")->capture_default_str();
    cmd->add_option("--out", a.out, "output directory")->required();
    cmd->add_option("--config", a.config_file, "JSON config file (explicit flags win)");
}

int run_synth(SynthArgs& a) {
    ConfigSetters setters{
        {"users", [&](const json& v) { a.cfg.n_users = v.get<int>(); }},
        {"videos", [&](const json& v) { a.cfg.n_videos = v.get<int>(); }},
        {"comments", [&](const json& v) { a.cfg.n_comments = v.get<int>(); }},
        {"latent-dim", [&](const json& v) { a.cfg.latent_dim = v.get<int>(); }},
        {"herd-prob", [&](const json& v) { a.cfg.herd_prob = v.get<double>(); }},
        {"herd-window", [&](const json& v) { a.cfg.herd_window = v.get<double>(); }},
        {"pos-vocab", [&](const json& v) { a.cfg.pos_vocab = v.get<int>(); }},
        {"neg-vocab", [&](const json& v) { a.cfg.neg_vocab = v.get<int>(); }},
        {"visual-dim", [&](const json& v) { a.cfg.visual_dim = v.get<int>(); }},
        {"duration", [&](const json& v) { a.cfg.video_duration = v.get<double>(); }},
        {"frame-interval", [&](const json& v) { a.cfg.frame_interval = v.get<double>(); }},
        {"seed", [&](const json& v) { a.cfg.seed = v.get<std::uint64_t>(); }},
        {"out", [&](const json& v) { a.out = v.get<std::string>(); }},
    };
    merge_config_file(a.cmd, a.config_file, setters);

    SynthOutput out = generate(a.cfg);
    fs::create_directories(a.out);
    fs::path dir(a.out);
    save_tsc_corpus((dir / "train.jsonl").string(), out.train);
    save_tsc_corpus((dir / "test.jsonl").string(), out.test);
    save_visual_features((dir / "features.tsv").string(), out.features);
    save_affinities((dir / "affinity.tsv").string(), out);

    std::vector<TimeSyncComment> all = out.train.comments;
    all.insert(all.end(), out.test.comments.begin(), out.test.comments.end());
    double herding = measure_herding(all, a.cfg.herd_window);

    std::cout << "synth: users=" << a.cfg.n_users << " videos=" << a.cfg.n_videos
              << " comments=" << a.cfg.n_comments << " train=" << out.train.comments.size()
              << " test=" << out.test.comments.size() << " herding=" << g9(herding) << " -> "
              << a.out << "\n";
    return 0;
}

// ---- train -------------------------------------------------------------------

struct TrainArgs {
    CLI::App* cmd = nullptr;
    std::string corpus, features, out, dump_attention, config_file;
    std::string variant = "tm";
    std::string hea_mode = "literal";
    TrainConfig cfg;
    std::string freeze_joined;  // CLI collects a vector; kept in cfg.freeze
};

void wire_train_like_options(CLI::App* cmd, TrainArgs& a, bool with_beta_m) {
    cmd->add_option("--corpus", a.corpus, "training corpus (JSON lines)")->required();
    cmd->add_option("--features", a.features, "frame feature table (visual variants)");
    cmd->add_option("--variant", a.variant, "model variant: tm, t-hea, itf, itf-hea")
        ->capture_default_str();
    cmd->add_option("--d", a.cfg.model.d, "latent width")->capture_default_str();
    if (with_beta_m) {
        cmd->add_option("--m,--context-size", a.cfg.model.m, "context window length")
            ->capture_default_str();
        cmd->add_option("--beta", a.cfg.model.beta, "time-decay rate")->capture_default_str();
    }
    cmd->add_option("--hea-mode", a.hea_mode, "attention softmax mode: literal or masked")
        ->capture_default_str();
    cmd->add_option("--lr", a.cfg.learning_rate, "Adam learning rate")->capture_default_str();
    cmd->add_option("--batch-size", a.cfg.batch_size, "examples per update")
        ->capture_default_str();
    cmd->add_option("--epochs", a.cfg.epochs, "training epochs")->capture_default_str();
    cmd->add_option("--seed", a.cfg.seed, "initialization and shuffle seed")
        ->capture_default_str();
    cmd->add_option("--l-max", a.cfg.l_max, "token truncation length")->capture_default_str();
    cmd->add_option("--min-count", a.cfg.min_count, "vocabulary frequency threshold")
        ->capture_default_str();
    cmd->add_option("--patience", a.cfg.patience,
                    "early-stopping patience in epochs (0 disables)")
        ->capture_default_str();
    cmd->add_option("--validation-fraction", a.cfg.validation_fraction,
                    "held-out fraction when patience > 0")
        ->capture_default_str();
    cmd->add_option("--freeze", a.cfg.freeze, "tensor names excluded from updates")
        ->delimiter(',');
    cmd->add_option("--config", a.config_file, "JSON config file (explicit flags win)");
}

ConfigSetters train_setters(TrainArgs& a) {
    return ConfigSetters{
        {"corpus", [&](const json& v) { a.corpus = v.get<std::string>(); }},
        {"features", [&](const json& v) { a.features = v.get<std::string>(); }},
        {"variant", [&](const json& v) { a.variant = v.get<std::string>(); }},
        {"d", [&](const json& v) { a.cfg.model.d = v.get<int>(); }},
        {"m", [&](const json& v) { a.cfg.model.m = v.get<int>(); }},
        {"beta", [&](const json& v) { a.cfg.model.beta = v.get<double>(); }},
        {"hea-mode", [&](const json& v) { a.hea_mode = v.get<std::string>(); }},
        {"lr", [&](const json& v) { a.cfg.learning_rate = v.get<double>(); }},
        {"batch-size", [&](const json& v) { a.cfg.batch_size = v.get<int>(); }},
        {"epochs", [&](const json& v) { a.cfg.epochs = v.get<int>(); }},
        {"seed", [&](const json& v) { a.cfg.seed = v.get<std::uint64_t>(); }},
        {"l-max", [&](const json& v) { a.cfg.l_max = v.get<int>(); }},
        {"min-count", [&](const json& v) { a.cfg.min_count = v.get<int>(); }},
        {"patience", [&](const json& v) { a.cfg.patience = v.get<int>(); }},
        {"validation-fraction",
         [&](const json& v) { a.cfg.validation_fraction = v.get<double>(); }},
        {"freeze", [&](const json& v) { a.cfg.freeze = v.get<std::vector<std::string>>(); }},
        {"out", [&](const json& v) { a.out = v.get<std::string>(); }},
    };
}

void wire_train(CLI::App& app, TrainArgs& a) {
    CLI::App* cmd = app.add_subcommand("train", "fit one model variant and write a checkpoint");
    a.cmd = cmd;
    wire_train_like_options(cmd, a, /*with_beta_m=*/true);
    cmd->add_option("--out", a.out, "checkpoint directory to write")->required();
    cmd->add_option("--dump-attention", a.dump_attention,
                    "write the first window's attention trace as JSON (attention variants)");
}

std::string loss_csv(const std::vector<double>& losses) {
    std::string body = "epoch,mean_loss\n";
    for (std::size_t i = 0; i < losses.size(); ++i)
        body += std::to_string(i + 1) + "," + g17(losses[i]) + "\n";
    return body;
}

void dump_attention_trace(const std::string& path, const FitResult& result,
                          const Dataset& train, const VisualFeatureTable* features) {
    ModelSettings settings = result.checkpoint.settings();
    std::vector<ContextWindow> windows = build_context_windows(train, settings.m);
    PreparedCorpus prep = prepare_examples(train, windows, result.checkpoint.vocab,
                                           result.checkpoint.manifest.l_max, features,
                                           settings.variant);
    if (prep.examples.empty()) throw DataError("no context windows to trace");
    ForwardTrace trace;
    model_forward(result.checkpoint.params, settings, prep.examples.front(), &trace);
    const AttentionTrace& at = trace.attention;
    json j{{"mode", to_string(at.mode)},
           {"beta", settings.beta},
           {"m", settings.m},
           {"similarity", matrix_json(at.similarity)},
           {"similarity_norm", matrix_json(at.similarity_norm)},
           {"decay", matrix_json(at.decay)},
           {"scores", matrix_json(at.scores)},
           {"weights", matrix_json(at.weights)},
           {"encoder_states", matrix_json(at.encoder_states)},
           {"contexts", matrix_json(at.contexts)},
           {"output", vector_json(at.output)}};
    write_text_file(path, j.dump(2) + "\n");
}

int run_train(TrainArgs& a) {
    ConfigSetters setters = train_setters(a);
    ConfigSetters extra{{"dump-attention",
                         [&](const json& v) { a.dump_attention = v.get<std::string>(); }}};
    for (auto& [k, fn] : extra) setters.emplace(k, fn);
    merge_config_file(a.cmd, a.config_file, setters);

    a.cfg.model.variant = variant_from_string(a.variant);
    a.cfg.model.hea_mode = hea_mode_from_string(a.hea_mode);
    if (!a.dump_attention.empty() && !uses_hea(a.cfg.model.variant))
        throw ConfigError("--dump-attention requires an attention variant (t-hea, itf-hea)");

    Dataset train = load_corpus_verbose(a.corpus);
    std::optional<VisualFeatureTable> features = load_features_opt(a.features);
    const VisualFeatureTable* feat_ptr = features ? &*features : nullptr;

    FitResult result = fit(train, feat_ptr, a.cfg);
    if (result.missing_visual > 0)
        std::cerr << "warning: " << result.missing_visual
                  << " examples lacked frame features (zero-substituted)\n";

    // Stage into a scratch directory and swap in atomically so a failed run
    // never leaves a partial checkpoint at the target path.
    fs::path target(a.out);
    fs::path staging(a.out + ".staging");
    fs::remove_all(staging);
    try {
        save_checkpoint(staging.string(), result.checkpoint);
        write_text_file((staging / "loss.csv").string(), loss_csv(result.epoch_mean_loss));
        fs::remove_all(target);
        fs::rename(staging, target);
    } catch (...) {
        fs::remove_all(staging);
        throw;
    }

    if (!a.dump_attention.empty())
        dump_attention_trace(a.dump_attention, result, train, feat_ptr);

    double final_loss =
        result.epoch_mean_loss.empty() ? 0.0 : result.epoch_mean_loss.back();
    std::cout << "train: variant=" << a.variant << " epochs_run=" << result.epochs_run
              << " final_mean_loss=" << g9(final_loss) << " -> " << a.out << "\n";
    return 0;
}

// ---- evaluate ------------------------------------------------------------------

struct EvalArgs {
    CLI::App* cmd = nullptr;
    std::string checkpoint, test_corpus, out;
    std::vector<int> topx{5, 10, 20};
};

void wire_evaluate(CLI::App& app, EvalArgs& a) {
    CLI::App* cmd =
        app.add_subcommand("evaluate", "score a checkpoint against a held-out corpus");
    a.cmd = cmd;
    cmd->add_option("--checkpoint", a.checkpoint, "checkpoint directory")->required();
    cmd->add_option("--test-corpus", a.test_corpus, "held-out corpus (JSON lines)")->required();
    cmd->add_option("--topx", a.topx, "recommendation list sizes")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--out", a.out, "metrics report path (JSON)")->required();
}

int run_evaluate(EvalArgs& a) {
    Checkpoint ckpt = load_checkpoint(a.checkpoint);
    Dataset test = load_corpus_verbose(a.test_corpus);
    EvalInputs inputs = build_eval_inputs(ckpt, test);
    if (!inputs.unknown_users.empty())
        std::cerr << "warning: " << inputs.unknown_users.size()
                  << " users in the test corpus are unknown to the checkpoint\n";
    if (!inputs.excluded_videos.empty())
        std::cerr << "warning: " << inputs.excluded_videos.size()
                  << " test videos are unknown to the checkpoint and were excluded\n";
    if (inputs.truth.empty()) throw DataError("no scoreable (user, video) pairs in the test corpus");

    std::vector<TopxReport> reports;
    for (int x : a.topx) reports.push_back(topx_metrics(inputs.scores, inputs.truth, x));
    json j = report_to_json(reports, inputs, ckpt.manifest.model_variant);
    write_text_file(a.out, j.dump(2) + "\n");

    std::ostringstream xs;
    for (std::size_t i = 0; i < a.topx.size(); ++i) xs << (i ? "," : "") << a.topx[i];
    std::cout << "evaluate: variant=" << ckpt.manifest.model_variant
              << " pairs=" << inputs.truth.size() << " topx=" << xs.str() << " -> " << a.out
              << "\n";
    return 0;
}

// ---- recommend -------------------------------------------------------------------

struct RecommendArgs {
    CLI::App* cmd = nullptr;
    std::string checkpoint, user, test_corpus;
    std::vector<std::string> candidates;
    int topx = 10;
    bool as_json = false;
};

void wire_recommend(CLI::App& app, RecommendArgs& a) {
    CLI::App* cmd = app.add_subcommand("recommend", "rank candidate videos for one user");
    a.cmd = cmd;
    cmd->add_option("--checkpoint", a.checkpoint, "checkpoint directory")->required();
    cmd->add_option("--user", a.user, "user id")->required();
    cmd->add_option("--topx", a.topx, "list length")->capture_default_str();
    cmd->add_option("--test-corpus", a.test_corpus,
                    "corpus whose videos form the candidate set");
    cmd->add_option("--candidates", a.candidates, "explicit candidate video ids")
        ->delimiter(',');
    cmd->add_flag("--json", a.as_json, "emit one JSON object instead of text lines");
}

int run_recommend(RecommendArgs& a) {
    Checkpoint ckpt = load_checkpoint(a.checkpoint);
    std::map<std::string, int> users = ckpt.user_map();
    std::map<std::string, int> videos = ckpt.video_map();
    auto user_it = users.find(a.user);
    if (user_it == users.end()) throw DataError("unknown user: " + a.user);

    std::set<std::string> pool;
    if (!a.candidates.empty()) {
        for (const std::string& v : a.candidates) {
            if (videos.count(v))
                pool.insert(v);
            else
                std::cerr << "warning: candidate unknown to the checkpoint, skipped: " << v
                          << "\n";
        }
    } else if (!a.test_corpus.empty()) {
        Dataset test = load_corpus_verbose(a.test_corpus);
        for (const auto& [video, idx] : test.video_index)
            if (videos.count(video)) pool.insert(video);
    } else {
        throw ConfigError("recommend needs --test-corpus or --candidates");
    }
    if (pool.empty()) throw DataError("no candidate videos known to the checkpoint");
    if (a.topx < 1) throw ConfigError("--topx must be at least 1");

    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(pool.size());
    for (const std::string& video : pool)
        scored.emplace_back(video, score_user_video(ckpt.params.user_factors,
                                                    ckpt.params.video_factors, user_it->second,
                                                    videos.at(video)));
    std::stable_sort(scored.begin(), scored.end(), [](const auto& l, const auto& r) {
        if (l.second != r.second) return l.second > r.second;
        return l.first < r.first;
    });
    std::size_t take = std::min<std::size_t>(scored.size(), static_cast<std::size_t>(a.topx));

    if (a.as_json) {
        json recs = json::array();
        for (std::size_t i = 0; i < take; ++i)
            recs.push_back({{"rank", i + 1},
                            {"video_id", scored[i].first},
                            {"score", scored[i].second}});
        json j{{"user", a.user},
               {"topx", a.topx},
               {"candidates", scored.size()},
               {"recommendations", std::move(recs)}};
        std::cout << j.dump() << "\n";
        return 0;
    }
    for (std::size_t i = 0; i < take; ++i)
        std::cout << (i + 1) << "\t" << scored[i].first << "\t" << g9(scored[i].second) << "\n";
    std::cout << "recommend: user=" << a.user << " returned=" << take
              << " candidates=" << scored.size() << "\n";
    return 0;
}

// ---- gradcheck --------------------------------------------------------------------

struct GradcheckArgs {
    CLI::App* cmd = nullptr;
    std::string variant = "tm";
    std::string hea_mode = "literal";
    TrainConfig cfg;
    double fd_step = 1e-5;
    double tolerance = 1e-4;
    int min_coords = 20;
};

void wire_gradcheck(CLI::App& app, GradcheckArgs& a) {
    a.cfg.model.d = 8;
    a.cfg.model.m = 3;
    CLI::App* cmd = app.add_subcommand(
        "gradcheck", "compare analytic gradients with finite differences (report only)");
    a.cmd = cmd;
    cmd->add_option("--variant", a.variant, "model variant: tm, t-hea, itf, itf-hea")
        ->capture_default_str();
    cmd->add_option("--d", a.cfg.model.d, "latent width")->capture_default_str();
    cmd->add_option("--m,--context-size", a.cfg.model.m, "context window length")
        ->capture_default_str();
    cmd->add_option("--beta", a.cfg.model.beta, "time-decay rate")->capture_default_str();
    cmd->add_option("--hea-mode", a.hea_mode, "attention softmax mode: literal or masked")
        ->capture_default_str();
    cmd->add_option("--seed", a.cfg.seed, "parameter init seed")->capture_default_str();
    cmd->add_option("--fd-step", a.fd_step, "finite-difference step")->capture_default_str();
    cmd->add_option("--tolerance", a.tolerance, "display threshold for the status column")
        ->capture_default_str();
    cmd->add_option("--min-coords", a.min_coords, "minimum coordinates sampled per tensor")
        ->capture_default_str();
    cmd->add_option("--freeze", a.cfg.freeze, "tensor names excluded from the check")
        ->delimiter(',');
}

int run_gradcheck(GradcheckArgs& a) {
    a.cfg.model.variant = variant_from_string(a.variant);
    a.cfg.model.hea_mode = hea_mode_from_string(a.hea_mode);
    std::vector<TensorCheckReport> reports = gradient_check(a.cfg, a.fd_step, a.min_coords);
    double worst = 0.0;
    for (const TensorCheckReport& r : reports) {
        if (r.skipped) {
            std::printf("%-24s skipped (frozen)\n", r.name.c_str());
            continue;
        }
        worst = std::max(worst, r.max_rel_err);
        std::printf("%-24s max_rel_err %-12.3e coords %-6d %s\n", r.name.c_str(), r.max_rel_err,
                    r.coords_checked, r.max_rel_err <= a.tolerance ? "ok" : "EXCEEDS");
    }
    std::cout << "gradcheck: variant=" << a.variant << " tensors=" << reports.size()
              << " worst=" << g9(worst) << " tolerance=" << g9(a.tolerance)
              << " status=" << (worst <= a.tolerance ? "ok" : "exceeds") << "\n";
    return 0;  // report-only by design
}

// ---- sweep-beta -----------------------------------------------------------------

struct SweepArgs {
    CLI::App* cmd = nullptr;
    std::string corpus, test_corpus, features, out, config_file;
    std::string variant = "t-hea";
    std::string hea_mode = "literal";
    std::vector<std::string> betas{"0", "0.2", "1.0"};
    std::vector<int> ms{10};
    std::vector<int> topx{5, 10, 20};
    TrainConfig cfg;
    int jobs = 1;
};

void wire_sweep(CLI::App& app, SweepArgs& a) {
    CLI::App* cmd = app.add_subcommand(
        "sweep-beta", "train and evaluate a grid of (beta, context size) points");
    a.cmd = cmd;
    cmd->add_option("--corpus", a.corpus, "training corpus (JSON lines)")->required();
    cmd->add_option("--test-corpus", a.test_corpus, "held-out corpus (JSON lines)")->required();
    cmd->add_option("--features", a.features, "frame feature table (visual variants)");
    cmd->add_option("--variant", a.variant, "model variant: tm, t-hea, itf, itf-hea")
        ->capture_default_str();
    cmd->add_option("--betas", a.betas, "time-decay rates to sweep")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--ms", a.ms, "context window lengths to sweep")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--topx", a.topx, "recommendation list sizes")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--hea-mode", a.hea_mode, "attention softmax mode: literal or masked")
        ->capture_default_str();
    cmd->add_option("--d", a.cfg.model.d, "latent width")->capture_default_str();
    cmd->add_option("--lr", a.cfg.learning_rate, "Adam learning rate")->capture_default_str();
    cmd->add_option("--batch-size", a.cfg.batch_size, "examples per update")
        ->capture_default_str();
    cmd->add_option("--epochs", a.cfg.epochs, "training epochs")->capture_default_str();
    cmd->add_option("--seed", a.cfg.seed, "shared seed for every grid point")
        ->capture_default_str();
    cmd->add_option("--l-max", a.cfg.l_max, "token truncation length")->capture_default_str();
    cmd->add_option("--min-count", a.cfg.min_count, "vocabulary frequency threshold")
        ->capture_default_str();
    cmd->add_option("--jobs", a.jobs, "parallel grid points")->capture_default_str();
    cmd->add_option("--out", a.out, "CSV path to write")->required();
    cmd->add_option("--config", a.config_file, "JSON config file (explicit flags win)");
}

int run_sweep(SweepArgs& a) {
    ConfigSetters setters{
        {"corpus", [&](const json& v) { a.corpus = v.get<std::string>(); }},
        {"test-corpus", [&](const json& v) { a.test_corpus = v.get<std::string>(); }},
        {"features", [&](const json& v) { a.features = v.get<std::string>(); }},
        {"variant", [&](const json& v) { a.variant = v.get<std::string>(); }},
        {"betas", [&](const json& v) { a.betas = v.get<std::vector<std::string>>(); }},
        {"ms", [&](const json& v) { a.ms = v.get<std::vector<int>>(); }},
        {"topx", [&](const json& v) { a.topx = v.get<std::vector<int>>(); }},
        {"hea-mode", [&](const json& v) { a.hea_mode = v.get<std::string>(); }},
        {"d", [&](const json& v) { a.cfg.model.d = v.get<int>(); }},
        {"lr", [&](const json& v) { a.cfg.learning_rate = v.get<double>(); }},
        {"batch-size", [&](const json& v) { a.cfg.batch_size = v.get<int>(); }},
        {"epochs", [&](const json& v) { a.cfg.epochs = v.get<int>(); }},
        {"seed", [&](const json& v) { a.cfg.seed = v.get<std::uint64_t>(); }},
        {"l-max", [&](const json& v) { a.cfg.l_max = v.get<int>(); }},
        {"min-count", [&](const json& v) { a.cfg.min_count = v.get<int>(); }},
        {"jobs", [&](const json& v) { a.jobs = v.get<int>(); }},
        {"out", [&](const json& v) { a.out = v.get<std::string>(); }},
    };
    merge_config_file(a.cmd, a.config_file, setters);

    if (a.betas.empty() || a.ms.empty() || a.topx.empty())
        throw ConfigError("sweep-beta needs at least one beta, one m, and one topx");
    if (a.jobs < 1) throw ConfigError("--jobs must be at least 1");

    a.cfg.model.variant = variant_from_string(a.variant);
    a.cfg.model.hea_mode = hea_mode_from_string(a.hea_mode);
    std::vector<std::pair<std::string, double>> betas;
    for (const std::string& s : a.betas) {
        try {
            std::size_t used = 0;
            double value = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            betas.emplace_back(s, value);
        } catch (const std::exception&) {
            throw ConfigError("not a number in --betas: " + s);
        }
    }

    Dataset train = load_corpus_verbose(a.corpus);
    Dataset test = load_corpus_verbose(a.test_corpus);
    std::optional<VisualFeatureTable> features = load_features_opt(a.features);
    const VisualFeatureTable* feat_ptr = features ? &*features : nullptr;

    struct Point {
        std::string beta_text;
        double beta = 0.0;
        int m = 0;
    };
    std::vector<Point> points;
    for (const auto& [text, value] : betas)
        for (int m : a.ms) points.push_back({text, value, m});

    std::vector<std::string> rows(points.size());
    std::vector<std::exception_ptr> failures(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= points.size()) return;
            try {
                TrainConfig cfg = a.cfg;
                cfg.model.beta = points[i].beta;
                cfg.model.m = points[i].m;
                FitResult result = fit(train, feat_ptr, cfg);
                EvalInputs inputs = build_eval_inputs(result.checkpoint, test);
                std::string block;
                for (int x : a.topx) {
                    TopxReport rep = topx_metrics(inputs.scores, inputs.truth, x);
                    block += points[i].beta_text + "," + std::to_string(points[i].m) + "," +
                             std::to_string(x) + "," + g17(rep.precision) + "," +
                             g17(rep.recall) + "," + g17(rep.f1) + "\n";
                }
                rows[i] = block;
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(a.jobs), points.size());
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t + 1 < n_threads; ++t) threads.emplace_back(worker);
    worker();
    for (std::thread& t : threads) t.join();
    for (const std::exception_ptr& failure : failures)
        if (failure) std::rethrow_exception(failure);

    std::string body = "beta,m,topx,precision,recall,f1\n";
    for (const std::string& block : rows) body += block;
    write_text_file(a.out, body);
    std::cout << "sweep-beta: points=" << points.size()
              << " rows=" << points.size() * a.topx.size() << " -> " << a.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-sync comment recommender toolkit"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    TrainArgs train_args;
    EvalArgs eval_args;
    RecommendArgs rec_args;
    GradcheckArgs gc_args;
    SweepArgs sweep_args;
    wire_synth(app, synth_args);
    wire_train(app, train_args);
    wire_evaluate(app, eval_args);
    wire_recommend(app, rec_args);
    wire_gradcheck(app, gc_args);
    wire_sweep(app, sweep_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the usage message
        return 1;
    }

    try {
        if (app.got_subcommand(synth_args.cmd)) return run_synth(synth_args);
        if (app.got_subcommand(train_args.cmd)) return run_train(train_args);
        if (app.got_subcommand(eval_args.cmd)) return run_evaluate(eval_args);
        if (app.got_subcommand(rec_args.cmd)) return run_recommend(rec_args);
        if (app.got_subcommand(gc_args.cmd)) return run_gradcheck(gc_args);
        if (app.got_subcommand(sweep_args.cmd)) return run_sweep(sweep_args);
        std::cerr << "error: no subcommand selected\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {  // includes VersionError
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 3;
    }
}
