#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "tscrec/corpus_io.hpp"
#include "tscrec/errors.hpp"
#include "tscrec/synth.hpp"

using namespace tscrec;
namespace fs = std::filesystem;

namespace {

SynthConfig small_config(double herd_prob, std::uint64_t seed = 7) {
    SynthConfig cfg;
    cfg.n_users = 12;
    cfg.n_videos = 20;
    cfg.n_comments = 2500;
    cfg.herd_prob = herd_prob;
    cfg.visual_dim = 8;
    cfg.seed = seed;
    return cfg;
}

std::vector<TimeSyncComment> all_comments(const SynthOutput& out) {
    std::vector<TimeSyncComment> all = out.train.comments;
    all.insert(all.end(), out.test.comments.begin(), out.test.comments.end());
    return all;
}

}  // namespace

TEST_CASE("herding measurements track the requested copy probability") {
    SynthOutput calm = generate(small_config(0.0));
    double base = measure_herding(all_comments(calm), 30.0);
    CHECK(base < 0.05);

    SynthOutput herded = generate(small_config(0.5));
    double mid = measure_herding(all_comments(herded), 30.0);
    CHECK(mid > 0.35);
    CHECK(mid < 0.65);

    double previous = -1.0;
    for (double p : {0.0, 0.25, 0.5, 0.75}) {
        double measured = measure_herding(all_comments(generate(small_config(p))), 30.0);
        CHECK(measured >= previous);
        previous = measured;
    }
}

TEST_CASE("generation is reproducible for a fixed seed and moves with it") {
    SynthOutput a = generate(small_config(0.5, 21));
    SynthOutput b = generate(small_config(0.5, 21));
    REQUIRE(a.train.comments.size() == b.train.comments.size());
    for (std::size_t i = 0; i < a.train.comments.size(); ++i) {
        CHECK(a.train.comments[i].tsc_id == b.train.comments[i].tsc_id);
        CHECK(a.train.comments[i].text == b.train.comments[i].text);
        CHECK(a.train.comments[i].video_time == b.train.comments[i].video_time);
        CHECK(a.train.comments[i].polarity == b.train.comments[i].polarity);
    }
    CHECK(a.affinity == b.affinity);

    SynthOutput c = generate(small_config(0.5, 22));
    bool differs = a.train.comments.size() != c.train.comments.size();
    for (std::size_t i = 0; !differs && i < a.train.comments.size(); ++i)
        differs = a.train.comments[i].text != c.train.comments[i].text ||
                  a.train.comments[i].video_time != c.train.comments[i].video_time;
    CHECK(differs);
}

TEST_CASE("the requested comment count is produced exactly, with unique ids") {
    SynthOutput out = generate(small_config(0.4));
    std::vector<TimeSyncComment> all = all_comments(out);
    CHECK(all.size() == 2500);
    std::set<std::string> ids;
    for (const TimeSyncComment& c : all) ids.insert(c.tsc_id);
    CHECK(ids.size() == 2500);
}

TEST_CASE("per-user train and test videos never overlap") {
    SynthOutput out = generate(small_config(0.5));
    std::map<std::string, std::set<std::string>> train_videos, test_videos;
    for (const TimeSyncComment& c : out.train.comments) train_videos[c.user_id].insert(c.video_id);
    for (const TimeSyncComment& c : out.test.comments) test_videos[c.user_id].insert(c.video_id);
    CHECK_FALSE(test_videos.empty());
    for (const auto& [user, videos] : test_videos)
        for (const std::string& video : videos) CHECK(train_videos[user].count(video) == 0);
}

TEST_CASE("generated artifacts survive the io layer without rejects") {
    SynthOutput out = generate(small_config(0.5));
    fs::path dir = fs::temp_directory_path() / "tscrec_synth_io";
    fs::remove_all(dir);
    fs::create_directories(dir);
    save_tsc_corpus((dir / "train.jsonl").string(), out.train);
    save_tsc_corpus((dir / "test.jsonl").string(), out.test);
    save_visual_features((dir / "features.tsv").string(), out.features);

    CorpusLoadStats train_stats, test_stats;
    Dataset train = load_tsc_corpus((dir / "train.jsonl").string(), &train_stats);
    Dataset test = load_tsc_corpus((dir / "test.jsonl").string(), &test_stats);
    CHECK(train_stats.rejects.empty());
    CHECK(test_stats.rejects.empty());
    CHECK(train.comments.size() == out.train.comments.size());
    CHECK(test.comments.size() == out.test.comments.size());

    VisualFeatureTable feats = load_visual_features((dir / "features.tsv").string());
    CHECK(feats.dim == 8);
    CHECK(feats.videos.size() == 20);
}

TEST_CASE("affinities live strictly inside the unit interval and drive polarity") {
    SynthOutput out = generate(small_config(0.0));
    REQUIRE(out.affinity.rows() == 12);
    REQUIRE(out.affinity.cols() == 20);
    for (Eigen::Index i = 0; i < out.affinity.size(); ++i) {
        CHECK(out.affinity.data()[i] > 0.0);
        CHECK(out.affinity.data()[i] < 1.0);
    }

    std::map<std::string, int> user_of, video_of;
    for (std::size_t i = 0; i < out.user_ids.size(); ++i) user_of[out.user_ids[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < out.video_ids.size(); ++i) video_of[out.video_ids[i]] = static_cast<int>(i);
    double hi_sum = 0, hi_n = 0, lo_sum = 0, lo_n = 0;
    for (const TimeSyncComment& c : all_comments(out)) {
        double a = out.affinity(user_of.at(c.user_id), video_of.at(c.video_id));
        if (a > 0.7) {
            hi_sum += c.polarity;
            ++hi_n;
        } else if (a < 0.3) {
            lo_sum += c.polarity;
            ++lo_n;
        }
    }
    REQUIRE(hi_n > 10);
    REQUIRE(lo_n > 10);
    CHECK(hi_sum / hi_n > lo_sum / lo_n + 0.2);
}

TEST_CASE("nonsense generator settings are rejected") {
    SynthConfig cfg = small_config(0.5);
    cfg.herd_prob = 1.5;
    CHECK_THROWS_AS(generate(cfg), ConfigError);
    cfg = small_config(0.5);
    cfg.n_users = 0;
    CHECK_THROWS_AS(generate(cfg), ConfigError);
    cfg = small_config(0.5);
    cfg.frame_interval = 0.0;
    CHECK_THROWS_AS(generate(cfg), ConfigError);
}
