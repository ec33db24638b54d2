#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tscrec/comment.hpp"

namespace tscrec {

// Ground truth for one (user, video) pair: mean comment polarity, labelled
// positive when the mean is >= 0.5 (boundary inclusive).
struct TestPair {
    std::string user_id;
    std::string video_id;
    std::vector<int> polarities;
    double mean_polarity = 0.0;
    int label = 0;
};

// Pairs ordered by (user_id, video_id). Throws DataError on empty input.
std::vector<TestPair> build_ground_truth(const std::vector<TimeSyncComment>& comments);

// user -> scored candidate videos
using ScoreTable = std::map<std::string, std::vector<std::pair<std::string, double>>>;

struct UserTopx {
    std::string user_id;
    std::vector<std::string> recommended;  // top X, score desc, ties by video_id
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int positives = 0;
    int candidates = 0;
    bool in_recall_average = false;  // false when the user has no positives
};

struct TopxReport {
    int x = 0;
    double precision = 0.0;  // macro over evaluated users
    double recall = 0.0;     // macro over users with at least one positive
    double f1 = 0.0;         // 2PR/(P+R) of the macro averages, 0 when P+R == 0
    int users_evaluated = 0;
    std::vector<std::string> skipped_users;  // fewer than X scored candidates
    std::vector<UserTopx> per_user;
};

// Top-X precision/recall/F1. Users with fewer than x scored candidates are
// skipped (and listed); users with no positives count for precision only.
TopxReport topx_metrics(const ScoreTable& scores, const std::vector<TestPair>& truth, int x);

}  // namespace tscrec
