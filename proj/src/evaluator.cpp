#include "tscrec/evaluator.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "tscrec/errors.hpp"

namespace tscrec {

std::vector<TestPair> build_ground_truth(const std::vector<TimeSyncComment>& comments) {
    if (comments.empty()) throw DataError("build_ground_truth: empty test corpus");

    std::map<std::pair<std::string, std::string>, TestPair> pairs;
    for (const auto& c : comments) {
        auto& p = pairs[{c.user_id, c.video_id}];
        if (p.polarities.empty()) {
            p.user_id = c.user_id;
            p.video_id = c.video_id;
        }
        p.polarities.push_back(c.polarity);
    }

    std::vector<TestPair> out;
    out.reserve(pairs.size());
    for (auto& [key, p] : pairs) {
        double sum = 0.0;
        for (int v : p.polarities) sum += v;
        p.mean_polarity = sum / static_cast<double>(p.polarities.size());
        p.label = p.mean_polarity >= 0.5 ? 1 : 0;
        out.push_back(std::move(p));
    }
    return out;
}

TopxReport topx_metrics(const ScoreTable& scores, const std::vector<TestPair>& truth, int x) {
    if (x < 1) throw std::invalid_argument("topx_metrics: x must be >= 1");
    if (truth.empty()) throw DataError("topx_metrics: empty ground truth");

    // (user, video) -> label
    std::map<std::pair<std::string, std::string>, int> labels;
    for (const auto& p : truth) labels[{p.user_id, p.video_id}] = p.label;

    TopxReport report;
    report.x = x;
    double precision_sum = 0.0, recall_sum = 0.0;
    int recall_users = 0;

    for (const auto& [user, candidates] : scores) {
        if (static_cast<int>(candidates.size()) < x) {
            report.skipped_users.push_back(user);
            continue;
        }
        auto ranked = candidates;
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });

        UserTopx u;
        u.user_id = user;
        u.candidates = static_cast<int>(candidates.size());
        std::set<std::string> positives;
        for (const auto& [vid, score] : candidates) {
            const auto it = labels.find({user, vid});
            if (it != labels.end() && it->second == 1) positives.insert(vid);
        }
        u.positives = static_cast<int>(positives.size());

        int hits = 0;
        for (int i = 0; i < x; ++i) {
            u.recommended.push_back(ranked[static_cast<std::size_t>(i)].first);
            if (positives.count(u.recommended.back())) ++hits;
        }
        u.precision = static_cast<double>(hits) / static_cast<double>(x);
        precision_sum += u.precision;
        if (u.positives > 0) {
            u.recall = static_cast<double>(hits) / static_cast<double>(u.positives);
            u.f1 = (u.precision + u.recall) > 0.0
                       ? 2.0 * u.precision * u.recall / (u.precision + u.recall)
                       : 0.0;
            u.in_recall_average = true;
            recall_sum += u.recall;
            ++recall_users;
        }
        report.per_user.push_back(std::move(u));
        ++report.users_evaluated;
    }

    if (report.users_evaluated > 0)
        report.precision = precision_sum / static_cast<double>(report.users_evaluated);
    if (recall_users > 0) report.recall = recall_sum / static_cast<double>(recall_users);
    report.f1 = (report.precision + report.recall) > 0.0
                    ? 2.0 * report.precision * report.recall / (report.precision + report.recall)
                    : 0.0;
    return report;
}

}  // namespace tscrec
