#include "tscrec/comment.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace tscrec {

void Dataset::rebuild_indices() {
    user_index.clear();
    video_index.clear();
    for (const auto& c : comments) {
        user_index.emplace(c.user_id, 0);
        video_index.emplace(c.video_id, 0);
    }
    int next = 0;
    for (auto& [id, idx] : user_index) idx = next++;
    next = 0;
    for (auto& [id, idx] : video_index) idx = next++;
}

void sort_canonical(std::vector<TimeSyncComment>& comments) {
    std::stable_sort(comments.begin(), comments.end(),
                     [](const TimeSyncComment& a, const TimeSyncComment& b) {
                         return std::tie(a.video_id, a.video_time, a.tsc_id) <
                                std::tie(b.video_id, b.video_time, b.tsc_id);
                     });
}

std::vector<ContextWindow> build_context_windows(const Dataset& dataset, int m) {
    if (m < 1) throw std::invalid_argument("build_context_windows: m must be >= 1");

    const auto& cs = dataset.comments;
    // Work over a sorted permutation so callers may pass comments in any order.
    std::vector<int> perm(cs.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&cs](int a, int b) {
        return std::tie(cs[a].video_id, cs[a].video_time, cs[a].tsc_id) <
               std::tie(cs[b].video_id, cs[b].video_time, cs[b].tsc_id);
    });

    std::vector<ContextWindow> windows;
    windows.reserve(cs.size());
    std::size_t video_begin = 0;
    for (std::size_t pos = 0; pos < perm.size(); ++pos) {
        if (cs[perm[pos]].video_id != cs[perm[video_begin]].video_id) video_begin = pos;

        ContextWindow w;
        w.target = perm[pos];
        w.members.resize(m, ContextWindow::kPadSlot);
        w.timestamps.resize(m, 0.0);
        w.pad_mask.resize(m, false);

        // Fill real members right-aligned: slot m-1 is the target.
        int slot = m - 1;
        std::size_t src = pos;
        while (slot >= 0) {
            w.members[slot] = perm[src];
            w.timestamps[slot] = cs[perm[src]].video_time;
            w.pad_mask[slot] = true;
            --slot;
            if (src == video_begin) break;
            --src;
        }
        const double earliest = cs[perm[src]].video_time;
        for (; slot >= 0; --slot) w.timestamps[slot] = earliest;

        windows.push_back(std::move(w));
    }
    return windows;
}

}  // namespace tscrec
