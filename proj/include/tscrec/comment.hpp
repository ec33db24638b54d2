#pragma once

#include <map>
#include <string>
#include <vector>

namespace tscrec {

// One time-sync comment ("danmaku"): fired at a playback offset of a video.
struct TimeSyncComment {
    std::string tsc_id;
    std::string user_id;
    std::string video_id;
    double video_time = 0.0;  // seconds from the start of the video
    std::string text;
    int polarity = 0;  // 1 = positive/neutral, 0 = negative
};

struct Dataset {
    std::vector<TimeSyncComment> comments;
    // Dense indices assigned over sorted ids, so a reloaded corpus maps every
    // user/video to the same row.
    std::map<std::string, int> user_index;
    std::map<std::string, int> video_index;

    void rebuild_indices();
};

// The M comments of one video that directly precede (and include) a target
// comment. Slots hold indices into Dataset::comments; histories shorter than
// M are left-padded with kPadSlot.
struct ContextWindow {
    static constexpr int kPadSlot = -1;

    int target = -1;                 // index of the target comment
    std::vector<int> members;        // size M, kPadSlot or comment index; back() == target
    std::vector<double> timestamps;  // size M; pad slots carry the earliest real timestamp
    std::vector<bool> pad_mask;      // size M; true = real comment
};

// Canonical total order: (video_id, video_time, tsc_id). Stable and idempotent.
void sort_canonical(std::vector<TimeSyncComment>& comments);

// One window per comment, sliding over each video's canonically ordered
// stream; windows never cross video boundaries. m must be >= 1.
std::vector<ContextWindow> build_context_windows(const Dataset& dataset, int m);

}  // namespace tscrec
