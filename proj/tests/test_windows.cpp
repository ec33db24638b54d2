#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "tscrec/comment.hpp"
#include "tscrec/rng.hpp"

using namespace tscrec;

namespace {

TimeSyncComment tsc(const std::string& id, const std::string& user, const std::string& video,
                    double t, const std::string& text = "w", int polarity = 1) {
    return TimeSyncComment{id, user, video, t, text, polarity};
}

std::vector<std::string> member_ids(const Dataset& d, const ContextWindow& w) {
    std::vector<std::string> out;
    for (int idx : w.members)
        out.push_back(idx == ContextWindow::kPadSlot
                          ? "<pad>"
                          : d.comments[static_cast<std::size_t>(idx)].tsc_id);
    return out;
}

// Reference construction: per video, take the canonically ordered stream and
// left-pad the trailing slice of length m.
std::map<std::string, std::vector<std::string>> windows_by_slicing(
    std::vector<TimeSyncComment> comments, int m) {
    sort_canonical(comments);
    std::map<std::string, std::vector<std::size_t>> streams;
    for (std::size_t i = 0; i < comments.size(); ++i)
        streams[comments[i].video_id].push_back(i);
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& [video, stream] : streams) {
        for (std::size_t pos = 0; pos < stream.size(); ++pos) {
            std::vector<std::string> ids;
            for (int slot = static_cast<int>(pos) - m + 1; slot <= static_cast<int>(pos);
                 ++slot)
                ids.push_back(slot < 0 ? "<pad>"
                                       : comments[stream[static_cast<std::size_t>(slot)]].tsc_id);
            out[comments[stream[pos]].tsc_id] = ids;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("window of an exactly-m-long history holds every comment, oldest first") {
    Dataset d;
    d.comments = {tsc("c3", "u1", "v1", 30.0), tsc("c1", "u2", "v1", 10.0),
                  tsc("c2", "u3", "v1", 20.0)};
    d.rebuild_indices();
    std::vector<ContextWindow> windows = build_context_windows(d, 3);
    REQUIRE(windows.size() == 3);

    const ContextWindow* last = nullptr;
    for (const ContextWindow& w : windows)
        if (d.comments[static_cast<std::size_t>(w.target)].tsc_id == "c3") last = &w;
    REQUIRE(last != nullptr);
    CHECK(member_ids(d, *last) == std::vector<std::string>{"c1", "c2", "c3"});
    CHECK(last->pad_mask == std::vector<bool>{true, true, true});
    CHECK(last->timestamps == std::vector<double>{10.0, 20.0, 30.0});
    CHECK(last->members.back() == last->target);
}

TEST_CASE("short histories are left-padded and pads inherit the earliest real timestamp") {
    Dataset d;
    d.comments = {tsc("c1", "u1", "v1", 42.0)};
    d.rebuild_indices();
    std::vector<ContextWindow> windows = build_context_windows(d, 4);
    REQUIRE(windows.size() == 1);
    const ContextWindow& w = windows[0];
    CHECK(member_ids(d, w) == std::vector<std::string>{"<pad>", "<pad>", "<pad>", "c1"});
    CHECK(w.pad_mask == std::vector<bool>{false, false, false, true});
    CHECK(w.timestamps == std::vector<double>{42.0, 42.0, 42.0, 42.0});
}

TEST_CASE("windows never mix videos and match a slicing reference on random data") {
    Rng rng(11);
    std::vector<TimeSyncComment> comments;
    for (int i = 0; i < 200; ++i) {
        std::string video = "v" + std::to_string(rng.uniform_int(7));
        std::string user = "u" + std::to_string(rng.uniform_int(23));
        comments.push_back(tsc("c" + std::to_string(i), user, video, rng.uniform(0.0, 300.0)));
    }
    const int m = 5;
    std::map<std::string, std::vector<std::string>> expected = windows_by_slicing(comments, m);

    Dataset d;
    d.comments = comments;
    rng.shuffle(d.comments);  // construction must not depend on input order
    d.rebuild_indices();
    std::vector<ContextWindow> windows = build_context_windows(d, m);
    REQUIRE(windows.size() == comments.size());

    for (const ContextWindow& w : windows) {
        const TimeSyncComment& target = d.comments[static_cast<std::size_t>(w.target)];
        CHECK(member_ids(d, w) == expected.at(target.tsc_id));
        for (int idx : w.members) {
            if (idx == ContextWindow::kPadSlot) continue;
            CHECK(d.comments[static_cast<std::size_t>(idx)].video_id == target.video_id);
        }
        REQUIRE(w.members.size() == static_cast<std::size_t>(m));
        REQUIRE(w.timestamps.size() == static_cast<std::size_t>(m));
        REQUIRE(w.pad_mask.size() == static_cast<std::size_t>(m));
        CHECK(w.members.back() == w.target);
        // real members appear oldest-to-newest and timestamps never decrease
        for (std::size_t s = 1; s < w.timestamps.size(); ++s)
            CHECK(w.timestamps[s] >= w.timestamps[s - 1]);
    }
}

TEST_CASE("m=1 windows hold only their target") {
    Dataset d;
    d.comments = {tsc("c1", "u1", "v1", 1.0), tsc("c2", "u1", "v1", 2.0)};
    d.rebuild_indices();
    for (const ContextWindow& w : build_context_windows(d, 1)) {
        CHECK(w.members == std::vector<int>{w.target});
        CHECK(w.pad_mask == std::vector<bool>{true});
    }
}

TEST_CASE("window length below one is rejected") {
    Dataset d;
    d.comments = {tsc("c1", "u1", "v1", 1.0)};
    d.rebuild_indices();
    CHECK_THROWS_AS(build_context_windows(d, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_context_windows(d, -3), std::invalid_argument);
}

TEST_CASE("canonical order sorts by video, then time, then id, and is idempotent") {
    std::vector<TimeSyncComment> comments = {
        tsc("c2", "u1", "v2", 5.0), tsc("c1", "u1", "v1", 9.0), tsc("c4", "u1", "v1", 9.0),
        tsc("c3", "u1", "v1", 9.0), tsc("c5", "u1", "v1", 2.0)};
    sort_canonical(comments);
    std::vector<std::string> ids;
    for (const TimeSyncComment& c : comments) ids.push_back(c.tsc_id);
    CHECK(ids == std::vector<std::string>{"c5", "c1", "c3", "c4", "c2"});

    std::vector<TimeSyncComment> again = comments;
    sort_canonical(again);
    for (std::size_t i = 0; i < comments.size(); ++i)
        CHECK(again[i].tsc_id == comments[i].tsc_id);
}

TEST_CASE("dense indices are assigned over sorted ids") {
    Dataset d;
    d.comments = {tsc("c1", "zoe", "v9", 1.0), tsc("c2", "amy", "v2", 1.0),
                  tsc("c3", "mia", "v2", 2.0)};
    d.rebuild_indices();
    CHECK(d.user_index == std::map<std::string, int>{{"amy", 0}, {"mia", 1}, {"zoe", 2}});
    CHECK(d.video_index == std::map<std::string, int>{{"v2", 0}, {"v9", 1}});
}
