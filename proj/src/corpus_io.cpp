#include "tscrec/corpus_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tscrec/errors.hpp"

namespace tscrec {

using nlohmann::json;

namespace {

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw DataError("cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) throw DataError("cannot write " + path);
    return out;
}

std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

// ---- comment corpus --------------------------------------------------------

Dataset load_tsc_corpus(const std::string& path, CorpusLoadStats* stats) {
    auto in = open_in(path);
    CorpusLoadStats local;
    CorpusLoadStats& st = stats ? *stats : local;
    st = CorpusLoadStats{};

    Dataset ds;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++st.total_records;

        json rec = json::parse(line, nullptr, false);
        auto reject = [&](const std::string& why) { st.rejects.emplace_back(line_no, why); };
        if (rec.is_discarded() || !rec.is_object()) {
            reject("not a JSON object");
            continue;
        }
        TimeSyncComment c;
        try {
            c.tsc_id = rec.at("tsc_id").get<std::string>();
            c.user_id = rec.at("user_id").get<std::string>();
            c.video_id = rec.at("video_id").get<std::string>();
            c.video_time = rec.at("video_time").get<double>();
            c.text = rec.at("text").get<std::string>();
            if (!rec.at("polarity").is_number_integer()) {
                reject("polarity must be an integer");
                continue;
            }
            c.polarity = rec.at("polarity").get<int>();
        } catch (const json::exception& e) {
            reject(e.what());
            continue;
        }
        if (!(c.video_time >= 0.0) || !std::isfinite(c.video_time)) {
            reject("video_time must be finite and >= 0");
            continue;
        }
        if (c.polarity != 0 && c.polarity != 1) {
            reject("polarity must be 0 or 1");
            continue;
        }
        if (c.tsc_id.empty() || c.user_id.empty() || c.video_id.empty()) {
            reject("empty id field");
            continue;
        }
        ds.comments.push_back(std::move(c));
        ++st.loaded;
    }

    if (st.total_records > 0 &&
        10 * static_cast<long long>(st.rejects.size()) > static_cast<long long>(st.total_records)) {
        std::ostringstream msg;
        msg << path << ": " << st.rejects.size() << " of " << st.total_records
            << " records malformed (over 10%); first at line " << st.rejects.front().first << ": "
            << st.rejects.front().second;
        throw DataError(msg.str());
    }

    std::set<std::string> seen;
    for (const auto& c : ds.comments) {
        if (!seen.insert(c.tsc_id).second)
            throw DataError(path + ": duplicate tsc_id \"" + c.tsc_id + "\"");
    }

    sort_canonical(ds.comments);
    ds.rebuild_indices();
    return ds;
}

void save_tsc_corpus(const std::string& path, const Dataset& dataset) {
    auto comments = dataset.comments;
    sort_canonical(comments);
    auto out = open_out(path);
    for (const auto& c : comments) {
        json rec;
        rec["tsc_id"] = c.tsc_id;
        rec["user_id"] = c.user_id;
        rec["video_id"] = c.video_id;
        rec["video_time"] = c.video_time;
        rec["text"] = c.text;
        rec["polarity"] = c.polarity;
        out << rec.dump() << "\n";  // json object keys serialize sorted
    }
}

// ---- frame feature table -----------------------------------------------------

std::size_t VisualFeatureTable::rows() const {
    std::size_t n = 0;
    for (const auto& [vid, frames] : videos) n += frames.size();
    return n;
}

VisualFeatureTable load_visual_features(const std::string& path, FeatureLoadStats* stats) {
    auto in = open_in(path);
    FeatureLoadStats local;
    FeatureLoadStats& st = stats ? *stats : local;
    st = FeatureLoadStats{};

    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": missing header");
    json header = json::parse(line, nullptr, false);
    if (header.is_discarded() || !header.is_object() || !header.contains("dim") ||
        !header["dim"].is_number_integer())
        throw DataError(path + ": header must be a JSON object with integer \"dim\"");
    VisualFeatureTable table;
    table.dim = header["dim"].get<int>();
    if (table.dim <= 0) throw DataError(path + ": dim must be positive");

    std::map<std::string, std::map<double, Eigen::VectorXd>> staging;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto tab1 = line.find('\t');
        const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab2 == std::string::npos)
            throw DataError(path + ": line " + std::to_string(line_no) +
                            ": expected video_id TAB frame_time TAB values");
        const std::string vid = line.substr(0, tab1);
        char* endp = nullptr;
        const std::string time_str = line.substr(tab1 + 1, tab2 - tab1 - 1);
        const double frame_time = std::strtod(time_str.c_str(), &endp);
        if (endp == time_str.c_str() || *endp != '\0' || !std::isfinite(frame_time))
            throw DataError(path + ": line " + std::to_string(line_no) + ": bad frame_time");

        Eigen::VectorXd vec(table.dim);
        const char* p = line.c_str() + tab2 + 1;
        int count = 0;
        while (*p != '\0') {
            char* next = nullptr;
            const double v = std::strtod(p, &next);
            if (next == p) break;
            if (count < table.dim) vec[count] = v;
            ++count;
            p = next;
            if (*p == ',') ++p;
            else break;
        }
        if (count != table.dim || *p != '\0')
            throw DataError(path + ": line " + std::to_string(line_no) + ": expected " +
                            std::to_string(table.dim) + " comma-separated floats");

        auto [it, inserted] = staging[vid].insert_or_assign(frame_time, std::move(vec));
        if (!inserted)
            st.warnings.push_back("line " + std::to_string(line_no) + ": duplicate frame (" +
                                  vid + ", " + time_str + "), last row kept");
        ++st.rows;
    }

    for (auto& [vid, frames] : staging) {
        auto& list = table.videos[vid];
        list.reserve(frames.size());
        for (auto& [t, v] : frames) list.emplace_back(t, std::move(v));
    }
    return table;
}

void save_visual_features(const std::string& path, const VisualFeatureTable& table) {
    auto out = open_out(path);
    json header;
    header["dim"] = table.dim;
    out << header.dump() << "\n";
    for (const auto& [vid, frames] : table.videos) {
        for (const auto& [t, vec] : frames) {
            out << vid << '\t' << format_g9(t) << '\t';
            for (Eigen::Index i = 0; i < vec.size(); ++i) {
                if (i) out << ',';
                out << format_g9(vec[i]);
            }
            out << "\n";
        }
    }
}

const Eigen::VectorXd* try_match_frame_feature(const VisualFeatureTable& table,
                                               const std::string& video_id, double video_time) {
    const auto it = table.videos.find(video_id);
    if (it == table.videos.end() || it->second.empty()) return nullptr;
    const auto& frames = it->second;
    // Latest frame_time <= video_time; earliest frame as the fallback.
    auto up = std::upper_bound(frames.begin(), frames.end(), video_time,
                               [](double t, const auto& f) { return t < f.first; });
    if (up == frames.begin()) return &frames.front().second;
    return &std::prev(up)->second;
}

const Eigen::VectorXd& match_frame_feature(const VisualFeatureTable& table,
                                           const std::string& video_id, double video_time) {
    const auto* f = try_match_frame_feature(table, video_id, video_time);
    if (!f) throw DataError("no frame features for video \"" + video_id + "\"");
    return *f;
}

// ---- checkpoints -------------------------------------------------------------

ModelSettings Checkpoint::settings() const {
    ModelSettings s;
    s.variant = variant_from_string(manifest.model_variant);
    s.hea_mode = hea_mode_from_string(manifest.hea_mode);
    s.d = manifest.d;
    s.m = manifest.m;
    s.beta = manifest.beta;
    return s;
}

std::map<std::string, int> Checkpoint::user_map() const {
    std::map<std::string, int> m;
    for (std::size_t i = 0; i < users.size(); ++i) m.emplace(users[i], static_cast<int>(i));
    return m;
}

std::map<std::string, int> Checkpoint::video_map() const {
    std::map<std::string, int> m;
    for (std::size_t i = 0; i < videos.size(); ++i) m.emplace(videos[i], static_cast<int>(i));
    return m;
}

namespace {

constexpr char kBlobMagic[8] = {'T', 'S', 'C', 'B', 'L', 'O', 'B', '\0'};

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
        throw DataError("parameter blob truncated");
    return v;
}
std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
        throw DataError("parameter blob truncated");
    return v;
}

void save_blob(const std::string& path, ModelParams& params) {
    auto out = open_out(path, std::ios::binary);
    out.write(kBlobMagic, sizeof(kBlobMagic));
    write_u32(out, static_cast<std::uint32_t>(kCheckpointFormatVersion));
    const auto refs = tensor_refs(params);
    write_u64(out, refs.size());
    for (const auto& r : refs) {
        write_u32(out, static_cast<std::uint32_t>(r.name.size()));
        out.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
        write_u64(out, static_cast<std::uint64_t>(r.rows));
        write_u64(out, static_cast<std::uint64_t>(r.cols));
        out.write(reinterpret_cast<const char*>(r.data),
                  static_cast<std::streamsize>(r.size() * sizeof(double)));
    }
    if (!out) throw DataError("failed writing " + path);
}

void load_blob(const std::string& path, ModelParams& params) {
    auto in = open_in(path, std::ios::binary);
    char magic[8];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kBlobMagic, sizeof(magic)) != 0)
        throw DataError(path + ": not a parameter blob");
    const auto version = read_u32(in);
    if (version != static_cast<std::uint32_t>(kCheckpointFormatVersion))
        throw VersionError(path + ": blob format version " + std::to_string(version) +
                           " unsupported");
    auto refs = tensor_refs(params);
    const auto count = read_u64(in);
    if (count != refs.size())
        throw DataError(path + ": tensor count mismatch");
    for (auto& r : refs) {
        const auto name_len = read_u32(in);
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) throw DataError(path + ": blob truncated");
        const auto rows = read_u64(in);
        const auto cols = read_u64(in);
        if (name != r.name || rows != static_cast<std::uint64_t>(r.rows) ||
            cols != static_cast<std::uint64_t>(r.cols))
            throw DataError(path + ": tensor \"" + name + "\" does not match manifest shape");
        if (!in.read(reinterpret_cast<char*>(r.data),
                     static_cast<std::streamsize>(r.size() * sizeof(double))))
            throw DataError(path + ": blob truncated");
    }
}

json manifest_to_json(const CheckpointManifest& m) {
    json j;
    j["format_version"] = m.format_version;
    j["model_variant"] = m.model_variant;
    j["hea_mode"] = m.hea_mode;
    j["d"] = m.d;
    j["m"] = m.m;
    j["beta"] = m.beta;
    j["vocab_size"] = m.vocab_size;
    j["visual_dim"] = m.visual_dim;
    j["l_max"] = m.l_max;
    j["seed"] = m.seed;
    j["parameter_blob_path"] = m.parameter_blob_path;
    return j;
}

CheckpointManifest manifest_from_json(const json& j) {
    CheckpointManifest m;
    try {
        m.format_version = j.at("format_version").get<int>();
        m.model_variant = j.at("model_variant").get<std::string>();
        m.hea_mode = j.at("hea_mode").get<std::string>();
        m.d = j.at("d").get<int>();
        m.m = j.at("m").get<int>();
        m.beta = j.at("beta").get<double>();
        m.vocab_size = j.at("vocab_size").get<int>();
        m.visual_dim = j.at("visual_dim").get<int>();
        m.l_max = j.at("l_max").get<int>();
        m.seed = j.at("seed").get<long long>();
        m.parameter_blob_path = j.at("parameter_blob_path").get<std::string>();
    } catch (const json::exception& e) {
        throw DataError(std::string("manifest: ") + e.what());
    }
    return m;
}

}  // namespace

void save_checkpoint(const std::string& dir, const Checkpoint& ckpt) {
    for (auto& r : tensor_refs(const_cast<ModelParams&>(ckpt.params))) {
        for (Eigen::Index i = 0; i < r.size(); ++i)
            if (!std::isfinite(r.data[i]))
                throw DataError("checkpoint has non-finite parameter in " + r.name);
    }
    std::filesystem::create_directories(dir);

    save_blob(dir + "/" + (ckpt.manifest.parameter_blob_path.empty()
                               ? "params.bin"
                               : ckpt.manifest.parameter_blob_path),
              const_cast<ModelParams&>(ckpt.params));

    CheckpointManifest manifest = ckpt.manifest;
    if (manifest.parameter_blob_path.empty()) manifest.parameter_blob_path = "params.bin";
    open_out(dir + "/manifest.json") << manifest_to_json(manifest).dump(2) << "\n";

    json vocab_json;
    vocab_json["size"] = ckpt.vocab.size();
    json ids = json::object();
    for (const auto& [tok, id] : ckpt.vocab.ids) ids[tok] = id;
    vocab_json["ids"] = ids;
    open_out(dir + "/vocab.json") << vocab_json.dump(2) << "\n";

    json index_json;
    index_json["users"] = ckpt.users;
    index_json["videos"] = ckpt.videos;
    open_out(dir + "/index.json") << index_json.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& dir) {
    json mj;
    try {
        open_in(dir + "/manifest.json") >> mj;
    } catch (const json::exception& e) {
        throw DataError(dir + "/manifest.json: " + e.what());
    }
    Checkpoint ckpt;
    ckpt.manifest = manifest_from_json(mj);
    if (ckpt.manifest.format_version != kCheckpointFormatVersion)
        throw VersionError(dir + ": checkpoint format version " +
                           std::to_string(ckpt.manifest.format_version) + " unsupported (expected " +
                           std::to_string(kCheckpointFormatVersion) + ")");

    json vj;
    try {
        open_in(dir + "/vocab.json") >> vj;
        ckpt.vocab.tokens.assign(vj.at("size").get<std::size_t>(), "");
        ckpt.vocab.ids.clear();
        for (const auto& [tok, id] : vj.at("ids").items()) {
            const int i = id.get<int>();
            if (i < 0 || i >= ckpt.vocab.size())
                throw DataError(dir + "/vocab.json: id out of range");
            ckpt.vocab.tokens[static_cast<std::size_t>(i)] = tok;
            ckpt.vocab.ids.emplace(tok, i);
        }
    } catch (const json::exception& e) {
        throw DataError(dir + "/vocab.json: " + e.what());
    }
    if (ckpt.vocab.size() != ckpt.manifest.vocab_size)
        throw DataError(dir + ": vocab size does not match manifest");

    json ij;
    try {
        open_in(dir + "/index.json") >> ij;
        ckpt.users = ij.at("users").get<std::vector<std::string>>();
        ckpt.videos = ij.at("videos").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw DataError(dir + "/index.json: " + e.what());
    }

    ModelShape shape;
    shape.variant = variant_from_string(ckpt.manifest.model_variant);
    shape.d = ckpt.manifest.d;
    shape.vocab_size = ckpt.manifest.vocab_size;
    shape.n_users = static_cast<int>(ckpt.users.size());
    shape.n_videos = static_cast<int>(ckpt.videos.size());
    shape.visual_dim = ckpt.manifest.visual_dim;
    ckpt.params = ModelParams::zeros(shape);
    load_blob(dir + "/" + ckpt.manifest.parameter_blob_path, ckpt.params);
    return ckpt;
}

}  // namespace tscrec
