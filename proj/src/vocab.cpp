#include "tscrec/vocab.hpp"

#include <cstdint>

#include "tscrec/errors.hpp"

namespace tscrec {
namespace {

// Decodes the UTF-8 sequence starting at text[i]; malformed bytes fall back
// to a single-byte (Latin-1) code point so tokenization never fails.
std::pair<std::uint32_t, std::size_t> decode_utf8(std::string_view text, std::size_t i) {
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
    const unsigned char b0 = byte(i);
    if (b0 < 0x80) return {b0, 1};

    auto cont = [&](std::size_t k) { return k < text.size() && (byte(k) & 0xC0) == 0x80; };
    if ((b0 & 0xE0) == 0xC0 && cont(i + 1)) {
        return {(static_cast<std::uint32_t>(b0 & 0x1F) << 6) | (byte(i + 1) & 0x3F), 2};
    }
    if ((b0 & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2)) {
        return {(static_cast<std::uint32_t>(b0 & 0x0F) << 12) |
                    (static_cast<std::uint32_t>(byte(i + 1) & 0x3F) << 6) | (byte(i + 2) & 0x3F),
                3};
    }
    if ((b0 & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
        return {(static_cast<std::uint32_t>(b0 & 0x07) << 18) |
                    (static_cast<std::uint32_t>(byte(i + 1) & 0x3F) << 12) |
                    (static_cast<std::uint32_t>(byte(i + 2) & 0x3F) << 6) | (byte(i + 3) & 0x3F),
                4};
    }
    return {b0, 1};
}

// Unicode White_Space code points.
bool is_space(std::uint32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
        case 0x20: case 0x85: case 0xA0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

// Han ideographs (incl. extensions), kana, Hangul, CJK radicals/punctuation.
bool is_cjk(std::uint32_t cp) {
    return (cp >= 0x1100 && cp <= 0x11FF) ||    // Hangul jamo
           (cp >= 0x2E80 && cp <= 0x2FFF) ||    // radicals, Kangxi
           (cp >= 0x3001 && cp <= 0x303F) ||    // CJK punctuation (0x3000 is space)
           (cp >= 0x3040 && cp <= 0x30FF) ||    // hiragana, katakana
           (cp >= 0x3130 && cp <= 0x318F) ||    // Hangul compatibility jamo
           (cp >= 0x31F0 && cp <= 0x31FF) ||    // katakana extensions
           (cp >= 0x3400 && cp <= 0x4DBF) ||    // ideograph extension A
           (cp >= 0x4E00 && cp <= 0x9FFF) ||    // unified ideographs
           (cp >= 0xAC00 && cp <= 0xD7AF) ||    // Hangul syllables
           (cp >= 0xF900 && cp <= 0xFAFF) ||    // compatibility ideographs
           (cp >= 0x20000 && cp <= 0x2FA1F);    // ideograph extensions B+
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, std::size_t max_tokens) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            out.push_back(current);
            current.clear();
        }
    };
    std::size_t i = 0;
    while (i < text.size()) {
        const auto [cp, len] = decode_utf8(text, i);
        if (is_space(cp)) {
            flush();
        } else if (is_cjk(cp)) {
            flush();
            out.emplace_back(text.substr(i, len));
        } else {
            current.append(text.substr(i, len));
        }
        i += len;
    }
    flush();
    if (out.size() > max_tokens) out.resize(max_tokens);
    return out;
}

int Vocabulary::lookup(const std::string& token) const {
    const auto it = ids.find(token);
    return it == ids.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& toks) const {
    std::vector<int> out;
    out.reserve(toks.size());
    for (const auto& t : toks) out.push_back(lookup(t));
    return out;
}

Vocabulary build_vocab(const std::vector<std::string>& texts, int min_count,
                       std::size_t max_tokens) {
    if (texts.empty()) throw DataError("build_vocab: empty corpus");

    std::map<std::string, int> counts;  // sorted keys -> reproducible ids
    for (const auto& text : texts) {
        for (auto& tok : tokenize(text, max_tokens)) ++counts[tok];
    }

    Vocabulary vocab;
    vocab.tokens = {"<pad>", "<unk>"};
    vocab.ids = {{"<pad>", Vocabulary::kPad}, {"<unk>", Vocabulary::kUnk}};
    for (const auto& [tok, n] : counts) {
        if (n < min_count) continue;
        if (vocab.ids.count(tok)) continue;  // reserved names stay reserved
        vocab.ids.emplace(tok, vocab.size());
        vocab.tokens.push_back(tok);
    }
    return vocab;
}

}  // namespace tscrec
