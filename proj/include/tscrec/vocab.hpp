#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tscrec {

inline constexpr std::size_t kDefaultMaxTokens = 50;

// Unicode-whitespace split; every CJK code point becomes its own token.
// Output is truncated to max_tokens.
std::vector<std::string> tokenize(std::string_view text,
                                  std::size_t max_tokens = kDefaultMaxTokens);

// Token table with two reserved entries. Ids are dense; assignment iterates
// tokens in sorted order so rebuilding from the same corpus is reproducible.
struct Vocabulary {
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;

    std::vector<std::string> tokens;  // id -> token; [0]="<pad>", [1]="<unk>"
    std::map<std::string, int> ids;   // token -> id, reserved entries included

    int size() const { return static_cast<int>(tokens.size()); }
    int lookup(const std::string& token) const;
    std::vector<int> encode(const std::vector<std::string>& toks) const;
};

// Builds the table from raw texts, keeping tokens seen at least min_count
// times. Throws DataError when texts is empty.
Vocabulary build_vocab(const std::vector<std::string>& texts, int min_count = 1,
                       std::size_t max_tokens = kDefaultMaxTokens);

}  // namespace tscrec
