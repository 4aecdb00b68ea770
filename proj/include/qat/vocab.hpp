#pragma once

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "qat/textio.hpp"

namespace qat {

/// Word vocabulary with two reserved ids: 0 = padding, 1 = unknown. Word ids
/// start at 2 and are assigned by descending corpus frequency, ties broken
/// lexicographically.
struct Vocab {
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;

    std::vector<std::string> words; // words[i] has id i + 2
    std::unordered_map<std::string, int> index;

    int size() const { return int(words.size()) + 2; }

    int id_of(const std::string& w) const {
        const auto it = index.find(w);
        return it == index.end() ? kUnk : it->second;
    }
};

/// Lowercases, strips ASCII punctuation and splits on whitespace; tokens that
/// were pure punctuation disappear.
inline std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    };
    for (unsigned char ch : text) {
        if (std::isspace(ch)) {
            flush();
        } else if (ch < 128 && std::ispunct(ch)) {
            continue;
        } else {
            cur += char(std::tolower(ch));
        }
    }
    flush();
    return out;
}

/// Builds the vocabulary from raw texts. `max_size` counts the reserved ids;
/// 0 keeps every word.
inline Vocab build_vocab(const std::vector<std::string>& corpus, int max_size = 0) {
    if (corpus.empty()) throw std::invalid_argument("build_vocab: empty corpus");
    std::unordered_map<std::string, long long> counts;
    for (const std::string& text : corpus)
        for (const std::string& w : split_words(text)) ++counts[w];
    if (counts.empty()) throw std::invalid_argument("build_vocab: corpus contains no tokens");

    std::vector<std::pair<std::string, long long>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (max_size > 2 && int(ranked.size()) > max_size - 2) ranked.resize(std::size_t(max_size) - 2);

    Vocab v;
    v.words.reserve(ranked.size());
    for (const auto& [word, count] : ranked) {
        v.index[word] = int(v.words.size()) + 2;
        v.words.push_back(word);
    }
    return v;
}

/// Maps text to exactly `seq_len` ids: unknown words to 1, then truncated or
/// padded with 0.
inline std::vector<int> tokenize(const std::string& text, const Vocab& v, int seq_len) {
    std::vector<int> ids;
    ids.reserve(std::size_t(seq_len));
    for (const std::string& w : split_words(text)) {
        if (int(ids.size()) == seq_len) break;
        ids.push_back(v.id_of(w));
    }
    ids.resize(std::size_t(seq_len), Vocab::kPad);
    return ids;
}

inline void save_vocab(const std::string& path, const Vocab& v) {
    std::string s;
    for (const std::string& w : v.words) s += w + "\n";
    write_text_file(path, s);
}

inline Vocab load_vocab(const std::string& path) {
    Vocab v;
    for (const std::string& line : read_lines(path)) {
        if (line.empty()) continue;
        v.index[line] = int(v.words.size()) + 2;
        v.words.push_back(line);
    }
    return v;
}

} // namespace qat
