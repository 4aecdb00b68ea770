#pragma once

// Synthetic linearly separable classification task: label 1 iff the text
// contains the marker word. Deterministic in the seed.

#include <random>
#include <string>
#include <vector>

#include "qat/data.hpp"

namespace testutil {

inline std::vector<qat::LabeledText> make_toy_data(int count, std::uint64_t seed) {
    static const char* kWords[] = {"alpha", "beta",  "gamma", "delta", "epsilon", "zeta",
                                   "eta",   "theta", "iota",  "kappa", "lambda",  "mu",
                                   "nu",    "xi",    "rho",   "sigma", "tau",     "omega"};
    constexpr int kWordCount = int(sizeof(kWords) / sizeof(kWords[0]));
    const std::string marker = "quantum";

    std::mt19937_64 rng(seed);
    std::vector<qat::LabeledText> out;
    out.reserve(std::size_t(count));
    for (int i = 0; i < count; ++i) {
        const int label = i % 2;
        const int n_words = 3 + int(rng() % 5);
        std::vector<std::string> words;
        for (int w = 0; w < n_words; ++w) words.push_back(kWords[rng() % kWordCount]);
        if (label == 1) words[rng() % words.size()] = marker;
        std::string text;
        for (std::size_t w = 0; w < words.size(); ++w) {
            if (w) text += " ";
            text += words[w];
        }
        out.push_back(qat::LabeledText{label, text});
    }
    return out;
}

inline std::string to_tsv(const std::vector<qat::LabeledText>& items) {
    std::string s;
    for (const qat::LabeledText& it : items) s += std::to_string(it.label) + "\t" + it.text + "\n";
    return s;
}

} // namespace testutil
