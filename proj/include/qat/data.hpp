#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "qat/textio.hpp"
#include "qat/vocab.hpp"

namespace qat {

struct LabeledText {
    int label = 0;
    std::string text;
};

/// One encoded training/eval item: fixed-length id sequence plus class index.
struct Example {
    int label = 0;
    std::vector<int> tokens;
};

/// Reads `label<TAB>text` lines; 0-based integer labels. Malformed lines
/// report their 1-based line number. An empty file is an empty dataset.
inline std::vector<LabeledText> load_tsv(const std::string& path) {
    std::vector<LabeledText> out;
    int line_no = 0;
    for (const std::string& line : read_lines(path)) {
        ++line_no;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": missing tab");
        const std::string label_str = line.substr(0, tab);
        long long label = 0;
        try {
            label = parse_int(label_str, "label");
        } catch (const std::exception&) {
            throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                     ": label is not an integer: '" + label_str + "'");
        }
        if (label < 0)
            throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                     ": label must be >= 0");
        out.push_back(LabeledText{int(label), line.substr(tab + 1)});
    }
    return out;
}

inline std::vector<Example> encode_examples(const std::vector<LabeledText>& items, const Vocab& v,
                                            int seq_len, int n_classes) {
    std::vector<Example> out;
    out.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].label >= n_classes)
            throw std::runtime_error("example " + std::to_string(i + 1) + ": label " +
                                     std::to_string(items[i].label) + " out of range for " +
                                     std::to_string(n_classes) + " classes");
        out.push_back(Example{items[i].label, tokenize(items[i].text, v, seq_len)});
    }
    return out;
}

} // namespace qat
