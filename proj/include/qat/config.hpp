#pragma once

#include <string>

#include "qat/model.hpp"
#include "qat/textio.hpp"

namespace qat {

/// Parses line-oriented `key=value` text. Lines whose first non-blank
/// character is '#' are comments; unknown keys are errors so sweep typos
/// fail loudly.
inline ModelConfig parse_config_text(const std::string& text) {
    ModelConfig c;
    int line_no = 0;
    for (const std::string& raw : [&] {
             std::vector<std::string> lines;
             std::string cur;
             for (char ch : text) {
                 if (ch == '\n') {
                     lines.push_back(cur);
                     cur.clear();
                 } else {
                     cur += ch;
                 }
             }
             if (!cur.empty()) lines.push_back(cur);
             return lines;
         }()) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string where = "config line " + std::to_string(line_no) + " (" + key + ")";

        if (key == "vocab_size") c.vocab_size = int(parse_int(value, where));
        else if (key == "embed_dim") c.embed_dim = int(parse_int(value, where));
        else if (key == "seq_len") c.seq_len = int(parse_int(value, where));
        else if (key == "n_qubits") c.n_qubits = int(parse_int(value, where));
        else if (key == "attention_kind") c.attention_kind = attention_kind_from_string(value);
        else if (key == "n_heads") c.n_heads = int(parse_int(value, where));
        else if (key == "n_classes") c.n_classes = int(parse_int(value, where));
        else if (key == "dropout_rate") c.dropout_rate = parse_double(value, where);
        else if (key == "interference_coeff") c.interference_coeff = parse_double(value, where);
        else if (key == "kernel_depth") c.kernel_depth = int(parse_int(value, where));
        else if (key == "ln_eps") c.ln_eps = parse_double(value, where);
        else if (key == "seed") c.seed = std::uint64_t(parse_int(value, where));
        else if (key == "lr") c.lr = parse_double(value, where);
        else if (key == "weight_decay") c.weight_decay = parse_double(value, where);
        else if (key == "beta1") c.beta1 = parse_double(value, where);
        else if (key == "beta2") c.beta2 = parse_double(value, where);
        else if (key == "adam_eps") c.adam_eps = parse_double(value, where);
        else if (key == "epochs") c.epochs = int(parse_int(value, where));
        else if (key == "batch_size") c.batch_size = int(parse_int(value, where));
        else
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": unknown key '" + key + "'");
    }
    return c;
}

inline std::string config_to_text(const ModelConfig& c) {
    std::string s;
    s += "vocab_size=" + std::to_string(c.vocab_size) + "\n";
    s += "embed_dim=" + std::to_string(c.embed_dim) + "\n";
    s += "seq_len=" + std::to_string(c.seq_len) + "\n";
    s += "n_qubits=" + std::to_string(c.n_qubits) + "\n";
    s += "attention_kind=" + std::string(to_string(c.attention_kind)) + "\n";
    s += "n_heads=" + std::to_string(c.n_heads) + "\n";
    s += "n_classes=" + std::to_string(c.n_classes) + "\n";
    s += "dropout_rate=" + fmt_double(c.dropout_rate) + "\n";
    s += "interference_coeff=" + fmt_double(c.interference_coeff) + "\n";
    s += "kernel_depth=" + std::to_string(c.kernel_depth) + "\n";
    s += "ln_eps=" + fmt_double(c.ln_eps) + "\n";
    s += "seed=" + std::to_string(c.seed) + "\n";
    s += "lr=" + fmt_double(c.lr) + "\n";
    s += "weight_decay=" + fmt_double(c.weight_decay) + "\n";
    s += "beta1=" + fmt_double(c.beta1) + "\n";
    s += "beta2=" + fmt_double(c.beta2) + "\n";
    s += "adam_eps=" + fmt_double(c.adam_eps) + "\n";
    s += "epochs=" + std::to_string(c.epochs) + "\n";
    s += "batch_size=" + std::to_string(c.batch_size) + "\n";
    return s;
}

inline ModelConfig load_config(const std::string& path) {
    return parse_config_text(read_text_file(path));
}

inline void save_config(const std::string& path, const ModelConfig& c) {
    write_text_file(path, config_to_text(c));
}

} // namespace qat
