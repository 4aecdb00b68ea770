#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "qat/checkpoint.hpp"
#include "qat/config.hpp"
#include "qat/data.hpp"
#include "qat/metrics.hpp"
#include "qat/model.hpp"
#include "qat/nn.hpp"
#include "qat/vocab.hpp"

namespace qat {

// ---------------------------------------------------------------------------
// checkpoint bundle: the array file plus sidecars carrying config and vocab,
// so `eval --ckpt model.ckpt` is self-contained

struct LoadedModel {
    ModelConfig config;
    Vocab vocab;
    ParamMap params;
};

inline void save_model(const std::string& ckpt_path, const ModelConfig& config, const Vocab& vocab,
                       const ParamMap& params) {
    save_checkpoint(ckpt_path, params);
    save_config(ckpt_path + ".cfg", config);
    save_vocab(ckpt_path + ".vocab", vocab);
}

inline LoadedModel load_model(const std::string& ckpt_path) {
    LoadedModel m;
    m.config = load_config(ckpt_path + ".cfg");
    m.vocab = load_vocab(ckpt_path + ".vocab");
    m.params = load_checkpoint(ckpt_path);

    // the stored arrays must exactly match what the config would construct
    const ParamMap reference = init_params(m.config);
    if (reference.size() != m.params.size())
        throw std::runtime_error("checkpoint/config mismatch: parameter count differs");
    for (const auto& [name, tensor] : reference) {
        const auto it = m.params.find(name);
        if (it == m.params.end())
            throw std::runtime_error("checkpoint/config mismatch: missing array " + name);
        if (it->second.shape() != tensor.shape())
            throw std::runtime_error("checkpoint/config mismatch: shape differs for " + name);
    }
    return m;
}

// ---------------------------------------------------------------------------
// evaluation

struct EvalOutput {
    EvalReport report;
    std::vector<int> predictions;
    double max_attention = 0.0; // reported for the attention-spectra comparison
};

inline std::vector<std::vector<int>> id_batch(const std::vector<Example>& data, std::size_t begin,
                                              std::size_t end) {
    std::vector<std::vector<int>> ids;
    ids.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) ids.push_back(data[i].tokens);
    return ids;
}

inline EvalOutput evaluate_model(const ModelConfig& config, const ParamMap& params,
                                 const std::vector<Example>& data) {
    EvalOutput out;
    std::vector<int> gold;
    const std::size_t batch_size = std::size_t(std::max(1, config.batch_size));
    for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
        const std::size_t end = std::min(begin + batch_size, data.size());
        Diagnostics diag;
        const Tensor logits =
            model_forward(id_batch(data, begin, end), params, config, ForwardContext{false}, &diag);
        const int c = logits.dim(1);
        for (int b = 0; b < logits.dim(0); ++b) {
            int best = 0;
            for (int j = 1; j < c; ++j)
                if (logits.at(b, j) > logits.at(b, best)) best = j;
            out.predictions.push_back(best);
            gold.push_back(data[begin + b].label);
        }
        for (double a : diag.attn.values()) out.max_attention = std::max(out.max_attention, a);
    }
    out.report = compute_metrics(out.predictions, gold, config.n_classes);
    return out;
}

// ---------------------------------------------------------------------------
// training

struct TrainResult {
    std::string metrics_path;
    std::string final_ckpt;
    std::string best_ckpt;
    int best_epoch = -1;
    double best_dev_accuracy = -1.0;
    std::vector<std::string> log_lines; // exactly what metrics.csv holds
};

using WallClock = std::function<double()>; // seconds; injectable for tests

inline WallClock steady_wall_clock() {
    return [] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
            .count();
    };
}

/// AdamW training with per-epoch dev evaluation. Deterministic given the
/// config seed: batch order, dropout masks and initialization all derive from
/// keyed counter streams. Writes metrics.csv, final.ckpt and best.ckpt (by
/// dev accuracy, earliest epoch wins ties) under `out_dir`.
inline TrainResult train(const ModelConfig& config, const Vocab& vocab,
                         const std::vector<Example>& train_data,
                         const std::vector<Example>& dev_data, const std::string& out_dir,
                         WallClock clock = {}) {
    config.validate();
    if (train_data.empty()) throw std::invalid_argument("train: empty training set");
    if (dev_data.empty()) throw std::invalid_argument("train: empty dev set");
    for (const Example& e : train_data)
        for (int id : e.tokens)
            if (id >= config.vocab_size)
                throw std::invalid_argument("train: token id exceeds config vocab_size");
    if (!clock) clock = steady_wall_clock();

    std::filesystem::create_directories(out_dir);
    TrainResult result;
    result.metrics_path = out_dir + "/metrics.csv";
    result.final_ckpt = out_dir + "/final.ckpt";
    result.best_ckpt = out_dir + "/best.ckpt";

    std::ofstream log(result.metrics_path, std::ios::trunc);
    if (!log) throw std::runtime_error("train: cannot write " + result.metrics_path);
    auto emit = [&](const std::string& line) {
        log << line << "\n";
        log.flush();
        result.log_lines.push_back(line);
    };
    emit("epoch,train_loss,dev_accuracy,dev_macro_f1,wall_seconds");

    ParamMap params = init_params(config);
    OptimState opt;
    opt.lr = config.lr;
    opt.weight_decay = config.weight_decay;
    opt.beta1 = config.beta1;
    opt.beta2 = config.beta2;
    opt.eps = config.adam_eps;

    const std::size_t batch_size = std::size_t(std::max(1, config.batch_size));
    const rng::Key shuffle_root = rng::Key(config.seed).with("shuffle");

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double epoch_start = clock();

        // keyed Fisher-Yates so the visit order is seed-reproducible
        std::vector<std::size_t> order(train_data.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        const rng::Key ek = shuffle_root.with(std::uint64_t(epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[ek.bits(i) % i]);

        double loss_sum = 0.0;
        std::size_t seen = 0;
        std::uint64_t batch_index = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += batch_size, ++batch_index) {
            const std::size_t end = std::min(begin + batch_size, order.size());
            std::vector<std::vector<int>> ids;
            std::vector<int> labels;
            for (std::size_t i = begin; i < end; ++i) {
                ids.push_back(train_data[order[i]].tokens);
                labels.push_back(train_data[order[i]].label);
            }
            const ForwardContext ctx{true, std::uint64_t(epoch), batch_index};
            Tensor loss = cross_entropy(model_forward(ids, params, config, ctx), labels);
            loss.backward();
            adamw_step(params, opt);
            zero_grads(params);
            loss_sum += loss.item() * double(end - begin);
            seen += end - begin;
        }

        const EvalOutput dev = evaluate_model(config, params, dev_data);
        const double wall = clock() - epoch_start;
        emit(std::to_string(epoch) + "," + fmt_double(loss_sum / double(seen)) + "," +
             fmt_double(dev.report.accuracy) + "," + fmt_double(dev.report.macro_f1) + "," +
             fmt_double(wall));

        if (dev.report.accuracy > result.best_dev_accuracy) {
            result.best_dev_accuracy = dev.report.accuracy;
            result.best_epoch = epoch;
            save_model(result.best_ckpt, config, vocab, params);
        }
    }
    save_model(result.final_ckpt, config, vocab, params);
    return result;
}

// ---------------------------------------------------------------------------
// exports

/// One `<index>_attn.csv` per example: the L x L attention map of that pass,
/// rows summing to 1.
inline void export_attention(const ModelConfig& config, const ParamMap& params,
                             const std::vector<Example>& data, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const int seq = config.seq_len;
    for (std::size_t i = 0; i < data.size(); ++i) {
        Diagnostics diag;
        (void)model_forward({data[i].tokens}, params, config, ForwardContext{false}, &diag);
        std::string csv;
        for (int r = 0; r < seq; ++r) {
            for (int cidx = 0; cidx < seq; ++cidx) {
                if (cidx) csv += ",";
                csv += fmt_double(diag.attn.values()[std::size_t(r) * seq + cidx]);
            }
            csv += "\n";
        }
        write_text_file(out_dir + "/" + std::to_string(i) + "_attn.csv", csv);
    }
}

/// CSV of pooled sentence embeddings, one row per example:
/// label,dim0..dimD-1
inline void export_embeddings(const ModelConfig& config, const ParamMap& params,
                              const std::vector<Example>& data, const std::string& out_path) {
    std::string csv = "label";
    for (int j = 0; j < config.embed_dim; ++j) csv += ",dim" + std::to_string(j);
    csv += "\n";
    const std::size_t batch_size = std::size_t(std::max(1, config.batch_size));
    for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
        const std::size_t end = std::min(begin + batch_size, data.size());
        Diagnostics diag;
        (void)model_forward(id_batch(data, begin, end), params, config, ForwardContext{false},
                            &diag);
        for (std::size_t b = 0; b < end - begin; ++b) {
            csv += std::to_string(data[begin + b].label);
            for (int j = 0; j < config.embed_dim; ++j)
                csv += "," + fmt_double(diag.pooled.values()[b * std::size_t(config.embed_dim) + j]);
            csv += "\n";
        }
    }
    write_text_file(out_path, csv);
}

} // namespace qat
