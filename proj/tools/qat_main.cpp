// qat: train/evaluate the quantum-enhanced text classifier and its classical
// baselines, inspect kernels, and export attention maps and embeddings.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qat/config.hpp"
#include "qat/data.hpp"
#include "qat/metrics.hpp"
#include "qat/qkernel.hpp"
#include "qat/train.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 2;

std::vector<int> read_predictions(const std::string& path) {
    std::vector<int> preds;
    int line_no = 0;
    for (const std::string& line : qat::read_lines(path)) {
        ++line_no;
        if (qat::trim(line).empty()) continue;
        preds.push_back(int(qat::parse_int(qat::trim(line),
                                           path + ": line " + std::to_string(line_no))));
    }
    return preds;
}

void write_predictions(const std::string& path, const std::vector<int>& preds) {
    std::string s;
    for (int p : preds) s += std::to_string(p) + "\n";
    qat::write_text_file(path, s);
}

qat::KernelParams load_kernel_params(const std::string& path) {
    std::vector<double> theta0, theta1;
    int n_qubits = 0;
    int line_no = 0;
    for (const std::string& raw : qat::read_lines(path)) {
        ++line_no;
        const std::string line = qat::trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                     ": expected key=value");
        const std::string key = qat::trim(line.substr(0, eq));
        const std::string value = qat::trim(line.substr(eq + 1));
        if (key == "theta0") theta0 = qat::parse_csv_doubles(value, "theta0");
        else if (key == "theta1") theta1 = qat::parse_csv_doubles(value, "theta1");
        else if (key == "n_qubits") n_qubits = int(qat::parse_int(value, "n_qubits"));
        else
            throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                     ": unknown key '" + key + "'");
    }
    if (theta0.empty() || theta1.empty())
        throw std::runtime_error(path + ": theta0 and theta1 are both required");
    qat::KernelParams kp(theta0, theta1);
    if (n_qubits != 0 && n_qubits != kp.n_qubits)
        throw std::runtime_error(path + ": n_qubits disagrees with theta lengths");
    return kp;
}

std::vector<std::vector<double>> load_gram_inputs(const std::string& path) {
    std::vector<std::vector<double>> rows;
    int line_no = 0;
    for (const std::string& raw : qat::read_lines(path)) {
        ++line_no;
        if (qat::trim(raw).empty()) continue;
        std::vector<double> row;
        const char delim = raw.find('\t') != std::string::npos ? '\t' : ',';
        for (const std::string& cell : qat::split(raw, delim))
            row.push_back(qat::parse_double(qat::trim(cell),
                                            path + ": line " + std::to_string(line_no)));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error(path + ": no input vectors");
    return rows;
}

void print_eval_report(const qat::EvalOutput& out, int n_classes) {
    std::printf("examples=%d\n", out.report.total);
    std::printf("accuracy=%s\n", qat::fmt_double(out.report.accuracy).c_str());
    std::printf("macro_f1=%s\n", qat::fmt_double(out.report.macro_f1).c_str());
    for (int c = 0; c < n_classes; ++c)
        std::printf("class%d precision=%s recall=%s f1=%s\n", c,
                    qat::fmt_double(out.report.precision[c]).c_str(),
                    qat::fmt_double(out.report.recall[c]).c_str(),
                    qat::fmt_double(out.report.f1[c]).c_str());
    std::printf("confusion=");
    for (int g = 0; g < n_classes; ++g)
        for (int p = 0; p < n_classes; ++p)
            std::printf("%lld%s", out.report.confusion[g][p],
                        (g == n_classes - 1 && p == n_classes - 1) ? "\n" : ",");
    std::printf("max_attention=%s\n", qat::fmt_double(out.max_attention).c_str());
}

int run(int argc, char** argv) {
    CLI::App app{"quantum-enhanced transformer text classification"};
    app.require_subcommand(1);

    // train
    std::string train_config, train_train, train_dev, train_out;
    CLI::App* cmd_train = app.add_subcommand("train", "train a model from TSV data");
    cmd_train->add_option("--config", train_config, "key=value config file")->required();
    cmd_train->add_option("--train", train_train, "training TSV (label<TAB>text)")->required();
    cmd_train->add_option("--dev", train_dev, "dev TSV")->required();
    cmd_train->add_option("--out", train_out, "output directory")->required();

    // eval
    std::string eval_ckpt, eval_data, eval_preds;
    CLI::App* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint on TSV data");
    cmd_eval->add_option("--ckpt", eval_ckpt, "checkpoint path")->required();
    cmd_eval->add_option("--data", eval_data, "TSV data")->required();
    cmd_eval->add_option("--preds", eval_preds, "also write predictions CSV here");

    // disagree
    std::string dis_a, dis_b, dis_gold;
    CLI::App* cmd_dis = app.add_subcommand("disagree", "compare two prediction files against gold");
    cmd_dis->add_option("--a", dis_a, "predictions CSV of model A")->required();
    cmd_dis->add_option("--b", dis_b, "predictions CSV of model B")->required();
    cmd_dis->add_option("--gold", dis_gold, "gold TSV")->required();

    // export-attn
    std::string attn_ckpt, attn_data, attn_out;
    CLI::App* cmd_attn = app.add_subcommand("export-attn", "write per-example attention CSVs");
    cmd_attn->add_option("--ckpt", attn_ckpt, "checkpoint path")->required();
    cmd_attn->add_option("--data", attn_data, "TSV data")->required();
    cmd_attn->add_option("--out", attn_out, "output directory")->required();

    // export-embed
    std::string emb_ckpt, emb_data, emb_out;
    CLI::App* cmd_emb = app.add_subcommand("export-embed", "write pooled sentence embeddings CSV");
    cmd_emb->add_option("--ckpt", emb_ckpt, "checkpoint path")->required();
    cmd_emb->add_option("--data", emb_data, "TSV data")->required();
    cmd_emb->add_option("--out", emb_out, "output CSV path")->required();

    // kernel
    std::string ker_x, ker_y, ker_params, ker_gram;
    int ker_n = 6;
    int ker_depth = 1;
    bool ker_dump = false;
    CLI::App* cmd_ker = app.add_subcommand("kernel", "quantum kernel utilities");
    cmd_ker->add_option("--x", ker_x, "input vector, comma-separated");
    cmd_ker->add_option("--y", ker_y, "second input vector for K(x,y)");
    cmd_ker->add_option("--params", ker_params, "kernel parameter file (theta0=..., theta1=...)");
    cmd_ker->add_option("--gram", ker_gram, "TSV of input vectors; prints the Gram matrix");
    cmd_ker->add_option("--n", ker_n, "qubit count when --params is absent (default 6)");
    cmd_ker->add_option("--depth", ker_depth, "ansatz repetitions (default 1)");
    cmd_ker->add_flag("--dump-state", ker_dump, "print the statevector for --x as index,re,im (17 digits)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInputError;
    }

    if (cmd_train->parsed()) {
        qat::ModelConfig config = qat::load_config(train_config);
        const auto train_raw = qat::load_tsv(train_train);
        const auto dev_raw = qat::load_tsv(train_dev);
        if (train_raw.empty()) throw std::runtime_error(train_train + ": empty training file");
        if (dev_raw.empty()) throw std::runtime_error(train_dev + ": empty dev file");

        std::vector<std::string> corpus;
        for (const auto& r : train_raw) corpus.push_back(r.text);
        const qat::Vocab vocab = qat::build_vocab(corpus, config.vocab_size);
        config.vocab_size = vocab.size();

        const auto train_data = qat::encode_examples(train_raw, vocab, config.seq_len, config.n_classes);
        const auto dev_data = qat::encode_examples(dev_raw, vocab, config.seq_len, config.n_classes);
        const qat::TrainResult r = qat::train(config, vocab, train_data, dev_data, train_out);
        std::printf("metrics=%s\n", r.metrics_path.c_str());
        std::printf("final=%s\n", r.final_ckpt.c_str());
        std::printf("best=%s (epoch %d, dev accuracy %s)\n", r.best_ckpt.c_str(), r.best_epoch,
                    qat::fmt_double(r.best_dev_accuracy).c_str());
        return kExitOk;
    }

    if (cmd_eval->parsed()) {
        const qat::LoadedModel m = qat::load_model(eval_ckpt);
        const auto raw = qat::load_tsv(eval_data);
        const auto data = qat::encode_examples(raw, m.vocab, m.config.seq_len, m.config.n_classes);
        const qat::EvalOutput out = qat::evaluate_model(m.config, m.params, data);
        print_eval_report(out, m.config.n_classes);
        if (!eval_preds.empty()) write_predictions(eval_preds, out.predictions);
        return kExitOk;
    }

    if (cmd_dis->parsed()) {
        const std::vector<int> a = read_predictions(dis_a);
        const std::vector<int> b = read_predictions(dis_b);
        std::vector<int> gold;
        for (const auto& r : qat::load_tsv(dis_gold)) gold.push_back(r.label);
        const qat::DisagreementReport r = qat::disagree(a, b, gold);
        std::printf("n_total=%d\n", r.n_total);
        std::printf("n_disagree=%d\n", r.n_disagree);
        std::printf("a_correct=%d\n", r.a_correct);
        std::printf("b_correct=%d\n", r.b_correct);
        std::printf("both_wrong=%d\n", r.both_wrong);
        return kExitOk;
    }

    if (cmd_attn->parsed()) {
        const qat::LoadedModel m = qat::load_model(attn_ckpt);
        const auto raw = qat::load_tsv(attn_data);
        const auto data = qat::encode_examples(raw, m.vocab, m.config.seq_len, m.config.n_classes);
        qat::export_attention(m.config, m.params, data, attn_out);
        std::printf("wrote %zu attention maps to %s\n", data.size(), attn_out.c_str());
        return kExitOk;
    }

    if (cmd_emb->parsed()) {
        const qat::LoadedModel m = qat::load_model(emb_ckpt);
        const auto raw = qat::load_tsv(emb_data);
        const auto data = qat::encode_examples(raw, m.vocab, m.config.seq_len, m.config.n_classes);
        qat::export_embeddings(m.config, m.params, data, emb_out);
        std::printf("wrote %zu embeddings to %s\n", data.size(), emb_out.c_str());
        return kExitOk;
    }

    if (cmd_ker->parsed()) {
        if (!ker_gram.empty()) {
            const auto rows = load_gram_inputs(ker_gram);
            const qat::KernelParams kp = ker_params.empty()
                                             ? qat::KernelParams::ones(ker_n)
                                             : load_kernel_params(ker_params);
            const auto gram = qat::gram_matrix(rows, kp, ker_depth);
            for (const auto& row : gram) {
                std::string line;
                for (std::size_t j = 0; j < row.size(); ++j) {
                    if (j) line += ",";
                    line += qat::fmt_double(row[j]);
                }
                std::printf("%s\n", line.c_str());
            }
            return kExitOk;
        }
        if (ker_x.empty())
            throw std::runtime_error("kernel: provide --x (with optional --y/--dump-state) or --gram");
        const std::vector<double> x = qat::parse_csv_doubles(ker_x, "--x");
        const qat::KernelParams kp =
            ker_params.empty() ? qat::KernelParams::ones(ker_n) : load_kernel_params(ker_params);
        if (ker_dump) {
            const qat::Circuit circuit = qat::build_kernel_circuit(x, kp, ker_depth);
            const qat::StateVector state = qat::run_circuit(circuit, kp.flat(), x);
            for (std::size_t i = 0; i < state.dim(); ++i)
                std::printf("%zu,%.17g,%.17g\n", i, state.amplitudes[i].real(),
                            state.amplitudes[i].imag());
            return kExitOk;
        }
        if (!ker_y.empty()) {
            const std::vector<double> y = qat::parse_csv_doubles(ker_y, "--y");
            std::printf("%s\n", qat::fmt_double(qat::kernel(x, y, kp, ker_depth)).c_str());
            return kExitOk;
        }
        const qat::FeatureVector phi = qat::feature_map(x, kp, ker_depth);
        std::string line;
        for (std::size_t i = 0; i < phi.values.size(); ++i) {
            if (i) line += ",";
            line += qat::fmt_double(phi.values[i]);
        }
        std::printf("%s\n", line.c_str());
        return kExitOk;
    }

    return kExitInputError;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "qat: %s\n", e.what());
        return kExitInputError;
    }
}
