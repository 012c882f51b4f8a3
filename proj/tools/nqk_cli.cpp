// Command-line front end for the NQK laboratory: dataset preparation,
// circuit training, kernel construction, SVM fitting, and the three
// experiment families, all config-driven and reproducible by seed.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <nqk/experiment.hpp>
#include <nqk/kernel.hpp>
#include <nqk/sha1.hpp>
#include <nqk/svm.hpp>
#include <nqk/train.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalFlags {
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out = "out";
    int threads = 0;
};

void add_globals(CLI::App* cmd, GlobalFlags& g) {
    cmd->add_option("--seed", g.seed, "Master seed")->each([&](const std::string&) {
        g.seed_set = true;
    });
    cmd->add_option("--out", g.out, "Output directory");
    cmd->add_option("--threads", g.threads,
                    "Worker threads (0 = all cores; NQK_THREADS overrides)");
}

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw nqk::data_error("cannot write '" + path.string() + "'");
    out << body;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

nqk::TrainConfig train_flags_to_config(const std::string& preset, double lr, int epochs,
                                       int batch, const std::string& grad,
                                       std::uint64_t seed) {
    nqk::TrainConfig cfg;
    if (preset == "optimal") {
        cfg = nqk::TrainConfig::optimal();
    } else if (preset == "suboptimal") {
        cfg = nqk::TrainConfig::suboptimal();
    } else if (preset == "scaling") {
        cfg = nqk::TrainConfig::scaling();
    } else if (preset != "custom") {
        throw nqk::config_error("unknown preset '" + preset + "'");
    }
    if (lr >= 0.0) cfg.learning_rate = lr;
    if (epochs >= 0) cfg.epochs = epochs;
    if (batch >= 0) cfg.batch_size = batch;
    if (!grad.empty()) cfg.gradient_method = nqk::gradient_method_from_string(grad);
    cfg.seed = seed;
    cfg.validate();
    return cfg;
}

nqk::QnnParams load_params_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw nqk::data_error("cannot open params file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw nqk::data_error("invalid JSON in '" + path + "': " + e.what());
    }
    if (j.contains("best_params")) {
        return nqk::TrainHistory::from_json(j).best_params;
    }
    return nqk::QnnParams::from_json(j);
}

nqk::ExperimentConfig load_experiment_config(const std::string& path, const GlobalFlags& g,
                                             const std::string& expected_kind,
                                             const std::string& preset_override) {
    nqk::ExperimentConfig cfg = nqk::ExperimentConfig::load(path);
    cfg.experiment = expected_kind;
    if (g.seed_set) cfg.seed = g.seed;
    if (g.threads > 0) cfg.threads = g.threads;
    if (!preset_override.empty()) {
        cfg.preset = preset_override;
        cfg.resolve_preset();
    }
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------

int cmd_prep(const GlobalFlags& g, const std::string& input, const std::string& synthetic,
             std::size_t m, double noise, double percentile, int p,
             const std::string& reducer_name, bool no_rebalance) {
    json report;
    nqk::FeatureTable table;
    if (!synthetic.empty()) {
        table = nqk::make_synthetic(nqk::synthetic_kind_from_string(synthetic), m, noise, g.seed);
        report["source"] = json{{"synthetic", synthetic}, {"m", m}, {"noise", noise}};
    } else if (!input.empty()) {
        table = nqk::read_feature_csv(input);
        report["source"] = json{{"csv", input}};
    } else {
        throw nqk::config_error("prep: need --input or --synthetic");
    }
    report["rows_in"] = table.rows;

    if (!table.labeled()) {
        if (table.gammas.empty()) {
            throw nqk::data_error("prep: input has neither labels nor gamma coverage");
        }
        std::vector<double> positive;
        for (double v : table.gammas) {
            if (v > 0.0) positive.push_back(v);
        }
        const double epsilon = nqk::percentile_threshold(positive, percentile);
        report["labeling"] = json{{"percentile", percentile},
                                  {"epsilon", epsilon},
                                  {"positive_tiles", positive.size()}};
        table = nqk::label_by_gamma(table, epsilon);
        report["labeling"]["rows_after_exclusion"] = table.rows;
    }
    if (!no_rebalance) {
        table = nqk::rebalance(table, g.seed);
        report["rows_after_rebalance"] = table.rows;
    }

    const nqk::ZscoreStats z = nqk::zscore_fit(table);
    table = nqk::zscore_apply(table, z);
    report["zscore_constant_columns"] = z.constant_columns;

    if (p > 0 && static_cast<std::size_t>(p) < table.cols) {
        const nqk::Reducer kind =
            reducer_name == "tsvd" ? nqk::Reducer::TruncatedSvd : nqk::Reducer::Pca;
        const nqk::ReducerModel model = nqk::reduction_fit(table, p, kind);
        table = nqk::reduction_apply(table, model);
        report["reduction"] = json{{"kind", reducer_name}, {"p", p},
                                   {"singular_values", model.singular_values}};
    }

    std::size_t clamped = 0;
    const nqk::MinmaxStats mm = nqk::minmax_fit(table);
    table = nqk::minmax_apply(table, mm, &clamped);
    report["minmax_clamped"] = clamped;
    report["rows_out"] = table.rows;
    report["cols_out"] = table.cols;
    report["content_hash"] = nqk::git_blob_hash(nqk::feature_csv_string(table));

    fs::create_directories(g.out);
    nqk::write_feature_csv(table, (fs::path(g.out) / "prepared.csv").string());
    write_json(fs::path(g.out) / "prep_report.json", report);
    std::printf("prep: %zu rows, %zu features -> %s/prepared.csv\n", table.rows, table.cols,
                g.out.c_str());
    return 0;
}

int cmd_train_qnn(const GlobalFlags& g, const std::string& data_path, int layers,
                  const nqk::TrainConfig& cfg) {
    const nqk::FeatureTable table = nqk::read_feature_csv(data_path);
    const nqk::LabeledPoints data = nqk::encode_table(table);
    nqk::Rng init_rng(nqk::mix_seed(cfg.seed, 0x696e6974ull));
    const nqk::QnnParams init = nqk::QnnParams::random_init(1, layers, init_rng);
    const nqk::TrainHistory history = nqk::train_qnn(init, data, cfg);

    fs::create_directories(g.out);
    write_json(fs::path(g.out) / "train_history.json", history.to_json());
    std::printf("train-qnn: best cost %.6f, accuracy %.4f -> %s/train_history.json\n",
                history.best_cost, nqk::qnn_accuracy(history.best_params, data), g.out.c_str());
    return 0;
}

int cmd_scale_qnn(const GlobalFlags& g, const std::string& data_path, int layers, int n_max,
                  const nqk::TrainConfig& cfg) {
    const nqk::FeatureTable table = nqk::read_feature_csv(data_path);
    const nqk::LabeledPoints data = nqk::encode_table(table);
    const std::vector<nqk::TrainHistory> stages = nqk::scale_qnn(data, n_max, layers, cfg);

    json histories = json::array();
    std::string costs = "n_qubits,best_cost,train_accuracy\n";
    for (int n = 1; n <= n_max; ++n) {
        const nqk::TrainHistory& h = stages[static_cast<std::size_t>(n - 1)];
        histories.push_back(h.to_json());
        char line[96];
        std::snprintf(line, sizeof(line), "%d,%.12g,%.10g\n", n, h.best_cost,
                      nqk::qnn_accuracy(h.best_params, data));
        costs += line;
    }
    fs::create_directories(g.out);
    write_json(fs::path(g.out) / "scale_histories.json", histories);
    write_text(fs::path(g.out) / "costs.csv", costs);
    std::printf("scale-qnn: %d stages, final best cost %.6f -> %s\n", n_max,
                stages.back().best_cost, g.out.c_str());
    return 0;
}

int cmd_kernel(const GlobalFlags& g, const std::string& data_path,
               const std::string& params_path, const std::string& kind_name, int n,
               const std::string& test_path) {
    const nqk::FeatureTable train = nqk::read_feature_csv(data_path);
    nqk::EmbeddingSpec spec;
    spec.kind = nqk::embedding_kind_from_string(kind_name);
    spec.params = load_params_file(params_path);
    spec.n_qubits = n > 0 ? n : spec.params.n_qubits;
    spec.validate();

    fs::create_directories(g.out);
    const nqk::GramMatrix gm = nqk::gram(spec, train);
    nqk::save_gram(gm, spec, train.cols, (fs::path(g.out) / "gram").string());

    if (!test_path.empty()) {
        const nqk::FeatureTable test = nqk::read_feature_csv(test_path);
        const nqk::CrossGram x = nqk::cross_gram(spec, train, test);
        std::string body;
        char buf[32];
        for (std::size_t i = 0; i < x.rows; ++i) {
            for (std::size_t j = 0; j < x.cols; ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", x.at(i, j));
                if (j) body += ',';
                body += buf;
            }
            body += '\n';
        }
        write_text(fs::path(g.out) / "cross.csv", body);
        write_json(fs::path(g.out) / "cross.json",
                   json{{"row_ids", x.row_ids}, {"col_ids", x.col_ids}});
    }
    std::printf("kernel: %zux%zu gram (%s, n=%d) -> %s\n", gm.size, gm.size,
                nqk::embedding_kind_name(spec.kind), spec.n_qubits, g.out.c_str());
    return 0;
}

int cmd_svm(const GlobalFlags& g, const std::string& gram_base, const std::string& data_path,
            const std::string& kernel_name, double gamma, double c_value,
            bool paper_exact_bias, bool no_shift) {
    const nqk::FeatureTable table = nqk::read_feature_csv(data_path);
    if (!table.labeled()) throw nqk::data_error("svm: data csv has no labels");

    nqk::SvmOptions opt;
    opt.C = c_value;
    opt.paper_exact_bias = paper_exact_bias;

    nqk::SvmModel model;
    double train_acc = 0.0;
    if (!gram_base.empty()) {
        // Precomputed fidelity kernel: labels are matched to the gram rows by id.
        const nqk::GramMatrix gm = nqk::load_gram(gram_base);
        std::map<std::string, int> label_of;
        for (std::size_t i = 0; i < table.rows; ++i) label_of[table.ids[i]] = table.labels[i];
        std::vector<int> labels;
        labels.reserve(gm.size);
        for (const std::string& id : gm.point_ids) {
            const auto it = label_of.find(id);
            if (it == label_of.end()) {
                throw nqk::data_error("svm: gram point id '" + id +
                                      "' not present in the data csv");
            }
            labels.push_back(it->second);
        }
        opt.shift_kernel = !no_shift;
        model = nqk::solve_dual(gm, labels, opt);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < gm.size; ++i) {
            std::span<const double> row{gm.entries.data() + i * gm.size, gm.size};
            if (nqk::svm_predict(model, row) == labels[i]) ++hits;
        }
        train_acc = static_cast<double>(hits) / static_cast<double>(gm.size);
    } else {
        // Classical kernel computed from the feature rows; unshifted.
        nqk::SvmKernel kernel;
        kernel.kind = nqk::svm_kernel_from_string(kernel_name);
        if (kernel.kind == nqk::SvmKernelKind::Precomputed) {
            throw nqk::config_error("svm: --kernel precomputed requires --gram");
        }
        kernel.gamma = gamma > 0.0 ? gamma : nqk::default_rbf_gamma(table);
        opt.shift_kernel = false;
        model = nqk::solve_features(table, kernel, opt);
        const std::vector<int> pred = nqk::svm_predict_table(model, table, table);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < table.rows; ++i) {
            if (pred[i] == table.labels[i]) ++hits;
        }
        train_acc = static_cast<double>(hits) / static_cast<double>(table.rows);
    }

    fs::create_directories(g.out);
    write_json(fs::path(g.out) / "svm_model.json", model.to_json());
    write_json(fs::path(g.out) / "svm_report.json",
               json{{"train_accuracy", train_acc},
                    {"support_vectors", model.support_indices.size()},
                    {"dual_objective", model.dual_objective},
                    {"kkt_gap", model.kkt_gap},
                    {"iterations", model.iterations}});
    std::printf("svm: %zu support vectors, train accuracy %.4f -> %s\n",
                model.support_indices.size(), train_acc, g.out.c_str());
    return 0;
}

int cmd_stats(const GlobalFlags& g, const std::string& input, const std::string& column,
              const std::string& model_filter) {
    std::ifstream in(input);
    if (!in) throw nqk::data_error("stats: cannot open '" + input + "'");
    std::string line;
    if (!std::getline(in, line)) throw nqk::data_error("stats: empty input");

    std::vector<std::string> header;
    {
        std::string cell;
        for (char ch : line + ",") {
            if (ch == ',') {
                header.push_back(cell);
                cell.clear();
            } else if (ch != '\r') {
                cell.push_back(ch);
            }
        }
    }
    const auto col_at = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw nqk::data_error("stats: no column '" + name + "' in '" + input + "'");
    };
    const std::size_t value_col = col_at(column);
    const std::size_t model_col = col_at("model");

    std::map<std::string, std::vector<double>> groups;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        for (char ch : line + ",") {
            if (ch == ',') {
                cells.push_back(cell);
                cell.clear();
            } else if (ch != '\r') {
                cell.push_back(ch);
            }
        }
        if (cells.size() <= std::max(value_col, model_col)) continue;
        if (!model_filter.empty() && cells[model_col] != model_filter) continue;
        try {
            groups[cells[model_col]].push_back(std::stod(cells[value_col]));
        } catch (const std::exception&) {
            throw nqk::data_error("stats: non-numeric value '" + cells[value_col] + "' in '" +
                                  input + "'");
        }
    }
    if (groups.empty()) throw nqk::data_error("stats: no matching rows");

    json out = json::object();
    std::string dat = "# index label whisker_low q25 median q75 whisker_high n_outliers\n";
    int index = 0;
    for (const auto& [name, values] : groups) {
        const nqk::BoxplotStats s = nqk::boxplot_stats(values);
        out[name] = s.to_json();
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%d %s %.10g %.10g %.10g %.10g %.10g %zu\n", index++,
                      name.c_str(), s.whisker_low, s.q25, s.median, s.q75, s.whisker_high,
                      s.outliers.size());
        dat += buf;
    }
    fs::create_directories(g.out);
    write_json(fs::path(g.out) / "stats.json", out);
    write_text(fs::path(g.out) / "whiskers.dat", dat);
    std::printf("stats: %zu group(s) on '%s' -> %s\n", groups.size(), column.c_str(),
                g.out.c_str());
    return 0;
}

int run_app(int argc, char** argv) {
    CLI::App app{"Neural quantum kernel laboratory"};
    app.require_subcommand(1);

    GlobalFlags g;

    // prep ------------------------------------------------------------------
    auto* prep = app.add_subcommand("prep", "Label, balance, and scale a feature table");
    std::string prep_input, prep_synth;
    std::size_t prep_m = 2000;
    double prep_noise = 0.1, prep_percentile = 15.0;
    int prep_p = 0;
    std::string prep_reducer = "pca";
    bool prep_no_rebalance = false;
    prep->add_option("--input", prep_input, "Feature CSV (id,f0..[,gamma][,label])");
    prep->add_option("--synthetic", prep_synth, "Generator: blobs|circles|moons");
    prep->add_option("--m", prep_m, "Synthetic sample count");
    prep->add_option("--noise", prep_noise, "Synthetic noise level");
    prep->add_option("--percentile", prep_percentile, "Positive-coverage percentile for epsilon");
    prep->add_option("--p", prep_p, "Reduce to p features (0 = keep all)");
    prep->add_option("--reducer", prep_reducer, "pca|tsvd");
    prep->add_flag("--no-rebalance", prep_no_rebalance, "Skip majority-class undersampling");
    add_globals(prep, g);

    // shared training flags ---------------------------------------------------
    std::string hp_preset = "custom", hp_grad;
    double hp_lr = -1.0;
    int hp_epochs = -1, hp_batch = -1, hp_layers = 6;
    auto add_train_flags = [&](CLI::App* cmd) {
        cmd->add_option("--preset", hp_preset, "optimal|suboptimal|scaling|custom");
        cmd->add_option("--lr", hp_lr, "Learning rate");
        cmd->add_option("--epochs", hp_epochs, "Training epochs");
        cmd->add_option("--batch", hp_batch, "Mini-batch size (0 = full batch)");
        cmd->add_option("--grad", hp_grad, "finite-diff|parameter-shift|adjoint");
        cmd->add_option("--layers", hp_layers, "Circuit layers");
    };

    // train-qnn / scale-qnn ----------------------------------------------------
    auto* train = app.add_subcommand("train-qnn", "Train the single-qubit circuit");
    std::string train_data;
    train->add_option("--data", train_data, "Labeled, scaled feature CSV")->required();
    add_train_flags(train);
    add_globals(train, g);

    auto* scale = app.add_subcommand("scale-qnn", "Iterative qubit scaling");
    std::string scale_data;
    int scale_n_max = 4;
    scale->add_option("--data", scale_data, "Labeled, scaled feature CSV")->required();
    scale->add_option("--n-max", scale_n_max, "Target qubit count");
    add_train_flags(scale);
    add_globals(scale, g);

    // kernel -------------------------------------------------------------------
    auto* kern = app.add_subcommand("kernel", "Build a Gram matrix from trained parameters");
    std::string kern_data, kern_params, kern_kind = "one_to_n", kern_test;
    int kern_n = 0;
    kern->add_option("--data", kern_data, "Training feature CSV")->required();
    kern->add_option("--params", kern_params, "Params or train-history JSON")->required();
    kern->add_option("--kind", kern_kind, "one_to_n|n_to_n");
    kern->add_option("--n", kern_n, "Kernel qubit count (one_to_n)");
    kern->add_option("--test", kern_test, "Also emit the test-vs-train block");
    add_globals(kern, g);

    // svm ------------------------------------------------------------------------
    auto* svm = app.add_subcommand("svm", "Fit the kernel SVM (saved Gram or classical kernel)");
    std::string svm_gram, svm_data, svm_kernel = "precomputed";
    double svm_c = 1.0, svm_gamma = 0.0;
    bool svm_paper_exact = false, svm_no_shift = false;
    svm->add_option("--gram", svm_gram, "Gram base path (without .csv/.json)");
    svm->add_option("--data", svm_data, "Labeled CSV supplying labels by id")->required();
    svm->add_option("--kernel", svm_kernel, "precomputed|linear|rbf (without --gram)");
    svm->add_option("--gamma", svm_gamma, "RBF width (0 = 1/(p*var))");
    svm->add_option("--C", svm_c, "Box constraint");
    svm->add_flag("--paper-exact-bias", svm_paper_exact,
                  "Predict without the intercept (default fits and uses it)");
    svm->add_flag("--no-shift", svm_no_shift, "Skip the (k+1)/2 transform");
    add_globals(svm, g);

    // experiments ------------------------------------------------------------------
    std::string cfg_path, preset_override;
    auto add_experiment = [&](const char* name, const char* help) {
        auto* cmd = app.add_subcommand(name, help);
        cmd->add_option("--config", cfg_path, "Experiment config JSON")->required();
        cmd->add_option("--preset", preset_override, "Override the training preset");
        add_globals(cmd, g);
        return cmd;
    };
    auto* kfold1n = add_experiment("kfold-1n", "k-fold single-qubit + replicated kernel study");
    auto* scalenn = add_experiment("scale-nn", "Repeated qubit-scaling + trained-kernel study");
    auto* classical = add_experiment("classical", "Classical SVC baselines on the same folds");

    // stats ---------------------------------------------------------------------------
    auto* stats = app.add_subcommand("stats", "Boxplot statistics from a folds.csv");
    std::string stats_input, stats_column = "test_acc", stats_model;
    stats->add_option("--input", stats_input, "folds.csv produced by an experiment")->required();
    stats->add_option("--column", stats_column, "train_acc|test_acc");
    stats->add_option("--model", stats_model, "Restrict to one model name");
    add_globals(stats, g);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help/version exit clean; bad flags are config errors
    }

    nqk::apply_thread_count(nqk::resolve_threads(g.threads));

    if (prep->parsed()) {
        return cmd_prep(g, prep_input, prep_synth, prep_m, prep_noise, prep_percentile, prep_p,
                        prep_reducer, prep_no_rebalance);
    }
    if (train->parsed()) {
        return cmd_train_qnn(g, train_data, hp_layers,
                             train_flags_to_config(hp_preset, hp_lr, hp_epochs, hp_batch,
                                                   hp_grad, g.seed));
    }
    if (scale->parsed()) {
        return cmd_scale_qnn(g, scale_data, hp_layers, scale_n_max,
                             train_flags_to_config(hp_preset, hp_lr, hp_epochs, hp_batch,
                                                   hp_grad, g.seed));
    }
    if (kern->parsed()) {
        return cmd_kernel(g, kern_data, kern_params, kern_kind, kern_n, kern_test);
    }
    if (svm->parsed()) {
        return cmd_svm(g, svm_gram, svm_data, svm_kernel, svm_gamma, svm_c, svm_paper_exact,
                       svm_no_shift);
    }
    if (kfold1n->parsed()) {
        const auto cfg = load_experiment_config(cfg_path, g, "one_to_n", preset_override);
        write_bundle(nqk::run_one_to_n(cfg), g.out);
        std::printf("kfold-1n: results in %s\n", g.out.c_str());
        return 0;
    }
    if (scalenn->parsed()) {
        const auto cfg = load_experiment_config(cfg_path, g, "n_to_n", preset_override);
        write_bundle(nqk::run_n_to_n(cfg), g.out);
        std::printf("scale-nn: results in %s\n", g.out.c_str());
        return 0;
    }
    if (classical->parsed()) {
        const auto cfg = load_experiment_config(cfg_path, g, "classical", preset_override);
        write_bundle(nqk::run_classical(cfg), g.out);
        std::printf("classical: results in %s\n", g.out.c_str());
        return 0;
    }
    if (stats->parsed()) {
        return cmd_stats(g, stats_input, stats_column, stats_model);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_app(argc, argv);
    } catch (const nqk::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const nqk::data_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const nqk::numerical_error& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
