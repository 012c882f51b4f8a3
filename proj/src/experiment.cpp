#include "nqk/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "nqk/kernel.hpp"
#include "nqk/sha1.hpp"

namespace nqk {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Boxplot statistics
// ---------------------------------------------------------------------------

namespace {

double interpolated_quantile(const std::vector<double>& sorted, double q) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = q * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= n) return sorted[n - 1];
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

json BoxplotStats::to_json() const {
    return json{{"q25", q25},
                {"median", median},
                {"q75", q75},
                {"whisker_low", whisker_low},
                {"whisker_high", whisker_high},
                {"outliers", outliers}};
}

BoxplotStats boxplot_stats(std::vector<double> values) {
    if (values.empty()) throw data_error("boxplot_stats: no values");
    std::sort(values.begin(), values.end());

    BoxplotStats s;
    s.q25 = interpolated_quantile(values, 0.25);
    s.median = interpolated_quantile(values, 0.50);
    s.q75 = interpolated_quantile(values, 0.75);
    const double iqr = s.q75 - s.q25;
    const double low_fence = s.q25 - 1.5 * iqr;
    const double high_fence = s.q75 + 1.5 * iqr;

    s.whisker_low = s.q25;
    s.whisker_high = s.q75;
    for (double v : values) {
        if (v >= low_fence) {
            s.whisker_low = v;  // first (smallest) value inside the fence
            break;
        }
    }
    for (auto it = values.rbegin(); it != values.rend(); ++it) {
        if (*it <= high_fence) {
            s.whisker_high = *it;
            break;
        }
    }
    for (double v : values) {
        if (v < low_fence || v > high_fence) s.outliers.push_back(v);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

json DatasetConfig::to_json() const {
    json j{{"kind", kind}};
    if (kind == "synthetic") {
        j["synthetic"] = synthetic_kind_name(synthetic_kind);
        j["m"] = m;
        j["noise"] = noise;
    } else {
        j["path"] = path;
        j["label_percentile"] = label_percentile;
        j["rebalance"] = rebalance;
    }
    return j;
}

DatasetConfig DatasetConfig::from_json(const json& j) {
    DatasetConfig d;
    d.kind = j.value("kind", d.kind);
    if (d.kind == "synthetic") {
        d.synthetic_kind = synthetic_kind_from_string(j.value("synthetic", "circles"));
        d.m = j.value("m", d.m);
        d.noise = j.value("noise", d.noise);
    } else if (d.kind == "csv") {
        d.path = j.value("path", std::string{});
        if (d.path.empty()) throw config_error("dataset: csv kind needs a 'path'");
        d.label_percentile = j.value("label_percentile", d.label_percentile);
        d.rebalance = j.value("rebalance", d.rebalance);
    } else {
        throw config_error("dataset: unknown kind '" + d.kind + "'");
    }
    return d;
}

void ExperimentConfig::resolve_preset() {
    const std::uint64_t keep_seed = train.seed;
    if (preset == "optimal") {
        train = TrainConfig::optimal();
    } else if (preset == "suboptimal") {
        train = TrainConfig::suboptimal();
    } else if (preset == "scaling") {
        train = TrainConfig::scaling();
    } else if (preset != "custom") {
        throw config_error("unknown training preset '" + preset + "'");
    }
    train.seed = keep_seed;
}

void ExperimentConfig::validate() const {
    if (experiment != "one_to_n" && experiment != "n_to_n" && experiment != "classical") {
        throw config_error("unknown experiment kind '" + experiment + "'");
    }
    if (p < 1) throw config_error("p must be >= 1");
    if (n_qubits < 1 || n_qubits > kMaxQubits) throw config_error("n_qubits out of range");
    if (n_max < 1 || n_max > kMaxQubits) throw config_error("n_max out of range");
    if (layers < 1) throw config_error("layers must be >= 1");
    if (k_folds < 2) throw config_error("k_folds must be >= 2");
    if (repeats < 1) throw config_error("repeats must be >= 1");
    if (!(svm_c > 0.0)) throw config_error("svm_c must be positive");
    train.validate();
}

json ExperimentConfig::to_json() const {
    return json{{"experiment", experiment},
                {"dataset", dataset.to_json()},
                {"p", p},
                {"reducer", reducer == Reducer::Pca ? "pca" : "tsvd"},
                {"n_qubits", n_qubits},
                {"n_max", n_max},
                {"layers", layers},
                {"preset", preset},
                {"train", train.to_json()},
                {"k_folds", k_folds},
                {"repeats", repeats},
                {"train_size", train_size},
                {"test_size", test_size},
                {"seed", seed},
                {"svm_c", svm_c},
                {"paper_exact_bias", paper_exact_bias},
                {"search_iters", search_iters},
                {"threads", threads}};
}

namespace {

TrainConfig merge_train_overrides(TrainConfig base, const json& j) {
    base.learning_rate = j.value("learning_rate", base.learning_rate);
    base.epochs = j.value("epochs", base.epochs);
    base.batch_size = j.value("batch_size", base.batch_size);
    base.seed = j.value("seed", base.seed);
    base.adam_beta1 = j.value("adam_beta1", base.adam_beta1);
    base.adam_beta2 = j.value("adam_beta2", base.adam_beta2);
    base.adam_eps = j.value("adam_eps", base.adam_eps);
    if (j.contains("gradient_method")) {
        base.gradient_method = gradient_method_from_string(j["gradient_method"].get<std::string>());
    }
    base.fd_step = j.value("fd_step", base.fd_step);
    return base;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    c.experiment = j.value("experiment", c.experiment);
    if (j.contains("dataset")) c.dataset = DatasetConfig::from_json(j["dataset"]);
    c.p = j.value("p", c.p);
    if (j.contains("reducer")) {
        const std::string r = j["reducer"].get<std::string>();
        if (r == "pca") {
            c.reducer = Reducer::Pca;
        } else if (r == "tsvd") {
            c.reducer = Reducer::TruncatedSvd;
        } else {
            throw config_error("unknown reducer '" + r + "'");
        }
    }
    c.n_qubits = j.value("n_qubits", c.n_qubits);
    c.n_max = j.value("n_max", c.n_max);
    c.layers = j.value("layers", c.layers);
    c.preset = j.value("preset", c.preset);
    c.resolve_preset();
    if (j.contains("train")) c.train = merge_train_overrides(c.train, j["train"]);
    c.k_folds = j.value("k_folds", c.k_folds);
    c.repeats = j.value("repeats", c.repeats);
    c.train_size = j.value("train_size", c.train_size);
    c.test_size = j.value("test_size", c.test_size);
    c.seed = j.value("seed", c.seed);
    c.svm_c = j.value("svm_c", c.svm_c);
    c.paper_exact_bias = j.value("paper_exact_bias", c.paper_exact_bias);
    c.search_iters = j.value("search_iters", c.search_iters);
    c.threads = j.value("threads", c.threads);
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw config_error("invalid JSON in '" + path + "': " + e.what());
    }
    return from_json(j);
}

// ---------------------------------------------------------------------------
// Dataset assembly and preprocessing
// ---------------------------------------------------------------------------

FeatureTable load_experiment_table(const ExperimentConfig& config, std::string* content_hash) {
    FeatureTable table;
    if (config.dataset.kind == "synthetic") {
        table = make_synthetic(config.dataset.synthetic_kind, config.dataset.m,
                               config.dataset.noise, config.seed);
    } else {
        table = read_feature_csv(config.dataset.path);
        if (!table.labeled()) {
            if (table.gammas.empty()) {
                throw data_error("dataset csv has neither labels nor gamma coverage");
            }
            std::vector<double> positive;
            for (double g : table.gammas) {
                if (g > 0.0) positive.push_back(g);
            }
            const double epsilon =
                percentile_threshold(positive, config.dataset.label_percentile);
            table = label_by_gamma(table, epsilon);
        }
        if (config.dataset.rebalance) table = rebalance(table, config.seed);
    }
    table.validate();
    if (content_hash) *content_hash = git_blob_hash(feature_csv_string(table));
    return table;
}

void prepare_train_test(const FeatureTable& train_raw, const FeatureTable& test_raw,
                        int p, Reducer reducer, FeatureTable& train_out,
                        FeatureTable& test_out) {
    const ZscoreStats z = zscore_fit(train_raw);
    FeatureTable train = zscore_apply(train_raw, z);
    FeatureTable test = zscore_apply(test_raw, z);

    const std::size_t target = static_cast<std::size_t>(p);
    if (train.cols > target) {
        const ReducerModel model = reduction_fit(train, target, reducer);
        train = reduction_apply(train, model);
        test = reduction_apply(test, model);
    } else if (train.cols < target) {
        throw config_error("dataset has " + std::to_string(train.cols) +
                           " features, cannot reduce to p=" + std::to_string(p));
    }

    const MinmaxStats mm = minmax_fit(train);
    train_out = minmax_apply(train, mm);
    test_out = minmax_apply(test, mm);
}

// ---------------------------------------------------------------------------
// Result bundles
// ---------------------------------------------------------------------------

namespace {

void append_acc(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    out += buf;
}

json metric_summary(const std::vector<double>& values) {
    return json{{"mean", mean_of(values)},
                {"std", std_of(values)},
                {"boxplot", boxplot_stats(values).to_json()}};
}

struct ModelMetrics {
    std::vector<double> train;
    std::vector<double> test;
};

}  // namespace

std::string ResultsBundle::records_csv() const {
    std::string out = "fold,model,n_qubits,train_acc,test_acc\n";
    for (const FoldRecord& r : records) {
        out += std::to_string(r.fold);
        out += ',';
        out += r.model;
        out += ',';
        out += std::to_string(r.n_qubits);
        out += ',';
        append_acc(out, r.train_acc);
        out += ',';
        append_acc(out, r.test_acc);
        out += '\n';
    }
    return out;
}

std::string ResultsBundle::whiskers_dat() const {
    // One whisker row per (model, n_qubits, metric):
    // index label whisker_low q25 median q75 whisker_high n_outliers
    std::map<std::pair<std::string, int>, ModelMetrics> groups;
    for (const FoldRecord& r : records) {
        ModelMetrics& g = groups[{r.model, r.n_qubits}];
        g.train.push_back(r.train_acc);
        g.test.push_back(r.test_acc);
    }
    std::string out =
        "# index label whisker_low q25 median q75 whisker_high n_outliers\n";
    int index = 0;
    for (const auto& [key, metrics] : groups) {
        for (const char* metric : {"train", "test"}) {
            const std::vector<double>& vals =
                std::string(metric) == "train" ? metrics.train : metrics.test;
            const BoxplotStats s = boxplot_stats(vals);
            out += std::to_string(index++);
            out += ' ';
            out += key.first + "-q" + std::to_string(key.second) + "-" + metric;
            for (double v : {s.whisker_low, s.q25, s.median, s.q75, s.whisker_high}) {
                out += ' ';
                append_acc(out, v);
            }
            out += ' ';
            out += std::to_string(s.outliers.size());
            out += '\n';
        }
    }
    return out;
}

void write_bundle(const ResultsBundle& bundle, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(out_dir + "/folds.csv", std::ios::binary);
        if (!out) throw data_error("write_bundle: cannot write folds.csv");
        out << bundle.records_csv();
    }
    {
        std::ofstream out(out_dir + "/summary.json", std::ios::binary);
        if (!out) throw data_error("write_bundle: cannot write summary.json");
        out << bundle.summary.dump(2) << "\n";
    }
    {
        std::ofstream out(out_dir + "/whiskers.dat", std::ios::binary);
        if (!out) throw data_error("write_bundle: cannot write whiskers.dat");
        out << bundle.whiskers_dat();
    }
}

// ---------------------------------------------------------------------------
// Experiment runners
// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> complement_indices(std::size_t rows,
                                            const std::vector<std::size_t>& sorted_subset) {
    std::vector<std::size_t> out;
    out.reserve(rows - sorted_subset.size());
    for (std::size_t r = 0; r < rows; ++r) {
        if (!std::binary_search(sorted_subset.begin(), sorted_subset.end(), r)) {
            out.push_back(r);
        }
    }
    return out;
}

std::uint64_t fold_seed(const ExperimentConfig& config, int fold) {
    return mix_seed(config.seed, 0xf01d0000ull + static_cast<std::uint64_t>(fold));
}

double kernel_train_accuracy(const SvmModel& model, const GramMatrix& g,
                             const std::vector<int>& labels) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < g.size; ++i) {
        const std::span<const double> row{g.entries.data() + i * g.size, g.size};
        if (svm_predict(model, row) == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(g.size);
}

}  // namespace

ResultsBundle run_one_to_n(const ExperimentConfig& config) {
    config.validate();
    apply_thread_count(resolve_threads(config.threads));
    std::string dataset_hash;
    const FeatureTable table = load_experiment_table(config, &dataset_hash);
    const auto folds = stratified_kfold(table.labels, config.k_folds, config.seed);

    ResultsBundle bundle;
    ModelMetrics qnn_metrics, nqk_metrics;

    for (int f = 0; f < config.k_folds; ++f) {
        const std::vector<std::size_t>& test_idx = folds[static_cast<std::size_t>(f)];
        const std::vector<std::size_t> train_idx = complement_indices(table.rows, test_idx);

        FeatureTable train_table, test_table;
        prepare_train_test(table.select(train_idx), table.select(test_idx), config.p,
                           config.reducer, train_table, test_table);
        const LabeledPoints train_data = encode_table(train_table);
        const LabeledPoints test_data = encode_table(test_table);

        const std::uint64_t fs = fold_seed(config, f);
        Rng init_rng(mix_seed(fs, 0x696e6974ull));
        const QnnParams init = QnnParams::random_init(1, config.layers, init_rng);
        TrainConfig tc = config.train;
        tc.seed = fs;
        const TrainHistory history = train_qnn(init, train_data, tc);

        const double qnn_train = qnn_accuracy(history.best_params, train_data);
        const double qnn_test = qnn_accuracy(history.best_params, test_data);

        EmbeddingSpec spec;
        spec.kind = EmbeddingKind::OneToN;
        spec.params = history.best_params;
        spec.n_qubits = config.n_qubits;
        const GramMatrix g = gram(spec, train_table);
        const CrossGram gx = cross_gram(spec, train_table, test_table);

        SvmOptions opt;
        opt.C = config.svm_c;
        opt.shift_kernel = true;
        opt.paper_exact_bias = config.paper_exact_bias;
        const SvmModel model = solve_dual(g, train_table.labels, opt);

        const double nqk_train = kernel_train_accuracy(model, g, train_table.labels);
        const double nqk_test = svm_accuracy_rows(model, gx, test_table.labels);

        bundle.records.push_back({f, "qnn", 1, qnn_train, qnn_test, history.best_cost});
        bundle.records.push_back({f, "nqk", config.n_qubits, nqk_train, nqk_test, -1.0});
        qnn_metrics.train.push_back(qnn_train);
        qnn_metrics.test.push_back(qnn_test);
        nqk_metrics.train.push_back(nqk_train);
        nqk_metrics.test.push_back(nqk_test);
    }

    bundle.summary = json{
        {"config", config.to_json()},
        {"dataset_hash", dataset_hash},
        {"models",
         json{{"qnn", json{{"train", metric_summary(qnn_metrics.train)},
                           {"test", metric_summary(qnn_metrics.test)}}},
              {"nqk", json{{"train", metric_summary(nqk_metrics.train)},
                           {"test", metric_summary(nqk_metrics.test)}}}}}};
    return bundle;
}

ResultsBundle run_n_to_n(const ExperimentConfig& config) {
    config.validate();
    apply_thread_count(resolve_threads(config.threads));
    std::string dataset_hash;
    const FeatureTable table = load_experiment_table(config, &dataset_hash);

    ResultsBundle bundle;
    // per n (1..n_max): metric lists across repeats
    std::vector<ModelMetrics> qnn_by_n(config.n_max), nqk_by_n(config.n_max);
    std::vector<std::vector<double>> costs_by_n(config.n_max);

    for (int r = 0; r < config.repeats; ++r) {
        const std::uint64_t rs = mix_seed(config.seed, 0x0e9ea70000ull + r);
        std::vector<std::size_t> train_idx, test_idx;
        stratified_split(table.labels, config.train_size, config.test_size, rs, train_idx,
                         test_idx);

        FeatureTable train_table, test_table;
        prepare_train_test(table.select(train_idx), table.select(test_idx), config.p,
                           config.reducer, train_table, test_table);
        const LabeledPoints train_data = encode_table(train_table);
        const LabeledPoints test_data = encode_table(test_table);

        TrainConfig tc = config.train;
        tc.seed = rs;
        const std::vector<TrainHistory> stages =
            scale_qnn(train_data, config.n_max, config.layers, tc);

        for (int n = 1; n <= config.n_max; ++n) {
            const TrainHistory& h = stages[static_cast<std::size_t>(n - 1)];
            const double qnn_train = qnn_accuracy(h.best_params, train_data);
            const double qnn_test = qnn_accuracy(h.best_params, test_data);

            EmbeddingSpec spec;
            spec.kind = EmbeddingKind::NToN;
            spec.params = h.best_params;
            spec.n_qubits = n;
            const GramMatrix g = gram(spec, train_table);
            const CrossGram gx = cross_gram(spec, train_table, test_table);

            SvmOptions opt;
            opt.C = config.svm_c;
            opt.shift_kernel = true;
            opt.paper_exact_bias = config.paper_exact_bias;
            const SvmModel model = solve_dual(g, train_table.labels, opt);

            const double nqk_train = kernel_train_accuracy(model, g, train_table.labels);
            const double nqk_test = svm_accuracy_rows(model, gx, test_table.labels);

            bundle.records.push_back({r, "qnn", n, qnn_train, qnn_test, h.best_cost});
            bundle.records.push_back({r, "nqk", n, nqk_train, nqk_test, -1.0});
            qnn_by_n[n - 1].train.push_back(qnn_train);
            qnn_by_n[n - 1].test.push_back(qnn_test);
            nqk_by_n[n - 1].train.push_back(nqk_train);
            nqk_by_n[n - 1].test.push_back(nqk_test);
            costs_by_n[n - 1].push_back(h.best_cost);
        }
    }

    json per_n = json::array();
    for (int n = 1; n <= config.n_max; ++n) {
        const ModelMetrics& q = qnn_by_n[n - 1];
        const ModelMetrics& k = nqk_by_n[n - 1];
        per_n.push_back(json{{"n", n},
                             {"qnn_train_mean", mean_of(q.train)},
                             {"qnn_train_std", std_of(q.train)},
                             {"qnn_test_mean", mean_of(q.test)},
                             {"qnn_test_std", std_of(q.test)},
                             {"nqk_train_mean", mean_of(k.train)},
                             {"nqk_train_std", std_of(k.train)},
                             {"nqk_test_mean", mean_of(k.test)},
                             {"nqk_test_std", std_of(k.test)},
                             {"best_costs", costs_by_n[n - 1]}});
    }
    bundle.summary = json{{"config", config.to_json()},
                          {"dataset_hash", dataset_hash},
                          {"per_n", per_n}};
    return bundle;
}

ResultsBundle run_classical(const ExperimentConfig& config) {
    config.validate();
    apply_thread_count(resolve_threads(config.threads));
    std::string dataset_hash;
    const FeatureTable table = load_experiment_table(config, &dataset_hash);
    // Same fold derivation as run_one_to_n so the baselines see identical
    // splits for a given seed.
    const auto folds = stratified_kfold(table.labels, config.k_folds, config.seed);

    ResultsBundle bundle;
    std::map<std::string, ModelMetrics> metrics;
    json search_info = json::array();

    for (int f = 0; f < config.k_folds; ++f) {
        const std::vector<std::size_t>& test_idx = folds[static_cast<std::size_t>(f)];
        const std::vector<std::size_t> train_idx = complement_indices(table.rows, test_idx);

        FeatureTable train_table, test_table;
        prepare_train_test(table.select(train_idx), table.select(test_idx), config.p,
                           config.reducer, train_table, test_table);

        auto evaluate = [&](const std::string& name, const SvmKernel& kernel, double c_value) {
            SvmOptions opt;
            opt.C = c_value;
            opt.shift_kernel = false;
            opt.paper_exact_bias = false;
            const SvmModel model = solve_features(train_table, kernel, opt);
            const std::vector<int> train_pred = svm_predict_table(model, train_table, train_table);
            const std::vector<int> test_pred = svm_predict_table(model, train_table, test_table);
            std::size_t train_hits = 0, test_hits = 0;
            for (std::size_t i = 0; i < train_table.rows; ++i) {
                if (train_pred[i] == train_table.labels[i]) ++train_hits;
            }
            for (std::size_t i = 0; i < test_table.rows; ++i) {
                if (test_pred[i] == test_table.labels[i]) ++test_hits;
            }
            const double train_acc =
                static_cast<double>(train_hits) / static_cast<double>(train_table.rows);
            const double test_acc =
                static_cast<double>(test_hits) / static_cast<double>(test_table.rows);
            bundle.records.push_back({f, name, 0, train_acc, test_acc, -1.0});
            metrics[name].train.push_back(train_acc);
            metrics[name].test.push_back(test_acc);
        };

        evaluate("svc-linear", SvmKernel{SvmKernelKind::Linear, 1.0}, config.svm_c);
        evaluate("svc-rbf", SvmKernel{SvmKernelKind::Rbf, default_rbf_gamma(train_table)},
                 config.svm_c);
        if (config.search_iters > 0) {
            const SvcSearchResult found = random_search_svc(
                train_table, config.search_iters, fold_seed(config, f), SvcSearchSpace{});
            evaluate("svc-search", found.kernel, found.C);
            search_info.push_back(json{{"fold", f},
                                       {"kernel", svm_kernel_name(found.kernel.kind)},
                                       {"C", found.C},
                                       {"gamma", found.kernel.gamma},
                                       {"cv_accuracy", found.cv_accuracy}});
        }
    }

    json models = json::object();
    for (const auto& [name, m] : metrics) {
        models[name] = json{{"train", metric_summary(m.train)},
                            {"test", metric_summary(m.test)}};
    }
    bundle.summary = json{{"config", config.to_json()},
                          {"dataset_hash", dataset_hash},
                          {"models", models}};
    if (config.search_iters > 0) bundle.summary["search"] = search_info;
    return bundle;
}

}  // namespace nqk
