#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nqk/common.hpp"
#include "nqk/data.hpp"
#include "nqk/svm.hpp"
#include "nqk/train.hpp"

namespace nqk {

/// Five-number summary with 1.5*IQR whiskers: whiskers reach the most distant
/// value still inside the fences, everything beyond is an outlier. Quartiles
/// use linear interpolation between order statistics.
struct BoxplotStats {
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    double whisker_low = 0.0;
    double whisker_high = 0.0;
    std::vector<double> outliers;

    nlohmann::json to_json() const;
};

BoxplotStats boxplot_stats(std::vector<double> values);

/// Where the experiment's rows come from.
struct DatasetConfig {
    std::string kind = "synthetic";  // "synthetic" | "csv"
    // synthetic
    SyntheticKind synthetic_kind = SyntheticKind::Circles;
    std::size_t m = 2000;
    double noise = 0.1;
    // csv
    std::string path;
    double label_percentile = 15.0;  // used when the csv carries gamma, no labels
    bool rebalance = true;

    nlohmann::json to_json() const;
    static DatasetConfig from_json(const nlohmann::json& j);
};

struct ExperimentConfig {
    std::string experiment = "one_to_n";  // one_to_n | n_to_n | classical
    DatasetConfig dataset;
    int p = 2;  // feature count fed to the circuits (reduction target)
    Reducer reducer = Reducer::Pca;
    int n_qubits = 2;  // one_to_n kernel width
    int n_max = 4;     // n_to_n scaling ceiling
    int layers = 6;
    std::string preset = "optimal";  // optimal | suboptimal | scaling | custom
    TrainConfig train;               // resolved preset (+ overrides)
    int k_folds = 10;
    int repeats = 5;
    std::size_t train_size = 500;
    std::size_t test_size = 200;
    std::uint64_t seed = 0;
    double svm_c = 1.0;
    bool paper_exact_bias = false;
    int search_iters = 0;  // classical: enable randomized search when > 0
    int threads = 0;

    /// Fills `train` from the named preset ("custom" keeps it as provided).
    void resolve_preset();
    void validate() const;

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
};

struct FoldRecord {
    int fold = 0;      // fold or repeat index
    std::string model; // qnn | nqk | svc-linear | svc-rbf | svc-search
    int n_qubits = 0;  // 0 for classical rows
    double train_acc = 0.0;
    double test_acc = 0.0;
    double best_cost = -1.0;  // only n_to_n rows carry a cost
};

struct ResultsBundle {
    std::vector<FoldRecord> records;
    nlohmann::json summary;

    /// Deterministic CSV: header + one row per record, %.10g accuracies.
    std::string records_csv() const;
    /// Gnuplot-ready whisker rows (one per model/metric).
    std::string whiskers_dat() const;
};

/// Loads/generates the configured dataset, labels and balances it, and
/// returns it together with its content hash.
FeatureTable load_experiment_table(const ExperimentConfig& config, std::string* content_hash);

/// Per-fold leakage-free preprocessing: z-score fit on train, optional
/// reduction to p, [-1,1] scaling; test rows only ever see apply().
void prepare_train_test(const FeatureTable& train_raw, const FeatureTable& test_raw,
                        int p, Reducer reducer, FeatureTable& train_out,
                        FeatureTable& test_out);

/// k-fold single-qubit training plus the replicated-circuit kernel per fold.
ResultsBundle run_one_to_n(const ExperimentConfig& config);

/// Repeated subsampling, iterative qubit scaling, and the trained-circuit
/// kernel at every width.
ResultsBundle run_n_to_n(const ExperimentConfig& config);

/// Classical SVC baselines on the same folds as run_one_to_n.
ResultsBundle run_classical(const ExperimentConfig& config);

/// Writes folds.csv, summary.json and whiskers.dat under out_dir.
void write_bundle(const ResultsBundle& bundle, const std::string& out_dir);

}  // namespace nqk
