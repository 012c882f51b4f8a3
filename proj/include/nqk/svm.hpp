#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nqk/common.hpp"
#include "nqk/data.hpp"
#include "nqk/kernel.hpp"

namespace nqk {

enum class SvmKernelKind { Precomputed, Linear, Rbf };

SvmKernelKind svm_kernel_from_string(const std::string& name);
const char* svm_kernel_name(SvmKernelKind kind);

struct SvmKernel {
    SvmKernelKind kind = SvmKernelKind::Precomputed;
    double gamma = 1.0;  // RBF only
};

double linear_kernel(std::span<const double> a, std::span<const double> b);
double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

/// 1 / (p * feature variance), the usual RBF default.
double default_rbf_gamma(const FeatureTable& table);

struct SvmOptions {
    double C = 1.0;
    /// Train and predict on (k+1)/2 instead of k (the fidelity-kernel
    /// decision rule). Classical baselines run unshifted.
    bool shift_kernel = true;
    /// Predict from the weighted kernel sum alone, without an intercept.
    /// Fidelity kernels concentrate away from the origin, where a biasless
    /// separator underperforms badly, so the default fits and uses the
    /// standard intercept.
    bool paper_exact_bias = false;
    double tol = 1e-5;       // KKT gap at convergence
    long max_iter = 0;       // 0: 100*M + 100000
    bool track_objective = false;
    bool validate_psd = true;
};

struct SvmModel {
    std::vector<double> alphas;  // size M, in [0, C]
    std::vector<int> labels;     // size M, {+1,-1}
    std::vector<std::string> point_ids;
    std::vector<std::size_t> support_indices;  // alphas > 0, ascending
    double C = 1.0;
    SvmKernel kernel;
    double bias = 0.0;
    bool shift_kernel = true;
    bool paper_exact_bias = false;
    std::optional<int> fixed_label;  // single-class degenerate fit
    double dual_objective = 0.0;
    double kkt_gap = 0.0;
    long iterations = 0;
    std::vector<double> objective_trace;  // only when tracked

    nlohmann::json to_json() const;
    static SvmModel from_json(const nlohmann::json& j);
};

/// SMO (maximal-violating-pair selection, ties to the lowest index) on the
/// standard soft-margin dual over the base kernel matrix (shifted first when
/// options.shift_kernel). Deterministic. Throws numerical_error when the
/// matrix fails the PSD probe or the iteration cap is hit.
SvmModel smo_solve(const std::vector<double>& base_kernel, std::size_t m,
                   const std::vector<int>& y, const SvmKernel& kernel,
                   const SvmOptions& options);

/// Precomputed-kernel entry point used by the quantum experiments.
SvmModel solve_dual(const GramMatrix& gram, const std::vector<int>& y,
                    const SvmOptions& options);

/// Builds the kernel matrix from feature rows (classical path).
SvmModel solve_features(const FeatureTable& table, const SvmKernel& kernel,
                        const SvmOptions& options);

/// Decision value for a row of base kernel values against all training
/// points: sum_i alpha_i y_i k'(x,x_i) (+ bias unless paper-exact).
double svm_decision(const SvmModel& model, std::span<const double> base_kernel_row);

/// sign(decision); exactly zero resolves to -1.
int svm_predict(const SvmModel& model, std::span<const double> base_kernel_row);

/// Per-row predictions of a feature-kernel model on a table.
std::vector<int> svm_predict_table(const SvmModel& model, const FeatureTable& train,
                                   const FeatureTable& points);

double svm_accuracy_rows(const SvmModel& model, const CrossGram& rows,
                         const std::vector<int>& labels);

// --- randomized hyperparameter search -----------------------------------------

struct SvcSearchSpace {
    double c_min = 1e-2;
    double c_max = 1e2;  // log-uniform over [c_min, c_max]
    std::vector<SvmKernelKind> kernels{SvmKernelKind::Linear, SvmKernelKind::Rbf};
    double gamma_min = 1e-3;
    double gamma_max = 10.0;  // log-uniform, RBF draws only
};

struct SvcSearchResult {
    SvmKernel kernel;
    double C = 1.0;
    double cv_accuracy = 0.0;
    int best_iteration = -1;
};

/// Draws n_iters configurations, scores each with stratified k-fold CV on the
/// same folds, and returns the best (first draw wins ties). Deterministic per
/// seed.
SvcSearchResult random_search_svc(const FeatureTable& table, int n_iters,
                                  std::uint64_t seed, const SvcSearchSpace& space,
                                  int cv_folds = 5);

}  // namespace nqk
