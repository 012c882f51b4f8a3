#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nqk/common.hpp"
#include "nqk/data.hpp"
#include "nqk/reupload.hpp"

namespace nqk {

enum class GradientMethod { FiniteDiff, ParameterShift, Adjoint };

GradientMethod gradient_method_from_string(const std::string& name);
const char* gradient_method_name(GradientMethod m);

struct TrainConfig {
    double learning_rate = 0.01;
    int epochs = 10;
    int batch_size = 0;  // 0 = full batch
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    GradientMethod gradient_method = GradientMethod::FiniteDiff;
    double fd_step = 1e-5;

    void validate() const;

    /// 10 epochs at learning rate 0.01 (converged regime).
    static TrainConfig optimal();
    /// Truncated after 2 epochs at learning rate 0.001 (deliberately
    /// undertrained regime).
    static TrainConfig suboptimal();
    /// 10 epochs at learning rate 0.005 (qubit-scaling runs).
    static TrainConfig scaling();

    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

/// Encoded rows plus labels, the unit the trainer consumes.
struct LabeledPoints {
    std::vector<EncodedPoint> points;
    std::vector<int> labels;  // {+1,-1}

    std::size_t size() const { return points.size(); }
};

LabeledPoints encode_table(const FeatureTable& table);

/// Per-point cost: 1 - P(first qubit in the label state), with +1 mapped to
/// |0> and -1 to |1>.
double point_cost(const QnnParams& params, const EncodedPoint& point, int label);

/// Mean per-point cost over the whole set, summed in index order. Throws
/// data_error on an empty set. Value in [0,1].
double fidelity_cost(const QnnParams& params, const LabeledPoints& data);

/// Plain serial loop; bit-identical to fidelity_cost by construction (the
/// parallel version accumulates the same terms in the same order).
double fidelity_cost_serial(const QnnParams& params, const LabeledPoints& data);

/// Cost over a subset of rows (mini-batches).
double fidelity_cost_subset(const QnnParams& params, const LabeledPoints& data,
                            std::span<const std::size_t> indices);

/// Gradient of the (subset) cost over the flat parameter vector, theta block
/// first then phi. FiniteDiff uses central differences with fd_step;
/// ParameterShift uses the exact two-term rule for the single-qubit rotation
/// angles and the four-term rule for controlled-rotation angles; Adjoint is a
/// reverse-pass statevector computation, exact and O(1) circuit runs per
/// point. Parallel over parameters (FD/PS) or points (Adjoint) with
/// order-fixed accumulation.
std::vector<double> gradient(const QnnParams& params, const LabeledPoints& data,
                             const TrainConfig& config);
std::vector<double> gradient_subset(const QnnParams& params, const LabeledPoints& data,
                                    std::span<const std::size_t> indices,
                                    const TrainConfig& config);

/// Serial reference path (same math, no OpenMP).
std::vector<double> gradient_serial(const QnnParams& params, const LabeledPoints& data,
                                    const TrainConfig& config);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long long t = 0;

    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// Standard Adam update with bias correction, in place.
void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grad, const TrainConfig& config);

struct TrainHistory {
    std::vector<double> cost_per_epoch;  // [0] = initial cost, then one per epoch
    double best_cost = 0.0;
    QnnParams best_params;

    nlohmann::json to_json() const;
    static TrainHistory from_json(const nlohmann::json& j);
};

/// Seeded (mini-)batch Adam on the fidelity cost. Records the full-set cost
/// after every epoch and tracks the best-seen parameters (the initial
/// parameters count as seen). epochs = 0 performs no updates.
TrainHistory train_qnn(const QnnParams& init, const LabeledPoints& data,
                       const TrainConfig& config);

/// The decision rule's sign convention: +1 iff p0 > 1/2, and exactly 1/2
/// resolves to -1 (sign(0) is fixed as -1 throughout).
int label_from_prob(double p0);

/// label_from_prob applied to the circuit's first-qubit marginal.
int qnn_predict(const QnnParams& params, const EncodedPoint& point);

double qnn_accuracy(const QnnParams& params, const LabeledPoints& data);

/// Iterative qubit scaling: trains the 1-qubit circuit, then repeatedly
/// extends the best parameters with zero couplings and retrains everything.
/// The best-cost sequence is non-increasing by construction because each
/// stage starts at the previous stage's best cost.
std::vector<TrainHistory> scale_qnn(const LabeledPoints& data, int n_max, int n_layers,
                                    const TrainConfig& config,
                                    ExtendInit init = ExtendInit::CopyFirstQubit);

}  // namespace nqk
