#include "nqk/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nqk/linalg.hpp"

namespace nqk {

using json = nlohmann::json;

SvmKernelKind svm_kernel_from_string(const std::string& name) {
    if (name == "precomputed") return SvmKernelKind::Precomputed;
    if (name == "linear") return SvmKernelKind::Linear;
    if (name == "rbf") return SvmKernelKind::Rbf;
    throw config_error("unknown SVM kernel '" + name + "'");
}

const char* svm_kernel_name(SvmKernelKind kind) {
    switch (kind) {
        case SvmKernelKind::Precomputed: return "precomputed";
        case SvmKernelKind::Linear: return "linear";
        case SvmKernelKind::Rbf: return "rbf";
    }
    return "?";
}

double linear_kernel(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("linear_kernel: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
    if (a.size() != b.size()) throw std::invalid_argument("rbf_kernel: size mismatch");
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

double default_rbf_gamma(const FeatureTable& table) {
    if (table.rows == 0 || table.cols == 0) throw data_error("default_rbf_gamma: empty table");
    double mean = 0.0;
    for (double v : table.features) mean += v;
    mean /= static_cast<double>(table.features.size());
    double var = 0.0;
    for (double v : table.features) var += (v - mean) * (v - mean);
    var /= static_cast<double>(table.features.size());
    if (var <= 0.0) return 1.0;
    return 1.0 / (static_cast<double>(table.cols) * var);
}

json SvmModel::to_json() const {
    json j{{"alphas", alphas},
           {"labels", labels},
           {"point_ids", point_ids},
           {"support_indices", support_indices},
           {"C", C},
           {"kernel", svm_kernel_name(kernel.kind)},
           {"gamma", kernel.gamma},
           {"bias", bias},
           {"shift_kernel", shift_kernel},
           {"paper_exact_bias", paper_exact_bias},
           {"dual_objective", dual_objective},
           {"kkt_gap", kkt_gap},
           {"iterations", iterations}};
    if (fixed_label) j["fixed_label"] = *fixed_label;
    return j;
}

SvmModel SvmModel::from_json(const json& j) {
    SvmModel m;
    try {
        m.alphas = j.at("alphas").get<std::vector<double>>();
        m.labels = j.at("labels").get<std::vector<int>>();
        m.point_ids = j.at("point_ids").get<std::vector<std::string>>();
        m.support_indices = j.at("support_indices").get<std::vector<std::size_t>>();
        m.C = j.at("C").get<double>();
        m.kernel.kind = svm_kernel_from_string(j.at("kernel").get<std::string>());
        m.kernel.gamma = j.at("gamma").get<double>();
        m.bias = j.at("bias").get<double>();
        m.shift_kernel = j.at("shift_kernel").get<bool>();
        m.paper_exact_bias = j.at("paper_exact_bias").get<bool>();
        m.dual_objective = j.value("dual_objective", 0.0);
        m.kkt_gap = j.value("kkt_gap", 0.0);
        m.iterations = j.value("iterations", 0L);
        if (j.contains("fixed_label")) m.fixed_label = j["fixed_label"].get<int>();
    } catch (const json::exception& e) {
        throw data_error(std::string("SvmModel: invalid JSON: ") + e.what());
    }
    return m;
}

SvmModel smo_solve(const std::vector<double>& base_kernel, std::size_t m,
                   const std::vector<int>& y, const SvmKernel& kernel,
                   const SvmOptions& options) {
    if (m == 0) throw data_error("smo_solve: empty problem");
    if (base_kernel.size() != m * m) throw data_error("smo_solve: kernel size mismatch");
    if (y.size() != m) throw data_error("smo_solve: label count mismatch");
    for (int v : y) {
        if (v != 1 && v != -1) throw data_error("smo_solve: labels must be +1 or -1");
    }
    if (!(options.C > 0.0)) throw config_error("smo_solve: C must be positive");

    SvmModel model;
    model.labels = y;
    model.C = options.C;
    model.kernel = kernel;
    model.shift_kernel = options.shift_kernel;
    model.paper_exact_bias = options.paper_exact_bias;
    model.alphas.assign(m, 0.0);

    const bool single_class =
        std::all_of(y.begin(), y.end(), [&](int v) { return v == y.front(); });
    if (single_class) {
        model.fixed_label = y.front();
        model.bias = static_cast<double>(y.front());
        return model;
    }

    // Working copy, shifted when requested.
    std::vector<double> k(base_kernel);
    if (options.shift_kernel) {
        for (double& v : k) v = (v + 1.0) / 2.0;
    }
    if (options.validate_psd && !is_psd_within(k, m, 1e-8 + 1e-10)) {
        throw numerical_error(
            "smo_solve: kernel matrix is not positive semidefinite within 1e-8; "
            "refusing to optimize a non-convex dual");
    }

    const double C = options.C;
    std::vector<double> grad(m, -1.0);  // gradient of 1/2 a'Qa - e'a at a = 0
    auto q = [&](std::size_t i, std::size_t j) {
        return y[i] * y[j] * k[i * m + j];
    };

    const long cap = options.max_iter > 0
                         ? options.max_iter
                         : static_cast<long>(100 * m + 100000);
    long iter = 0;
    double gap = std::numeric_limits<double>::infinity();

    for (;; ++iter) {
        // Maximal-violating pair: argmax over I_up and argmin over I_low of
        // -y_t grad_t; strict comparisons keep the lowest index on ties.
        std::size_t i_up = m, j_low = m;
        double m_up = -std::numeric_limits<double>::infinity();
        double m_low = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < m; ++t) {
            const double v = -y[t] * grad[t];
            const bool in_up = y[t] > 0 ? model.alphas[t] < C : model.alphas[t] > 0.0;
            const bool in_low = y[t] > 0 ? model.alphas[t] > 0.0 : model.alphas[t] < C;
            if (in_up && v > m_up) {
                m_up = v;
                i_up = t;
            }
            if (in_low && v < m_low) {
                m_low = v;
                j_low = t;
            }
        }
        if (i_up == m || j_low == m) {
            gap = 0.0;
            break;
        }
        gap = m_up - m_low;
        if (gap < options.tol) break;
        if (iter >= cap) {
            throw numerical_error("smo_solve: no convergence after " + std::to_string(cap) +
                                  " iterations (gap " + std::to_string(gap) + ")");
        }

        const std::size_t i = i_up;
        const std::size_t j = j_low;
        const double old_ai = model.alphas[i];
        const double old_aj = model.alphas[j];

        if (y[i] != y[j]) {
            double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if (quad <= 0.0) quad = 1e-12;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = old_ai - old_aj;
            model.alphas[i] += delta;
            model.alphas[j] += delta;
            if (diff > 0.0) {
                if (model.alphas[j] < 0.0) {
                    model.alphas[j] = 0.0;
                    model.alphas[i] = diff;
                }
            } else {
                if (model.alphas[i] < 0.0) {
                    model.alphas[i] = 0.0;
                    model.alphas[j] = -diff;
                }
            }
            if (diff > 0.0) {
                if (model.alphas[i] > C) {
                    model.alphas[i] = C;
                    model.alphas[j] = C - diff;
                }
            } else {
                if (model.alphas[j] > C) {
                    model.alphas[j] = C;
                    model.alphas[i] = C + diff;
                }
            }
        } else {
            double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if (quad <= 0.0) quad = 1e-12;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = old_ai + old_aj;
            model.alphas[i] -= delta;
            model.alphas[j] += delta;
            if (sum > C) {
                if (model.alphas[i] > C) {
                    model.alphas[i] = C;
                    model.alphas[j] = sum - C;
                }
            } else {
                if (model.alphas[j] < 0.0) {
                    model.alphas[j] = 0.0;
                    model.alphas[i] = sum;
                }
            }
            if (sum > C) {
                if (model.alphas[j] > C) {
                    model.alphas[j] = C;
                    model.alphas[i] = sum - C;
                }
            } else {
                if (model.alphas[i] < 0.0) {
                    model.alphas[i] = 0.0;
                    model.alphas[j] = sum;
                }
            }
        }

        const double di = model.alphas[i] - old_ai;
        const double dj = model.alphas[j] - old_aj;
        for (std::size_t t = 0; t < m; ++t) {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }

        if (options.track_objective) {
            double obj = 0.0;
            for (std::size_t t = 0; t < m; ++t) obj += model.alphas[t] * (1.0 - grad[t]);
            model.objective_trace.push_back(obj / 2.0);
        }
    }

    model.iterations = iter;
    model.kkt_gap = gap;

    // Maximization-form objective: e'a - 1/2 a'Qa = 1/2 sum_a a (1 - grad).
    double obj = 0.0;
    for (std::size_t t = 0; t < m; ++t) obj += model.alphas[t] * (1.0 - grad[t]);
    model.dual_objective = obj / 2.0;

    // Bias from margin support vectors (0 < alpha < C); falls back to the
    // center of the final KKT gap.
    double bias_acc = 0.0;
    std::size_t bias_n = 0;
    for (std::size_t t = 0; t < m; ++t) {
        if (model.alphas[t] > 0.0) model.support_indices.push_back(t);
        if (model.alphas[t] > 0.0 && model.alphas[t] < C) {
            bias_acc += -y[t] * grad[t];
            ++bias_n;
        }
    }
    if (bias_n > 0) {
        model.bias = bias_acc / static_cast<double>(bias_n);
    } else {
        double m_up = -std::numeric_limits<double>::infinity();
        double m_low = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < m; ++t) {
            const double v = -y[t] * grad[t];
            const bool in_up = y[t] > 0 ? model.alphas[t] < C : model.alphas[t] > 0.0;
            const bool in_low = y[t] > 0 ? model.alphas[t] > 0.0 : model.alphas[t] < C;
            if (in_up) m_up = std::max(m_up, v);
            if (in_low) m_low = std::min(m_low, v);
        }
        model.bias = (m_up + m_low) / 2.0;
    }
    return model;
}

SvmModel solve_dual(const GramMatrix& gram, const std::vector<int>& y,
                    const SvmOptions& options) {
    gram.validate();
    SvmModel model = smo_solve(gram.entries, gram.size, y,
                               SvmKernel{SvmKernelKind::Precomputed, 1.0}, options);
    model.point_ids = gram.point_ids;
    return model;
}

SvmModel solve_features(const FeatureTable& table, const SvmKernel& kernel,
                        const SvmOptions& options) {
    if (!table.labeled()) throw data_error("solve_features: table has no labels");
    const std::size_t m = table.rows;
    std::vector<double> k(m * m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i; j < m; ++j) {
            const double v = kernel.kind == SvmKernelKind::Linear
                                 ? linear_kernel(table.row(i), table.row(j))
                                 : rbf_kernel(table.row(i), table.row(j), kernel.gamma);
            k[i * m + j] = v;
            k[j * m + i] = v;
        }
    }
    SvmModel model = smo_solve(k, m, table.labels, kernel, options);
    model.point_ids = table.ids;
    return model;
}

double svm_decision(const SvmModel& model, std::span<const double> base_kernel_row) {
    if (model.fixed_label) return static_cast<double>(*model.fixed_label);
    if (base_kernel_row.size() != model.alphas.size()) {
        throw std::invalid_argument("svm_decision: kernel row length mismatch");
    }
    double acc = 0.0;
    for (std::size_t i : model.support_indices) {
        const double k = model.shift_kernel ? (base_kernel_row[i] + 1.0) / 2.0
                                            : base_kernel_row[i];
        acc += model.alphas[i] * model.labels[i] * k;
    }
    if (!model.paper_exact_bias) acc += model.bias;
    return acc;
}

int svm_predict(const SvmModel& model, std::span<const double> base_kernel_row) {
    return svm_decision(model, base_kernel_row) > 0.0 ? +1 : -1;
}

std::vector<int> svm_predict_table(const SvmModel& model, const FeatureTable& train,
                                   const FeatureTable& points) {
    if (model.kernel.kind == SvmKernelKind::Precomputed) {
        throw config_error("svm_predict_table: model expects precomputed kernel rows");
    }
    std::vector<int> out(points.rows);
    std::vector<double> row(train.rows);
#pragma omp parallel for schedule(dynamic) firstprivate(row)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(points.rows); ++t) {
        for (std::size_t i = 0; i < train.rows; ++i) {
            row[i] = model.kernel.kind == SvmKernelKind::Linear
                         ? linear_kernel(points.row(t), train.row(i))
                         : rbf_kernel(points.row(t), train.row(i), model.kernel.gamma);
        }
        out[t] = svm_predict(model, row);
    }
    return out;
}

double svm_accuracy_rows(const SvmModel& model, const CrossGram& rows,
                         const std::vector<int>& labels) {
    if (rows.rows != labels.size()) throw data_error("svm_accuracy_rows: label count mismatch");
    std::size_t hits = 0;
    for (std::size_t t = 0; t < rows.rows; ++t) {
        if (svm_predict(model, rows.row(t)) == labels[t]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(rows.rows);
}

SvcSearchResult random_search_svc(const FeatureTable& table, int n_iters,
                                  std::uint64_t seed, const SvcSearchSpace& space,
                                  int cv_folds) {
    if (n_iters < 1) throw config_error("random_search_svc: n_iters must be >= 1");
    if (space.kernels.empty()) throw config_error("random_search_svc: empty kernel list");
    if (!(space.c_min > 0.0) || space.c_max < space.c_min) {
        throw config_error("random_search_svc: bad C range");
    }
    if (!table.labeled()) throw data_error("random_search_svc: table has no labels");

    const auto folds = stratified_kfold(table.labels, cv_folds, mix_seed(seed, 0x63766373ull));
    Rng rng(mix_seed(seed, 0x73656172ull));

    SvcSearchResult best;
    best.cv_accuracy = -1.0;

    for (int it = 0; it < n_iters; ++it) {
        SvmKernel kernel;
        kernel.kind = space.kernels[rng.below(space.kernels.size())];
        const double c_draw =
            std::exp(rng.uniform(std::log(space.c_min), std::log(space.c_max)));
        kernel.gamma = std::exp(rng.uniform(std::log(space.gamma_min), std::log(space.gamma_max)));

        double acc_sum = 0.0;
        for (const auto& test_idx : folds) {
            std::vector<std::size_t> train_idx;
            for (std::size_t r = 0; r < table.rows; ++r) {
                if (!std::binary_search(test_idx.begin(), test_idx.end(), r)) {
                    train_idx.push_back(r);
                }
            }
            const FeatureTable train = table.select(train_idx);
            const FeatureTable test = table.select(test_idx);
            SvmOptions opt;
            opt.C = c_draw;
            opt.shift_kernel = false;
            opt.paper_exact_bias = false;
            const SvmModel model = solve_features(train, kernel, opt);
            const std::vector<int> pred = svm_predict_table(model, train, test);
            std::size_t hits = 0;
            for (std::size_t t = 0; t < test.rows; ++t) {
                if (pred[t] == test.labels[t]) ++hits;
            }
            acc_sum += static_cast<double>(hits) / static_cast<double>(test.rows);
        }
        const double acc = acc_sum / static_cast<double>(folds.size());
        if (acc > best.cv_accuracy) {
            best.cv_accuracy = acc;
            best.kernel = kernel;
            best.C = c_draw;
            best.best_iteration = it;
        }
    }
    return best;
}

}  // namespace nqk
