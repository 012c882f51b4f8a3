// Compares the OpenMP-parallel kernels against their serial reference
// implementations: Gram matrix fill (cached states vs per-pair recompute),
// full-set cost, and the three gradient routes. Also asserts that the
// parallel results match the references, so a bench run doubles as a sanity
// check.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include <nqk/kernel.hpp>
#include <nqk/train.hpp>

using namespace nqk;

namespace {

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <typename F>
double time_ms(F&& fn) {
    const double t0 = now_ms();
    fn();
    return now_ms() - t0;
}

void row(const char* name, double serial_ms, double parallel_ms) {
    std::printf("%-34s %10.1f ms %10.1f ms %7.2fx\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms);
}

}  // namespace

int main(int argc, char** argv) {
    int threads = 0;
    std::size_t gram_points = 240;
    std::size_t cost_points = 4000;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        if (flag == "--threads") threads = std::stoi(argv[i + 1]);
        if (flag == "--gram-points") gram_points = std::stoul(argv[i + 1]);
        if (flag == "--cost-points") cost_points = std::stoul(argv[i + 1]);
    }
    const int n_threads = resolve_threads(threads);
    apply_thread_count(n_threads);
    std::printf("threads: %d\n", n_threads);
    std::printf("%-34s %13s %13s %8s\n", "workload", "serial", "parallel", "speedup");

    Rng rng(2024);

    // Gram fill, n = 3 embedding.
    {
        FeatureTable table = make_synthetic(SyntheticKind::Circles, gram_points, 0.1, 1);
        table = minmax_apply(table, minmax_fit(table));
        EmbeddingSpec spec;
        spec.kind = EmbeddingKind::OneToN;
        spec.params = QnnParams::random_init(1, 6, rng);
        spec.n_qubits = 3;

        GramMatrix ref, par;
        const double t_ref = time_ms([&] { ref = gram_reference(spec, table); });
        const double t_par = time_ms([&] { par = gram(spec, table); });
        double worst = 0.0;
        for (std::size_t i = 0; i < ref.entries.size(); ++i) {
            worst = std::max(worst, std::abs(ref.entries[i] - par.entries[i]));
        }
        row("gram fill (M=240, n=3, L=6)", t_ref, t_par);
        if (worst > 1e-14) {
            std::printf("MISMATCH: gram cache deviates by %g\n", worst);
            return 1;
        }
    }

    // Cost over a large point set, n = 4.
    {
        FeatureTable table = make_synthetic(SyntheticKind::Circles, cost_points, 0.1, 2);
        table = minmax_apply(table, minmax_fit(table));
        const LabeledPoints data = encode_table(table);
        const QnnParams params = QnnParams::random_init(4, 6, rng);

        double serial_value = 0.0, parallel_value = 0.0;
        const double t_ser = time_ms([&] { serial_value = fidelity_cost_serial(params, data); });
        const double t_par = time_ms([&] { parallel_value = fidelity_cost(params, data); });
        row("fidelity cost (M=4000, n=4, L=6)", t_ser, t_par);
        if (serial_value != parallel_value) {
            std::printf("MISMATCH: cost %.17g vs %.17g\n", serial_value, parallel_value);
            return 1;
        }
    }

    // Gradient methods over one mini-batch, n = 4.
    {
        FeatureTable table = make_synthetic(SyntheticKind::Circles, 64, 0.1, 3);
        table = minmax_apply(table, minmax_fit(table));
        const LabeledPoints data = encode_table(table);
        const QnnParams params = QnnParams::random_init(4, 6, rng);

        for (GradientMethod method : {GradientMethod::FiniteDiff, GradientMethod::ParameterShift,
                                      GradientMethod::Adjoint}) {
            TrainConfig cfg;
            cfg.gradient_method = method;
            std::vector<double> gs, gp;
            const double t_ser = time_ms([&] { gs = gradient_serial(params, data, cfg); });
            const double t_par = time_ms([&] { gp = gradient(params, data, cfg); });
            const std::string name =
                std::string("gradient ") + gradient_method_name(method) + " (M=64, n=4)";
            row(name.c_str(), t_ser, t_par);
            if (gs != gp) {
                std::printf("MISMATCH: %s parallel != serial\n", gradient_method_name(method));
                return 1;
            }
        }
    }

    std::printf("all parallel kernels match their serial references\n");
    return 0;
}
