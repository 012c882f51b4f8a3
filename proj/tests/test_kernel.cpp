#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include <nqk/kernel.hpp>

#include "oracles.hpp"

using namespace nqk;

namespace {

FeatureTable random_table(std::size_t m, std::size_t p, Rng& rng) {
    FeatureTable t;
    t.rows = m;
    t.cols = p;
    t.provenance = Provenance::Scaled;
    for (std::size_t i = 0; i < m; ++i) {
        t.ids.push_back("pt" + std::to_string(i));
        for (std::size_t c = 0; c < p; ++c) t.features.push_back(rng.uniform(-1.0, 1.0));
        t.labels.push_back(rng.below(2) == 0 ? +1 : -1);
    }
    return t;
}

EmbeddingSpec one_to_n_spec(int n, int layers, Rng& rng) {
    EmbeddingSpec s;
    s.kind = EmbeddingKind::OneToN;
    s.params = QnnParams::random_init(1, layers, rng);
    s.n_qubits = n;
    return s;
}

EmbeddingSpec n_to_n_spec(int n, int layers, Rng& rng) {
    EmbeddingSpec s;
    s.kind = EmbeddingKind::NToN;
    s.params = QnnParams::random_init(n, layers, rng);
    s.n_qubits = n;
    return s;
}

}  // namespace

TEST_CASE("kernel_entry is 1 on the diagonal and reduces for n = 1") {
    Rng rng(51);
    const EmbeddingSpec spec = one_to_n_spec(1, 3, rng);
    const EncodedPoint a = encode_point(std::vector<double>{0.3, -0.2});
    const EncodedPoint b = encode_point(std::vector<double>{-0.6, 0.8});

    CHECK(std::abs(kernel_entry(spec, a, a) - 1.0) < 1e-12);

    // n = 1: the embedding degenerates to the bare circuit states.
    const double direct =
        fidelity(run_single_qubit_qnn(spec.params, a), run_single_qubit_qnn(spec.params, b));
    CHECK(std::abs(kernel_entry(spec, a, b) - direct) < 1e-14);
}

TEST_CASE("kernel_entry matches a dense two-state oracle") {
    Rng rng(52);
    for (int t = 0; t < 8; ++t) {
        const EmbeddingSpec spec = t % 2 == 0 ? one_to_n_spec(2, 2, rng) : n_to_n_spec(2, 2, rng);
        const EncodedPoint a = encode_point(std::vector<double>{rng.uniform(-1, 1), rng.uniform(-1, 1)});
        const EncodedPoint b = encode_point(std::vector<double>{rng.uniform(-1, 1), rng.uniform(-1, 1)});
        const Statevector sa = spec.embed(a);
        const Statevector sb = spec.embed(b);
        cplx inner{0.0, 0.0};
        for (std::size_t i = 0; i < sa.dim(); ++i) inner += std::conj(sa.amp[i]) * sb.amp[i];
        CHECK(std::abs(kernel_entry(spec, a, b) - std::norm(inner)) < 1e-12);
    }
}

TEST_CASE("gram trivial cases") {
    Rng rng(53);
    const EmbeddingSpec spec = one_to_n_spec(2, 2, rng);

    const FeatureTable single = random_table(1, 2, rng);
    const GramMatrix g1 = gram(spec, single);
    REQUIRE(g1.size == 1);
    CHECK(g1.at(0, 0) == 1.0);

    // Zero parameters, zero features: every state is |0..0>, every entry 1.
    EmbeddingSpec zero_spec;
    zero_spec.kind = EmbeddingKind::OneToN;
    zero_spec.params = QnnParams::zeros(1, 2);
    zero_spec.n_qubits = 2;
    FeatureTable zeros;
    zeros.rows = 4;
    zeros.cols = 2;
    zeros.provenance = Provenance::Scaled;
    for (std::size_t i = 0; i < 4; ++i) {
        zeros.ids.push_back(std::to_string(i));
        zeros.features.push_back(0.0);
        zeros.features.push_back(0.0);
    }
    const GramMatrix gz = gram(zero_spec, zeros);
    for (std::size_t i = 0; i < gz.size; ++i) {
        for (std::size_t j = 0; j < gz.size; ++j) CHECK(gz.at(i, j) == 1.0);
    }
}

TEST_CASE("gram agrees with entrywise kernel_entry and the serial reference") {
    Rng rng(54);
    const EmbeddingSpec spec = n_to_n_spec(2, 2, rng);
    const FeatureTable table = random_table(5, 2, rng);
    const GramMatrix g = gram(spec, table);
    const GramMatrix ref = gram_reference(spec, table);
    const auto points = encode_rows(table);
    for (std::size_t i = 0; i < g.size; ++i) {
        for (std::size_t j = 0; j < g.size; ++j) {
            CHECK(std::abs(g.at(i, j) - kernel_entry(spec, points[i], points[j])) < 1e-14);
            CHECK(std::abs(g.at(i, j) - ref.at(i, j)) < 1e-14);
        }
    }
}

TEST_CASE("gram matrices are symmetric unit-diagonal and PSD") {
    Rng rng(55);
    for (int t = 0; t < 4; ++t) {
        const int n = 2 + static_cast<int>(rng.below(2));
        const EmbeddingSpec spec = t % 2 == 0 ? one_to_n_spec(n, 3, rng) : n_to_n_spec(n, 3, rng);
        const FeatureTable table = random_table(50, 2, rng);
        const GramMatrix g = gram(spec, table);
        CHECK_NOTHROW(g.validate(1e-10));
        CHECK(g.min_eigenvalue() >= -1e-8);
    }
}

TEST_CASE("cross_gram consistency") {
    Rng rng(56);
    const EmbeddingSpec spec = one_to_n_spec(2, 3, rng);
    const FeatureTable train = random_table(6, 2, rng);

    // Same table on both sides reproduces the gram.
    const CrossGram x = cross_gram(spec, train, train);
    const GramMatrix g = gram(spec, train);
    for (std::size_t i = 0; i < g.size; ++i) {
        for (std::size_t j = 0; j < g.size; ++j) {
            CHECK(std::abs(x.at(i, j) - g.at(i, j)) < 1e-14);
        }
    }

    // A test point equal to a training point produces a 1.0 in that column.
    FeatureTable probe;
    probe.rows = 1;
    probe.cols = 2;
    probe.provenance = train.provenance;
    probe.ids.push_back("probe");
    probe.features = {train.at(3, 0), train.at(3, 1)};
    const CrossGram xp = cross_gram(spec, train, probe);
    CHECK(std::abs(xp.at(0, 3) - 1.0) < 1e-12);

    // Spot-check entries against kernel_entry.
    const FeatureTable test = random_table(5, 2, rng);
    const CrossGram xs = cross_gram(spec, train, test);
    const auto train_pts = encode_rows(train);
    const auto test_pts = encode_rows(test);
    for (int k = 0; k < 5; ++k) {
        const std::size_t i = rng.below(test.rows);
        const std::size_t j = rng.below(train.rows);
        CHECK(std::abs(xs.at(i, j) - kernel_entry(spec, test_pts[i], train_pts[j])) < 1e-14);
    }
}

TEST_CASE("thread count does not change gram bytes") {
    Rng rng(57);
    const EmbeddingSpec spec = n_to_n_spec(3, 2, rng);
    const FeatureTable table = random_table(20, 2, rng);
    apply_thread_count(1);
    const GramMatrix a = gram(spec, table);
    apply_thread_count(4);
    const GramMatrix b = gram(spec, table);
    apply_thread_count(resolve_threads(0));
    CHECK(a.entries == b.entries);
}

TEST_CASE("gram save/load round trip") {
    Rng rng(58);
    const EmbeddingSpec spec = one_to_n_spec(2, 2, rng);
    const FeatureTable table = random_table(4, 2, rng);
    const GramMatrix g = gram(spec, table);

    const std::string base = std::filesystem::temp_directory_path() / "nqk_gram_test";
    save_gram(g, spec, table.cols, base);
    const GramMatrix back = load_gram(base);
    CHECK(back.size == g.size);
    CHECK(back.point_ids == g.point_ids);
    for (std::size_t i = 0; i < g.entries.size(); ++i) {
        CHECK(back.entries[i] == g.entries[i]);  // %.17g is round-trip exact
    }
    std::filesystem::remove(base + ".csv");
    std::filesystem::remove(base + ".json");
}

TEST_CASE("n_to_n embedding with zero couplings keeps the single-qubit marginal") {
    Rng rng(59);
    QnnParams p = QnnParams::random_init(2, 3, rng);
    for (double& v : p.phi) v = 0.0;
    QnnParams p1 = QnnParams::zeros(1, 3);
    for (int l = 0; l < 3; ++l) {
        for (int a = 0; a < 3; ++a) p1.theta_at(l, 0, a) = p.theta_at(l, 0, a);
    }
    EmbeddingSpec spec;
    spec.kind = EmbeddingKind::NToN;
    spec.params = p;
    spec.n_qubits = 2;
    for (int t = 0; t < 10; ++t) {
        const EncodedPoint pt =
            encode_point(std::vector<double>{rng.uniform(-1, 1), rng.uniform(-1, 1)});
        const double marginal = prob_first_qubit_zero(spec.embed(pt));
        const double single = prob_first_qubit_zero(run_single_qubit_qnn(p1, pt));
        CHECK(std::abs(marginal - single) < 1e-10);
    }
}

TEST_CASE("embedding spec validation") {
    Rng rng(60);
    EmbeddingSpec bad;
    bad.kind = EmbeddingKind::OneToN;
    bad.params = QnnParams::random_init(2, 2, rng);
    bad.n_qubits = 2;
    CHECK_THROWS_AS(bad.validate(), config_error);

    EmbeddingSpec mismatch;
    mismatch.kind = EmbeddingKind::NToN;
    mismatch.params = QnnParams::random_init(2, 2, rng);
    mismatch.n_qubits = 3;
    CHECK_THROWS_AS(mismatch.validate(), config_error);

    // JSON round trip.
    EmbeddingSpec ok;
    ok.kind = EmbeddingKind::NToN;
    ok.params = QnnParams::random_init(3, 2, rng);
    ok.n_qubits = 3;
    const EmbeddingSpec back = EmbeddingSpec::from_json(ok.to_json());
    CHECK(back.kind == ok.kind);
    CHECK(back.n_qubits == ok.n_qubits);
    CHECK(back.params.theta == ok.params.theta);
}
