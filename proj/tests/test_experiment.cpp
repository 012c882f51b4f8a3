#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nqk/experiment.hpp>

using namespace nqk;

namespace {

ExperimentConfig small_one_to_n() {
    ExperimentConfig c;
    c.experiment = "one_to_n";
    c.dataset.kind = "synthetic";
    c.dataset.synthetic_kind = SyntheticKind::Blobs;
    c.dataset.m = 40;
    c.dataset.noise = 0.3;
    c.p = 2;
    c.n_qubits = 2;
    c.layers = 2;
    c.preset = "custom";
    c.train.learning_rate = 0.01;
    c.train.epochs = 2;
    c.train.batch_size = 10;
    c.train.gradient_method = GradientMethod::Adjoint;
    c.k_folds = 2;
    c.seed = 12;
    return c;
}

}  // namespace

TEST_CASE("boxplot_stats fixed examples") {
    const BoxplotStats s = boxplot_stats({1, 2, 3, 4, 5});
    CHECK(s.q25 == doctest::Approx(2.0));
    CHECK(s.median == doctest::Approx(3.0));
    CHECK(s.q75 == doctest::Approx(4.0));
    CHECK(s.whisker_low == doctest::Approx(1.0));
    CHECK(s.whisker_high == doctest::Approx(5.0));
    CHECK(s.outliers.empty());

    const BoxplotStats flat = boxplot_stats({0.7, 0.7, 0.7});
    CHECK(flat.q25 == 0.7);
    CHECK(flat.q75 == 0.7);
    CHECK(flat.whisker_low == 0.7);
    CHECK(flat.whisker_high == 0.7);
    CHECK(flat.outliers.empty());

    std::vector<double> with_extreme{1, 2, 3, 4, 5, 6, 7, 8, 9, 100};
    const BoxplotStats o = boxplot_stats(with_extreme);
    REQUIRE(o.outliers.size() == 1);
    CHECK(o.outliers[0] == 100.0);
    CHECK(o.whisker_high == 9.0);

    CHECK_THROWS_AS(boxplot_stats({}), data_error);
}

TEST_CASE("experiment config json round trip and presets") {
    ExperimentConfig c = small_one_to_n();
    const ExperimentConfig back = ExperimentConfig::from_json(c.to_json());
    CHECK(back.experiment == c.experiment);
    CHECK(back.dataset.m == c.dataset.m);
    CHECK(back.train.epochs == c.train.epochs);
    CHECK(back.train.batch_size == c.train.batch_size);
    CHECK(back.seed == c.seed);

    // Preset names expand to the published settings.
    nlohmann::json j = c.to_json();
    j["preset"] = "optimal";
    j.erase("train");
    const ExperimentConfig opt = ExperimentConfig::from_json(j);
    CHECK(opt.train.learning_rate == 0.01);
    CHECK(opt.train.epochs == 10);

    j["preset"] = "suboptimal";
    const ExperimentConfig sub = ExperimentConfig::from_json(j);
    CHECK(sub.train.learning_rate == 0.001);
    CHECK(sub.train.epochs == 2);

    j["preset"] = "scaling";
    const ExperimentConfig sc = ExperimentConfig::from_json(j);
    CHECK(sc.train.learning_rate == 0.005);
    CHECK(sc.train.epochs == 10);

    // Overrides on top of a preset stick.
    j["preset"] = "optimal";
    j["train"] = {{"epochs", 3}};
    CHECK(ExperimentConfig::from_json(j).train.epochs == 3);
    CHECK(ExperimentConfig::from_json(j).train.learning_rate == 0.01);

    j["preset"] = "nonsense";
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), config_error);
}

TEST_CASE("one_to_n experiment on blobs") {
    const ExperimentConfig c = small_one_to_n();
    const ResultsBundle bundle = run_one_to_n(c);

    REQUIRE(bundle.records.size() == 4);  // 2 folds x {qnn, nqk}
    double qnn_test = 0.0, nqk_test = 0.0;
    for (const FoldRecord& r : bundle.records) {
        CHECK(r.train_acc >= 0.0);
        CHECK(r.train_acc <= 1.0);
        if (r.model == "qnn") qnn_test += r.test_acc;
        if (r.model == "nqk") nqk_test += r.test_acc;
    }
    qnn_test /= 2.0;
    nqk_test /= 2.0;
    // Reference run: both at 1.0 on separable blobs; the kernel model stays
    // within 5 points of the circuit classifier.
    CHECK(nqk_test >= qnn_test - 0.05);

    CHECK(bundle.summary.contains("dataset_hash"));
    CHECK(bundle.summary["models"].contains("qnn"));
    CHECK(bundle.summary["models"].contains("nqk"));
}

TEST_CASE("one_to_n reruns are byte-identical") {
    const ExperimentConfig c = small_one_to_n();
    const ResultsBundle a = run_one_to_n(c);
    const ResultsBundle b = run_one_to_n(c);
    CHECK(a.records_csv() == b.records_csv());
    CHECK(a.summary.dump(2) == b.summary.dump(2));
    CHECK(a.whiskers_dat() == b.whiskers_dat());
}

TEST_CASE("zero-epoch training still yields a valid kernel pipeline") {
    ExperimentConfig c = small_one_to_n();
    c.train.epochs = 0;  // kernel built from the random initialization
    const ResultsBundle bundle = run_one_to_n(c);
    REQUIRE(bundle.records.size() == 4);
    for (const FoldRecord& r : bundle.records) {
        CHECK(std::isfinite(r.test_acc));
    }
}

TEST_CASE("n_to_n experiment scales without cost regressions") {
    ExperimentConfig c;
    c.experiment = "n_to_n";
    c.dataset.kind = "synthetic";
    c.dataset.synthetic_kind = SyntheticKind::Circles;
    c.dataset.m = 120;
    c.dataset.noise = 0.08;
    c.p = 2;
    c.n_max = 2;
    c.layers = 2;
    c.preset = "custom";
    c.train.learning_rate = 0.01;
    c.train.epochs = 2;
    c.train.batch_size = 16;
    c.train.gradient_method = GradientMethod::Adjoint;
    c.repeats = 2;
    c.train_size = 60;
    c.test_size = 20;
    c.seed = 33;

    const ResultsBundle bundle = run_n_to_n(c);
    REQUIRE(bundle.records.size() == 8);  // 2 repeats x 2 widths x 2 models

    // Costs never increase with the qubit count inside a repeat.
    for (int rep = 0; rep < 2; ++rep) {
        std::vector<double> costs;
        for (const FoldRecord& r : bundle.records) {
            if (r.fold == rep && r.model == "qnn") costs.push_back(r.best_cost);
        }
        REQUIRE(costs.size() == 2);
        CHECK(costs[1] <= costs[0] + 1e-10);
    }

    REQUIRE(bundle.summary["per_n"].size() == 2);
    CHECK(bundle.summary["per_n"][0]["n"] == 1);

    // n_max = 1 degenerates to the plain single-qubit experiment.
    c.n_max = 1;
    const ResultsBundle single = run_n_to_n(c);
    CHECK(single.records.size() == 4);
}

TEST_CASE("classical baseline runs on the same folds") {
    ExperimentConfig c = small_one_to_n();
    c.experiment = "classical";
    c.search_iters = 5;
    const ResultsBundle bundle = run_classical(c);

    // 2 folds x {svc-linear, svc-rbf, svc-search}.
    REQUIRE(bundle.records.size() == 6);
    double linear_test = 0.0;
    for (const FoldRecord& r : bundle.records) {
        if (r.model == "svc-linear") linear_test += r.test_acc;
        CHECK(r.n_qubits == 0);
    }
    CHECK(linear_test / 2.0 >= 0.95);  // separable blobs

    CHECK(bundle.summary["models"].contains("svc-linear"));
    CHECK(bundle.summary["models"].contains("svc-rbf"));
    CHECK(bundle.summary["models"].contains("svc-search"));
    CHECK(bundle.summary.contains("search"));

    // Same dataset, same fold derivation: the hash pins the input, and a
    // rerun reproduces everything.
    const ResultsBundle again = run_classical(c);
    CHECK(bundle.records_csv() == again.records_csv());
    CHECK(bundle.summary["dataset_hash"] == again.summary["dataset_hash"]);

    const ExperimentConfig quantum = small_one_to_n();
    const ResultsBundle qbundle = run_one_to_n(quantum);
    CHECK(qbundle.summary["dataset_hash"] == bundle.summary["dataset_hash"]);
}

TEST_CASE("write_bundle produces the three artifacts deterministically") {
    namespace fs = std::filesystem;
    const ExperimentConfig c = small_one_to_n();
    const ResultsBundle bundle = run_one_to_n(c);

    const fs::path dir = fs::temp_directory_path() / "nqk_bundle_test";
    fs::remove_all(dir);
    write_bundle(bundle, dir.string());
    for (const char* name : {"folds.csv", "summary.json", "whiskers.dat"}) {
        CHECK(fs::exists(dir / name));
    }

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    const std::string first = slurp(dir / "folds.csv");
    write_bundle(run_one_to_n(c), dir.string());
    CHECK(slurp(dir / "folds.csv") == first);

    // Header matches the documented schema.
    CHECK(first.rfind("fold,model,n_qubits,train_acc,test_acc\n", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("wide csv input is reduced to p features inside the experiment") {
    namespace fs = std::filesystem;
    // Separable blobs in the first two columns, independent noise in the rest.
    FeatureTable wide = make_synthetic(SyntheticKind::Blobs, 60, 0.3, 14);
    Rng rng(14);
    FeatureTable padded;
    padded.rows = wide.rows;
    padded.cols = 8;
    padded.ids = wide.ids;
    padded.labels = wide.labels;
    for (std::size_t r = 0; r < wide.rows; ++r) {
        padded.features.push_back(wide.at(r, 0));
        padded.features.push_back(wide.at(r, 1));
        for (int c = 2; c < 8; ++c) padded.features.push_back(0.3 * rng.normal());
    }
    const fs::path path = fs::temp_directory_path() / "nqk_wide_input.csv";
    write_feature_csv(padded, path.string());

    ExperimentConfig c = small_one_to_n();
    c.dataset.kind = "csv";
    c.dataset.path = path.string();
    c.p = 2;
    c.reducer = Reducer::Pca;
    c.train.epochs = 8;
    const ResultsBundle bundle = run_one_to_n(c);
    REQUIRE(bundle.records.size() == 4);
    for (const FoldRecord& r : bundle.records) {
        if (r.model == "nqk") CHECK(r.test_acc >= 0.9);  // reference run: 1.0 both folds
    }
    fs::remove(path);
}

TEST_CASE("NQK_THREADS wins over the --threads flag") {
    const char* old = std::getenv("NQK_THREADS");
    const std::string saved = old ? old : "";

    setenv("NQK_THREADS", "3", 1);
    CHECK(resolve_threads(8) == 3);
    setenv("NQK_THREADS", "garbage", 1);
    CHECK(resolve_threads(8) == 8);  // unparsable values are ignored
    unsetenv("NQK_THREADS");
    CHECK(resolve_threads(5) == 5);
    CHECK(resolve_threads(0) >= 1);

    if (old) setenv("NQK_THREADS", saved.c_str(), 1);
}

TEST_CASE("csv-backed dataset with gamma labeling") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "nqk_gamma_input.csv";
    {
        std::ofstream out(path);
        out << "id,f0,f1,gamma\n";
        // 6 clear positives, 6 negatives, 2 edge cases to exclude.
        for (int i = 0; i < 6; ++i) {
            out << "p" << i << ",0.5,0.5,0.0" << 5 + i << "\n";  // gamma 0.05..
        }
        for (int i = 0; i < 6; ++i) {
            out << "n" << i << ",-0.5,-0.5,0\n";
        }
        out << "e0,0.1,0.1,0.0001\ne1,0.2,0.2,0.00005\n";
    }

    ExperimentConfig c;
    c.dataset.kind = "csv";
    c.dataset.path = path.string();
    c.dataset.label_percentile = 15.0;
    c.seed = 5;
    std::string hash;
    const FeatureTable table = load_experiment_table(c, &hash);
    CHECK(table.rows == 12);  // the two edge cases are excluded, classes balanced
    std::size_t pos = 0;
    for (int y : table.labels) pos += y > 0;
    CHECK(pos == 6);
    CHECK(!hash.empty());
    fs::remove(path);
}
