#include "nqk/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "nqk/linalg.hpp"
#include "nqk/sha1.hpp"

namespace nqk {

using json = nlohmann::json;

EmbeddingKind embedding_kind_from_string(const std::string& name) {
    if (name == "one_to_n" || name == "1n") return EmbeddingKind::OneToN;
    if (name == "n_to_n" || name == "nn") return EmbeddingKind::NToN;
    throw config_error("unknown embedding kind '" + name + "'");
}

const char* embedding_kind_name(EmbeddingKind kind) {
    return kind == EmbeddingKind::OneToN ? "one_to_n" : "n_to_n";
}

void EmbeddingSpec::validate() const {
    params.validate();
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw config_error("EmbeddingSpec: n_qubits out of range");
    }
    if (kind == EmbeddingKind::OneToN && params.n_qubits != 1) {
        throw config_error("EmbeddingSpec: one_to_n needs single-qubit parameters");
    }
    if (kind == EmbeddingKind::NToN && params.n_qubits != n_qubits) {
        throw config_error("EmbeddingSpec: n_to_n needs params.n_qubits == n_qubits");
    }
}

Statevector EmbeddingSpec::embed(const EncodedPoint& point) const {
    if (kind == EmbeddingKind::OneToN) {
        return embed_1_to_n(params, point, n_qubits);
    }
    return run_nqubit_qnn(params, point);
}

json EmbeddingSpec::to_json() const {
    return json{{"kind", embedding_kind_name(kind)},
                {"n_qubits", n_qubits},
                {"params", params.to_json()}};
}

EmbeddingSpec EmbeddingSpec::from_json(const json& j) {
    EmbeddingSpec spec;
    try {
        spec.kind = embedding_kind_from_string(j.at("kind").get<std::string>());
        spec.n_qubits = j.at("n_qubits").get<int>();
        spec.params = QnnParams::from_json(j.at("params"));
    } catch (const json::exception& e) {
        throw data_error(std::string("EmbeddingSpec: invalid JSON: ") + e.what());
    }
    spec.validate();
    return spec;
}

void GramMatrix::validate(double tol) const {
    if (entries.size() != size * size || point_ids.size() != size) {
        throw numerical_error("GramMatrix: shape mismatch");
    }
    for (std::size_t i = 0; i < size; ++i) {
        if (std::abs(at(i, i) - 1.0) > tol) {
            throw numerical_error("GramMatrix: diagonal entry " + std::to_string(i) +
                                  " deviates from 1 by " + std::to_string(at(i, i) - 1.0));
        }
        for (std::size_t j = i + 1; j < size; ++j) {
            if (std::abs(at(i, j) - at(j, i)) > tol) {
                throw numerical_error("GramMatrix: asymmetric at (" + std::to_string(i) + "," +
                                      std::to_string(j) + ")");
            }
            if (at(i, j) < 0.0 || at(i, j) > 1.0 + 1e-12) {
                throw numerical_error("GramMatrix: entry out of [0,1] at (" + std::to_string(i) +
                                      "," + std::to_string(j) + ")");
            }
        }
    }
}

double GramMatrix::min_eigenvalue() const {
    return min_symmetric_eigenvalue(entries, size);
}

namespace {

// Snap to the bounds inside a 1e-12 band (roundoff can land a fidelity just
// past either side); genuine interior values pass through untouched.
double clamp_unit(double v) {
    if (std::abs(v - 1.0) <= 1e-12) return 1.0;
    if (std::abs(v) <= 1e-12) return 0.0;
    return v;
}

std::vector<Statevector> embed_all(const EmbeddingSpec& spec,
                                   const std::vector<EncodedPoint>& points) {
    std::vector<Statevector> states(points.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(points.size()); ++i) {
        states[i] = spec.embed(points[i]);
    }
    return states;
}

}  // namespace

double kernel_entry(const EmbeddingSpec& spec, const EncodedPoint& xi, const EncodedPoint& xj) {
    spec.validate();
    if (xi.features.size() != xj.features.size()) {
        throw data_error("kernel_entry: points disagree on feature count");
    }
    return clamp_unit(fidelity(spec.embed(xi), spec.embed(xj)));
}

GramMatrix gram(const EmbeddingSpec& spec, const FeatureTable& table) {
    spec.validate();
    if (table.rows == 0) throw data_error("gram: empty table");
    const std::vector<EncodedPoint> points = encode_rows(table);
    const std::vector<Statevector> states = embed_all(spec, points);

    GramMatrix g;
    g.size = table.rows;
    g.point_ids = table.ids;
    g.entries.assign(g.size * g.size, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(g.size); ++i) {
        g.at(i, i) = clamp_unit(fidelity(states[i], states[i]));
        for (std::size_t j = i + 1; j < g.size; ++j) {
            const double v = clamp_unit(fidelity(states[i], states[j]));
            g.at(i, j) = v;
            g.at(j, i) = v;
        }
    }
    return g;
}

GramMatrix gram_reference(const EmbeddingSpec& spec, const FeatureTable& table) {
    spec.validate();
    if (table.rows == 0) throw data_error("gram_reference: empty table");
    const std::vector<EncodedPoint> points = encode_rows(table);

    GramMatrix g;
    g.size = table.rows;
    g.point_ids = table.ids;
    g.entries.assign(g.size * g.size, 0.0);
    for (std::size_t i = 0; i < g.size; ++i) {
        for (std::size_t j = i; j < g.size; ++j) {
            const double v = kernel_entry(spec, points[i], points[j]);
            g.at(i, j) = v;
            g.at(j, i) = v;
        }
    }
    return g;
}

CrossGram cross_gram(const EmbeddingSpec& spec, const FeatureTable& train,
                     const FeatureTable& test) {
    spec.validate();
    if (train.rows == 0 || test.rows == 0) throw data_error("cross_gram: empty table");
    if (train.cols != test.cols) throw data_error("cross_gram: feature count mismatch");
    const std::vector<Statevector> train_states = embed_all(spec, encode_rows(train));
    const std::vector<Statevector> test_states = embed_all(spec, encode_rows(test));

    CrossGram x;
    x.rows = test.rows;
    x.cols = train.rows;
    x.row_ids = test.ids;
    x.col_ids = train.ids;
    x.entries.assign(x.rows * x.cols, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(x.rows); ++t) {
        for (std::size_t i = 0; i < x.cols; ++i) {
            x.entries[t * x.cols + i] = clamp_unit(fidelity(test_states[t], train_states[i]));
        }
    }
    return x;
}

void save_gram(const GramMatrix& g, const EmbeddingSpec& spec, std::size_t feature_count,
               const std::string& base_path) {
    {
        std::ofstream out(base_path + ".csv", std::ios::binary);
        if (!out) throw data_error("save_gram: cannot open '" + base_path + ".csv'");
        char buf[32];
        for (std::size_t i = 0; i < g.size; ++i) {
            for (std::size_t j = 0; j < g.size; ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", g.at(i, j));
                if (j) out << ',';
                out << buf;
            }
            out << '\n';
        }
    }
    json sidecar{{"size", g.size},
                 {"point_ids", g.point_ids},
                 {"p", feature_count},
                 {"n_qubits", spec.n_qubits},
                 {"kind", embedding_kind_name(spec.kind)},
                 {"spec_hash", git_blob_hash(spec.to_json().dump())}};
    std::ofstream meta(base_path + ".json", std::ios::binary);
    if (!meta) throw data_error("save_gram: cannot open '" + base_path + ".json'");
    meta << sidecar.dump(2) << "\n";
}

GramMatrix load_gram(const std::string& base_path) {
    std::ifstream meta(base_path + ".json");
    if (!meta) throw data_error("load_gram: cannot open '" + base_path + ".json'");
    json sidecar;
    try {
        meta >> sidecar;
    } catch (const json::exception& e) {
        throw data_error(std::string("load_gram: invalid sidecar JSON: ") + e.what());
    }

    GramMatrix g;
    g.size = sidecar.at("size").get<std::size_t>();
    g.point_ids = sidecar.at("point_ids").get<std::vector<std::string>>();
    g.entries.reserve(g.size * g.size);

    std::ifstream in(base_path + ".csv");
    if (!in) throw data_error("load_gram: cannot open '" + base_path + ".csv'");
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            try {
                g.entries.push_back(std::stod(line.substr(pos, comma - pos)));
            } catch (const std::exception&) {
                throw data_error("load_gram: malformed entry in '" + base_path + ".csv'");
            }
            pos = comma + 1;
        }
    }
    if (g.entries.size() != g.size * g.size || g.point_ids.size() != g.size) {
        throw data_error("load_gram: matrix shape does not match sidecar");
    }
    return g;
}

}  // namespace nqk
