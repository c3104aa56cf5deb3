#include "satcon/scenario.hpp"

#include <fstream>

#include "satcon/errors.hpp"

namespace satcon {

namespace {

Mat matrix_from_json(const nlohmann::json& rows, const std::string& what) {
    if (!rows.is_array() || rows.empty()) {
        throw ValidationError(what + " must be a nonempty array of rows");
    }
    const Index n = static_cast<Index>(rows.size());
    const Index m = rows.front().is_array() ? static_cast<Index>(rows.front().size()) : 1;
    Mat out(n, m);
    for (Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != m) {
            throw ValidationError(what + " row " + std::to_string(i) +
                                  " has inconsistent length");
        }
        for (Index j = 0; j < m; ++j) {
            const auto& cell = row[static_cast<std::size_t>(j)];
            if (!cell.is_number()) {
                throw ValidationError(what + "(" + std::to_string(i) + "," +
                                      std::to_string(j) + ") is not a number");
            }
            out(i, j) = cell.get<double>();
        }
    }
    return out;
}

Vec per_agent_values(const nlohmann::json& v, Index n, const std::string& what) {
    if (v.is_number()) return Vec::Constant(n, v.get<double>());
    if (v.is_array()) {
        if (static_cast<Index>(v.size()) != n) {
            throw ValidationError(what + " must list one value per agent");
        }
        Vec out(n);
        for (Index i = 0; i < n; ++i) out(i) = v[static_cast<std::size_t>(i)].get<double>();
        return out;
    }
    throw ValidationError(what + " must be a number or an array");
}

double require_positive(const nlohmann::json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    double v = j.at(key).get<double>();
    if (!(v > 0.0)) throw ValidationError(key + " must be positive");
    return v;
}

}  // namespace

WeightedDigraph graph_from_json(const nlohmann::json& spec) {
    if (!spec.is_object()) throw ValidationError("graph spec must be an object");
    const bool has_adj = spec.contains("adjacency");
    const bool has_lap = spec.contains("laplacian");
    if (has_adj == has_lap) {
        throw ValidationError("graph spec needs exactly one of adjacency or laplacian");
    }
    if (has_adj) {
        return build_graph(matrix_from_json(spec.at("adjacency"), "adjacency"));
    }

    Mat L = matrix_from_json(spec.at("laplacian"), "laplacian");
    if (L.rows() != L.cols()) throw NonSquare("laplacian must be square");
    for (Index i = 0; i < L.rows(); ++i) {
        double row_sum = L.row(i).sum();
        if (std::abs(row_sum) > 1e-12) {
            throw ValidationError("laplacian row " + std::to_string(i) +
                                  " sums to " + std::to_string(row_sum) +
                                  ", expected zero");
        }
        for (Index j = 0; j < L.cols(); ++j) {
            if (i != j && L(i, j) > 0.0) {
                throw ValidationError("laplacian off-diagonal (" + std::to_string(i) +
                                      "," + std::to_string(j) + ") must be <= 0");
            }
        }
    }
    Mat adjacency = (-L).cwiseMax(0.0);
    adjacency.diagonal().setZero();
    adjacency = (adjacency.array().abs() < kEdgeWeightFloor).select(0.0, adjacency);
    return build_graph(adjacency);
}

Scenario scenario_from_json(const nlohmann::json& j, std::string name) {
    if (!j.is_object()) throw ValidationError("scenario must be a JSON object");
    Scenario sc;
    sc.name = std::move(name);
    if (!j.contains("graph")) throw ValidationError("scenario needs a graph");
    sc.graph = graph_from_json(j.at("graph"));
    const Index n = sc.graph.size();

    sc.h = require_positive(j, "h", sc.h);
    if (j.contains("p")) {
        sc.p = j.at("p").get<Index>();
        if (sc.p < 1) throw ValidationError("p must be at least 1");
    }

    if (!j.contains("x0")) throw ValidationError("scenario needs x0");
    const auto& x0 = j.at("x0");
    if (x0.is_array() && !x0.empty() && x0.front().is_array()) {
        sc.x0 = matrix_from_json(x0, "x0");
    } else {
        sc.x0 = per_agent_values(x0, n, "x0");
    }
    if (sc.x0.rows() != n || sc.x0.cols() != sc.p) {
        throw DimensionMismatch("x0 must be " + std::to_string(n) + "x" +
                                std::to_string(sc.p));
    }
    if (!sc.x0.allFinite()) throw NonFiniteInput("x0 contains NaN/Inf");

    if (j.contains("mode")) {
        std::string mode = j.at("mode").get<std::string>();
        if (mode == "continuous") {
            sc.mode = RunMode::Continuous;
        } else if (mode == "event") {
            sc.mode = RunMode::Event;
        } else {
            throw ValidationError("mode must be continuous or event, got " + mode);
        }
    }
    if (j.contains("alpha") || j.contains("beta")) {
        if (!j.contains("alpha") || !j.contains("beta")) {
            throw ValidationError("alpha and beta must be given together");
        }
        sc.rule.alpha = per_agent_values(j.at("alpha"), n, "alpha");
        sc.rule.beta = per_agent_values(j.at("beta"), n, "beta");
        sc.rule.validate(n);
    } else if (sc.mode == RunMode::Event) {
        throw ValidationError("event mode needs alpha and beta");
    }

    sc.t_end = require_positive(j, "t_end", sc.t_end);
    sc.dt = require_positive(j, "dt", sc.dt);
    sc.sample_dt = require_positive(j, "sample_dt", sc.sample_dt);
    if (j.contains("seed")) sc.seed = j.at("seed").get<std::uint64_t>();
    return sc;
}

Scenario load_scenario(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ValidationError("cannot open scenario file " + file.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(file.string() + ": " + e.what());
    }
    try {
        return scenario_from_json(j, file.stem().string());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(file.string() + ": " + e.what());
    }
}

}  // namespace satcon
