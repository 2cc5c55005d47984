#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "model.hpp"

namespace hawkes {

inline constexpr const char* kModelSchema = "hawkes-model/1";

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

inline double number(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    if (!obj[key].is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
    return obj[key].get<double>();
}

inline std::string type_of(const json& obj, const std::string& where) {
    if (!obj.is_object() || !obj.contains("type") || !obj["type"].is_string())
        throw ConfigError(where + ": expected an object with a string 'type'");
    return obj["type"].get<std::string>();
}

inline KernelSpec parse_kernel(const json& obj, const std::string& where) {
    auto t = type_of(obj, where);
    if (t == "zero") {
        check_keys(obj, {"type"}, where);
        return ZeroKernel{};
    }
    if (t == "exponential") {
        check_keys(obj, {"type", "alpha"}, where);
        return ExponentialKernel{number(obj, "alpha", where)};
    }
    if (t == "power_law") {
        check_keys(obj, {"type", "c", "p"}, where);
        return PowerLawKernel{number(obj, "c", where), number(obj, "p", where)};
    }
    throw ConfigError(where + ": unknown kernel type '" + t + "'");
}

inline JumpSpec parse_jump(const json& obj, const std::string& where) {
    auto t = type_of(obj, where);
    if (t == "zero") {
        check_keys(obj, {"type"}, where);
        return ZeroJump{};
    }
    if (t == "constant") {
        check_keys(obj, {"type", "b"}, where);
        return ConstantJump{number(obj, "b", where)};
    }
    if (t == "exponential") {
        check_keys(obj, {"type", "mean"}, where);
        return ExponentialJump{number(obj, "mean", where)};
    }
    if (t == "pareto") {
        check_keys(obj, {"type", "C", "gamma"}, where);
        return ParetoJump{number(obj, "C", where), number(obj, "gamma", where)};
    }
    throw ConfigError(where + ": unknown jump type '" + t + "'");
}

inline SojournSpec parse_sojourn(const json& obj, const std::string& where) {
    auto t = type_of(obj, where);
    if (t == "infinite") {
        check_keys(obj, {"type"}, where);
        return InfiniteSojourn{};
    }
    if (t == "exponential") {
        check_keys(obj, {"type", "mu"}, where);
        return ExponentialSojourn{number(obj, "mu", where)};
    }
    if (t == "deterministic") {
        check_keys(obj, {"type", "tau"}, where);
        return DeterministicSojourn{number(obj, "tau", where)};
    }
    throw ConfigError(where + ": unknown sojourn type '" + t + "'");
}

template <class T, class Parse>
Matrix<T> parse_matrix(const json& arr, std::size_t d, const std::string& name, Parse parse) {
    if (!arr.is_array() || arr.size() != d) throw ConfigError(name + ": expected " + std::to_string(d) + " rows");
    Matrix<T> m(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        if (!arr[i].is_array() || arr[i].size() != d)
            throw ConfigError(name + ": row " + std::to_string(i + 1) + " must have " + std::to_string(d) + " cells");
        for (std::size_t j = 0; j < d; ++j)
            m(i, j) = parse(arr[i][j], name + "[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) + "]");
    }
    return m;
}

inline json kernel_json(const KernelSpec& k) {
    return std::visit(overloaded{[](const ZeroKernel&) { return json{{"type", "zero"}}; },
                                 [](const ExponentialKernel& e) { return json{{"type", "exponential"}, {"alpha", e.alpha}}; },
                                 [](const PowerLawKernel& p) { return json{{"type", "power_law"}, {"c", p.c}, {"p", p.p}}; }},
                      k);
}

inline json jump_json(const JumpSpec& j) {
    return std::visit(overloaded{[](const ZeroJump&) { return json{{"type", "zero"}}; },
                                 [](const ConstantJump& c) { return json{{"type", "constant"}, {"b", c.b}}; },
                                 [](const ExponentialJump& e) { return json{{"type", "exponential"}, {"mean", e.mean}}; },
                                 [](const ParetoJump& p) { return json{{"type", "pareto"}, {"C", p.C}, {"gamma", p.gamma}}; }},
                      j);
}

inline json sojourn_json(const SojournSpec& s) {
    return std::visit(overloaded{[](const InfiniteSojourn&) { return json{{"type", "infinite"}}; },
                                 [](const ExponentialSojourn& e) { return json{{"type", "exponential"}, {"mu", e.mu}}; },
                                 [](const DeterministicSojourn& d) { return json{{"type", "deterministic"}, {"tau", d.tau}}; }},
                      s);
}

}  // namespace detail

inline HawkesModel model_from_json(const nlohmann::json& doc) {
    using namespace detail;
    check_keys(doc, {"schema", "dimension", "base_rates", "kernels", "jumps", "sojourns", "name"}, "model");
    if (!doc.contains("schema") || doc["schema"] != kModelSchema)
        throw ConfigError(std::string("model: 'schema' must be \"") + kModelSchema + "\"");
    if (!doc.contains("dimension") || !doc["dimension"].is_number_unsigned() || doc["dimension"].get<std::size_t>() == 0)
        throw ConfigError("model: 'dimension' must be a positive integer");
    std::size_t d = doc["dimension"].get<std::size_t>();
    for (const char* key : {"base_rates", "kernels", "jumps", "sojourns"})
        if (!doc.contains(key)) throw ConfigError(std::string("model: missing key '") + key + "'");

    HawkesModel m(d);
    const auto& br = doc["base_rates"];
    if (!br.is_array() || br.size() != d) throw ConfigError("base_rates: expected " + std::to_string(d) + " numbers");
    for (std::size_t i = 0; i < d; ++i) {
        if (!br[i].is_number()) throw ConfigError("base_rates: entries must be numbers");
        m.base_rates[i] = br[i].get<double>();
    }
    m.kernels = parse_matrix<KernelSpec>(doc["kernels"], d, "kernels", parse_kernel);
    m.jumps = parse_matrix<JumpSpec>(doc["jumps"], d, "jumps", parse_jump);
    const auto& so = doc["sojourns"];
    if (!so.is_array() || so.size() != d) throw ConfigError("sojourns: expected " + std::to_string(d) + " entries");
    for (std::size_t i = 0; i < d; ++i) m.sojourns[i] = parse_sojourn(so[i], "sojourns[" + std::to_string(i + 1) + "]");
    return m;
}

inline nlohmann::json model_to_json(const HawkesModel& m) {
    using namespace detail;
    json doc;
    doc["schema"] = kModelSchema;
    doc["dimension"] = m.d;
    doc["base_rates"] = m.base_rates;
    json k = json::array(), j = json::array(), s = json::array();
    for (std::size_t r = 0; r < m.d; ++r) {
        json kr = json::array(), jr = json::array();
        for (std::size_t c = 0; c < m.d; ++c) {
            kr.push_back(kernel_json(m.kernels(r, c)));
            jr.push_back(jump_json(m.jumps(r, c)));
        }
        k.push_back(kr);
        j.push_back(jr);
        s.push_back(sojourn_json(m.sojourns[r]));
    }
    doc["kernels"] = k;
    doc["jumps"] = j;
    doc["sojourns"] = s;
    return doc;
}

inline HawkesModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("model file '" + path + "' is not valid JSON: " + e.what());
    }
    return model_from_json(doc);
}

}  // namespace hawkes
