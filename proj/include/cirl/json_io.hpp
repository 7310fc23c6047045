#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cirl/estimators.hpp"
#include "cirl/mdp.hpp"
#include "cirl/planning.hpp"
#include "json.hpp"

namespace cirl {

using Json = nlohmann::json;

inline Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw DomainError(path.string() + ": " + e.what());
    }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DomainError("cannot write " + path.string());
    out << text;
    if (!out) throw DomainError("write failed for " + path.string());
}

inline void write_json_file(const std::filesystem::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

namespace detail {

template <class T>
T json_get(const Json& j, const char* key, const char* what) {
    if (!j.is_object() || !j.contains(key)) throw DomainError(std::string(what) + ": missing key \"" + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw DomainError(std::string(what) + ": bad \"" + key + "\": " + e.what());
    }
}

inline Matrix matrix_from_json(const Json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw DomainError(std::string(what) + ": expected a nonempty 2-d array");
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) throw DomainError(std::string(what) + ": expected a nonempty 2-d array");
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols) throw DomainError(std::string(what) + ": ragged rows");
        for (std::size_t k = 0; k < cols; ++k) {
            if (!j[i][k].is_number()) throw DomainError(std::string(what) + ": non-numeric entry");
            m(i, k) = j[i][k].get<double>();
        }
    }
    return m;
}

inline Json matrix_to_json(const Matrix& m) {
    Json out = Json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (double x : m.row(i)) row.push_back(x);
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace detail

inline Json to_json(const TabularMdp& mdp) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    Json t = Json::array();
    for (std::size_t s = 0; s < S; ++s) {
        Json per_a = Json::array();
        for (std::size_t a = 0; a < A; ++a) {
            Json row = Json::array();
            for (double x : mdp.next(s, a)) row.push_back(x);
            per_a.push_back(std::move(row));
        }
        t.push_back(std::move(per_a));
    }
    return {{"num_states", S}, {"num_actions", A}, {"initial_state", mdp.initial_state()},
            {"gamma", mdp.discount()}, {"transitions", std::move(t)}};
}

inline TabularMdp mdp_from_json(const Json& j) {
    const auto S = detail::json_get<std::size_t>(j, "num_states", "mdp");
    const auto A = detail::json_get<std::size_t>(j, "num_actions", "mdp");
    const auto s0 = detail::json_get<std::size_t>(j, "initial_state", "mdp");
    const auto gamma = detail::json_get<double>(j, "gamma", "mdp");
    const Json& t = j.at("transitions");
    if (!t.is_array() || t.size() != S) throw DomainError("mdp: transitions must have num_states entries");
    std::vector<double> p;
    p.reserve(S * A * S);
    for (const auto& per_a : t) {
        if (!per_a.is_array() || per_a.size() != A) throw DomainError("mdp: each state needs num_actions rows");
        for (const auto& row : per_a) {
            if (!row.is_array() || row.size() != S) throw DomainError("mdp: each row needs num_states entries");
            for (const auto& x : row) {
                if (!x.is_number()) throw DomainError("mdp: non-numeric transition entry");
                p.push_back(x.get<double>());
            }
        }
    }
    return TabularMdp(S, A, s0, std::move(p), gamma);
}

inline Json to_json(const RewardTable& r) { return {{"values", detail::matrix_to_json(r.values())}}; }

inline RewardTable reward_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("values")) throw DomainError("reward: missing key \"values\"");
    return RewardTable(detail::matrix_from_json(j.at("values"), "reward"));
}

inline Json to_json(const PolicyTable& p) { return {{"probs", detail::matrix_to_json(p.probs())}}; }

inline PolicyTable policy_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("probs")) throw DomainError("policy: missing key \"probs\"");
    return PolicyTable(detail::matrix_from_json(j.at("probs"), "policy"));
}

inline Json to_json(const OccupancyMeasure& d) { return {{"values", detail::matrix_to_json(d.values())}}; }

inline Json to_json(const StateSet& set) { return {{"num_states", set.universe()}, {"states", set.members()}}; }

inline StateSet state_set_from_json(const Json& j) {
    const auto n = detail::json_get<std::size_t>(j, "num_states", "support");
    const auto members = detail::json_get<std::vector<std::size_t>>(j, "states", "support");
    return StateSet(n, members);
}

inline Json to_json(const ConstraintSpec& c) {
    return {{"cost", detail::matrix_to_json(c.cost.values())}, {"budget", c.budget}};
}

inline ConstraintSpec constraint_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("cost")) throw DomainError("constraint: missing key \"cost\"");
    return ConstraintSpec(RewardTable(detail::matrix_from_json(j.at("cost"), "constraint")),
                          detail::json_get<double>(j, "budget", "constraint"));
}

/// One JSON object per line: {"states": [...], "actions": [...]}.
inline std::string trajectories_to_jsonl(const TrajectoryDataset& data) {
    std::ostringstream out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto s = data.states(i);
        const auto a = data.actions(i);
        Json j = {{"states", std::vector<std::uint32_t>(s.begin(), s.end())},
                  {"actions", std::vector<std::uint32_t>(a.begin(), a.end())}};
        out << j.dump() << '\n';
    }
    return out.str();
}

inline TrajectoryDataset trajectories_from_jsonl(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    std::optional<TrajectoryDataset> data;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw DomainError("trajectories line " + std::to_string(lineno) + ": " + e.what());
        }
        const auto s = detail::json_get<std::vector<std::uint32_t>>(j, "states", "trajectory");
        const auto a = detail::json_get<std::vector<std::uint32_t>>(j, "actions", "trajectory");
        if (s.size() != a.size() || s.empty())
            throw DomainError("trajectories line " + std::to_string(lineno) + ": states and actions differ in length");
        if (!data) data.emplace(s.size());
        if (s.size() != data->horizon())
            throw DomainError("trajectories line " + std::to_string(lineno) + ": inconsistent horizon");
        data->push_back(s, a);
    }
    if (!data) throw DomainError("trajectories: no trajectories in input");
    return std::move(*data);
}

}  // namespace cirl
