#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cirl/centroids.hpp"
#include "cirl/dynamic_programming.hpp"
#include "cirl/estimators.hpp"
#include "cirl/gridworld.hpp"
#include "cirl/json_io.hpp"
#include "cirl/planning.hpp"
#include "cirl/reward_geometry.hpp"

namespace cirl {

struct EstimatorSpec {
    std::size_t n = 1000;
    std::size_t h = 100;
    double pi_min = kDefaultPiMinPrime;
    CountingMode counting = CountingMode::FirstVisit;
};

enum class ConstraintMode { None, Blocked, Explicit };

struct OutputSpec {
    std::string panel;
    bool policy_layer = true;
    bool occupancy_layer = true;
};

struct ScenarioConfig {
    std::string name;
    GridworldSpec source;
    GridworldSpec target;
    BehaviorModel model = BehaviorModel::opt();
    std::optional<EstimatorSpec> estimator;  ///< empty: exact expert reward
    double exact_pi_min = kDefaultPiMinPrime;
    ConstraintMode constraint_mode = ConstraintMode::None;
    std::optional<ConstraintSpec> explicit_constraint;
    BudgetConvention convention = BudgetConvention::Discounted;
    std::uint64_t simulate_seed = 1;
    std::uint64_t best_case_seed = 1;
    std::vector<OutputSpec> outputs;
};

inline const std::vector<std::string>& scenario_panels() {
    static const std::vector<std::string> panels = {"expert", "mimic", "centroid", "bc", "best_case"};
    return panels;
}

namespace detail {

inline BehaviorModel model_from_json(const Json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "opt") return BehaviorModel::opt();
        if (s == "mce") return BehaviorModel::mce(1.0);
        if (s == "birl") return BehaviorModel::birl(1.0);
        throw DomainError("scenario: unknown model \"" + s + "\"");
    }
    const auto kind = json_get<std::string>(j, "kind", "model");
    if (kind == "opt") return BehaviorModel::opt();
    if (kind == "mce") return BehaviorModel::mce(j.value("lambda", 1.0));
    if (kind == "birl") return BehaviorModel::birl(j.value("beta", 1.0));
    throw DomainError("scenario: unknown model \"" + kind + "\"");
}

inline Json overlay(Json base, const Json& patch) {
    for (auto it = patch.begin(); it != patch.end(); ++it) base[it.key()] = it.value();
    return base;
}

}  // namespace detail

/**
 * Parses a scenario document. The optional "target" object overrides keys
 * of the source gridworld to describe the deployment environment.
 */
inline ScenarioConfig scenario_from_json(const Json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw DomainError("scenario: config must be an object");
    ScenarioConfig cfg;
    cfg.name = detail::json_get<std::string>(j, "name", "scenario");
    if (!j.contains("gridworld")) throw DomainError("scenario: missing key \"gridworld\"");
    const Json& src = j.at("gridworld");
    cfg.source = gridworld_spec_from_json(src, base_dir);
    if (!cfg.source.expert_policy_file) throw DomainError("scenario: gridworld needs an expert_policy_file");
    Json tgt = src;
    if (j.contains("target")) tgt = detail::overlay(src, j.at("target"));
    tgt.erase("expert_policy_file");
    cfg.target = gridworld_spec_from_json(tgt, base_dir);
    if (cfg.target.width != cfg.source.width || cfg.target.height != cfg.source.height)
        throw DomainError("scenario: target grid must have the source dimensions");

    cfg.model = detail::model_from_json(j.value("model", Json("opt")));

    const Json est = j.value("estimator", Json("exact"));
    if (est.is_string()) {
        if (est.get<std::string>() != "exact") throw DomainError("scenario: estimator must be \"exact\" or an object");
    } else {
        EstimatorSpec e;
        e.n = detail::json_get<std::size_t>(est, "n", "estimator");
        e.h = detail::json_get<std::size_t>(est, "h", "estimator");
        e.pi_min = est.value("pi_min", kDefaultPiMinPrime);
        const std::string counting = est.value("counting", std::string("first_visit"));
        if (counting == "first_visit") e.counting = CountingMode::FirstVisit;
        else if (counting == "all") e.counting = CountingMode::AllOccurrences;
        else throw DomainError("scenario: counting must be \"first_visit\" or \"all\"");
        cfg.estimator = e;
    }
    cfg.exact_pi_min = j.value("pi_min", kDefaultPiMinPrime);

    const Json con = j.value("constraint", Json(nullptr));
    if (con.is_null()) {
        cfg.constraint_mode = ConstraintMode::None;
    } else if (con.is_string() && con.get<std::string>() == "blocked") {
        cfg.constraint_mode = ConstraintMode::Blocked;
    } else if (con.is_object()) {
        cfg.constraint_mode = ConstraintMode::Explicit;
        cfg.explicit_constraint = constraint_from_json(con);
    } else {
        throw DomainError("scenario: constraint must be null, \"blocked\" or {cost, budget}");
    }
    const std::string conv = j.value("budget_convention", std::string("discounted"));
    if (conv == "discounted") cfg.convention = BudgetConvention::Discounted;
    else if (conv == "occupancy") cfg.convention = BudgetConvention::Occupancy;
    else throw DomainError("scenario: budget_convention must be \"discounted\" or \"occupancy\"");

    if (j.contains("seeds")) {
        const Json& s = j.at("seeds");
        cfg.simulate_seed = s.value("simulate", std::uint64_t{1});
        cfg.best_case_seed = s.value("best_case", std::uint64_t{1});
    }

    for (const auto& o : detail::json_get<std::vector<std::string>>(j, "outputs", "scenario")) {
        OutputSpec spec;
        const auto dot = o.find('.');
        spec.panel = o.substr(0, dot);
        if (std::find(scenario_panels().begin(), scenario_panels().end(), spec.panel) == scenario_panels().end())
            throw DomainError("scenario: unknown output panel \"" + spec.panel + "\"");
        if (dot != std::string::npos) {
            const std::string layer = o.substr(dot + 1);
            if (layer == "policy") spec.occupancy_layer = false;
            else if (layer == "occupancy") spec.policy_layer = false;
            else throw DomainError("scenario: unknown output layer \"" + layer + "\"");
        }
        if (spec.panel == "best_case" && cfg.model.kind() != ModelKind::Opt)
            throw DomainError("scenario: the best_case panel needs the OPT model");
        cfg.outputs.push_back(spec);
    }
    if (cfg.outputs.empty()) throw DomainError("scenario: outputs must not be empty");
    return cfg;
}

struct PanelResult {
    PolicyTable policy;
    OccupancyMeasure occupancy;
    double value = 0.0;  ///< value at the target's s0 under the recovered reward
    double support_mass = 0.0;
};

struct InvariantResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ScenarioReport {
    std::string name;
    PolicyTable policy;  ///< from the centroid panel, which is always computed
    OccupancyMeasure occupancy;
    double value = 0.0;
    std::vector<std::filesystem::path> svg_paths;
    std::map<std::string, PanelResult> panels;
    std::vector<InvariantResult> invariants;
    RewardTable reward;

    bool invariants_hold() const {
        return std::all_of(invariants.begin(), invariants.end(), [](const auto& i) { return i.pass; });
    }
};

namespace detail {

inline double mass_on(const OccupancyMeasure& d, const StateSet& set) {
    double m = 0.0;
    for (auto s : set.members()) m += d.state_mass(s);
    return m;
}

inline double reward_value(const OccupancyMeasure& d, const RewardTable& r, double gamma) {
    double v = 0.0;
    for (std::size_t k = 0; k < r.flat().size(); ++k) v += d.values().flat()[k] * r.flat()[k];
    return v / (1.0 - gamma);
}

inline StateSet visited_mask(const OccupancyMeasure& d) {
    StateSet m(d.num_states());
    for (std::size_t s = 0; s < d.num_states(); ++s)
        if (d.state_mass(s) > 1e-9) m.insert(s);
    return m;
}

// Every on-support entry the expert plays beats every off-support entry.
inline InvariantResult support_attraction_entries(const RewardTable& r, const Matrix& on_weights,
                                                  const StateSet& on_states) {
    double lo = std::numeric_limits<double>::infinity(), hi = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < r.num_states(); ++s)
        for (std::size_t a = 0; a < r.num_actions(); ++a) {
            if (on_states.contains(s)) {
                if (on_weights(s, a) > 0.0) lo = std::min(lo, r(s, a));
            } else {
                hi = std::max(hi, r(s, a));
            }
        }
    const bool pass = on_states.is_full() || lo > hi;
    return {"support_attraction_reward", pass,
            "min on-support " + std::to_string(lo) + " vs max off-support " + std::to_string(hi)};
}

}  // namespace detail

/// Runs the full pipeline and writes SVGs plus "<name>_report.json" into `out_dir`.
inline ScenarioReport run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
    const GridworldInstance src = build_gridworld(cfg.source);
    const GridworldInstance tgt = build_gridworld(cfg.target);
    const TabularMdp& m = src.mdp;
    const TabularMdp& mp = tgt.mdp;
    const std::size_t S = m.num_states(), A = m.num_actions();
    const PolicyTable expert = policy_from_json(read_json_file(*cfg.source.expert_policy_file));
    require_shape(m, expert.num_states(), expert.num_actions(), "scenario expert");
    const StateSet support = reachable_support(m, expert);
    const ModelKind kind = cfg.model.kind();

    // Recovered reward and the statistic defining its "observed" part.
    RewardTable reward(S, A);
    Matrix observed(S, A);
    StateSet observed_states(S);
    if (cfg.estimator) {
        const auto& e = *cfg.estimator;
        const TrajectoryDataset data = simulate_expert(m, expert, e.n, e.h, cfg.simulate_seed);
        const VisitCounts counts = visit_counts(data, S, A, e.counting);
        for (std::size_t s = 0; s < S; ++s) {
            if (counts.ns[s] > 0) observed_states.insert(s);
            for (std::size_t a = 0; a < A; ++a) observed(s, a) = static_cast<double>(counts(s, a));
        }
        if (kind == ModelKind::Opt) reward = estimate_opt(data, S, A);
        else if (kind == ModelKind::Mce) reward = estimate_mce(data, S, A, e.pi_min, e.counting);
        else reward = estimate_birl(data, S, A, e.pi_min, e.counting);
    } else {
        observed = expert.probs();
        observed_states = support;
        if (kind == ModelKind::Opt) {
            reward = centroid_opt({expert, support, cfg.model});
        } else {
            bool positive = support.is_full();
            for (double x : expert.probs().flat()) positive = positive && x > 0.0;
            if (positive) reward = centroid({expert, support, cfg.model});
            else reward = clipped_log_reward(kind, expert, support, cfg.exact_pi_min);
        }
    }

    std::optional<ConstraintSpec> constraint;
    if (cfg.constraint_mode == ConstraintMode::Blocked) constraint = tgt.constraint;
    else if (cfg.constraint_mode == ConstraintMode::Explicit) constraint = cfg.explicit_constraint;

    ScenarioReport report;
    report.name = cfg.name;
    report.reward = reward;
    auto add_panel = [&](const std::string& name, PolicyTable pi, OccupancyMeasure d) {
        PanelResult p{std::move(pi), std::move(d), 0.0, 0.0};
        const double g = name == "expert" ? m.discount() : mp.discount();
        p.value = detail::reward_value(p.occupancy, reward, g);
        p.support_mass = detail::mass_on(p.occupancy, support);
        report.panels.emplace(name, std::move(p));
    };
    auto wanted = [&](const std::string& panel) {
        return std::any_of(cfg.outputs.begin(), cfg.outputs.end(), [&](const auto& o) { return o.panel == panel; });
    };

    if (wanted("expert")) add_panel("expert", expert, occupancy_measure(m, expert));
    ConstrainedPlan plan = plan_constrained(mp, reward, constraint, cfg.convention);
    add_panel("centroid", plan.policy, plan.occupancy);
    if (wanted("mimic")) {
        MimicResult mim = mimic_policy(m, expert, mp, constraint, cfg.convention);
        add_panel("mimic", std::move(mim.policy), std::move(mim.occupancy));
    }
    if (wanted("bc")) {
        PolicyTable bc = bc_policy(expert, support, A);
        OccupancyMeasure d = occupancy_measure(mp, bc);
        add_panel("bc", std::move(bc), std::move(d));
    }
    if (wanted("best_case")) {
        const RewardTable rb = best_case_reward(m, expert, support, cfg.best_case_seed);
        ConstrainedPlan pb = plan_constrained(mp, rb, constraint, cfg.convention);
        add_panel("best_case", std::move(pb.policy), std::move(pb.occupancy));
    }

    // Invariants.
    if (kind != ModelKind::Opt) {
        report.invariants.push_back(detail::support_attraction_entries(reward, observed, observed_states));
        const OccupancyMeasure uni = occupancy_measure(mp, PolicyTable::uniform(S, A));
        const double planned = detail::mass_on(plan.occupancy, support), base = detail::mass_on(uni, support);
        report.invariants.push_back({"support_attraction_occupancy", planned > base,
                                     "planned " + std::to_string(planned) + " vs uniform " + std::to_string(base)});
    } else {
        const ConstrainedPlan same = plan_constrained(m, reward, std::nullopt, cfg.convention);
        bool match = true;
        for (auto s : support.members()) {
            if (!same.policy.row_deterministic(s) || same.policy.action(s) != expert.action(s)) match = false;
        }
        report.invariants.push_back({"opt_il", match, match ? "planned policy equals the expert on its support"
                                                            : "planned policy departs from the expert on its support"});
    }

    // Rendering.
    for (const auto& o : cfg.outputs) {
        const PanelResult& p = report.panels.at(o.panel);
        const GridworldSpec& spec = o.panel == "expert" ? cfg.source : cfg.target;
        const StateSet mask = o.panel == "expert" ? support : detail::visited_mask(p.occupancy);
        if (o.policy_layer) {
            const auto path = out_dir / (cfg.name + "_" + o.panel + "_policy.svg");
            report.svg_paths.push_back(render_grid_svg(spec, {nullptr, &p.policy, &mask}, path));
        }
        if (o.occupancy_layer) {
            const auto path = out_dir / (cfg.name + "_" + o.panel + "_occupancy.svg");
            report.svg_paths.push_back(render_grid_svg(spec, {&p.occupancy, nullptr, nullptr}, path));
        }
    }

    const auto primary = report.panels.find("centroid");
    report.policy = primary->second.policy;
    report.occupancy = primary->second.occupancy;
    report.value = primary->second.value;

    Json j;
    j["name"] = cfg.name;
    j["model"] = to_string(kind);
    j["reward_source"] = cfg.estimator ? "estimated" : "exact";
    j["reward"] = to_json(reward);
    for (const auto& [name, p] : report.panels)
        j["panels"][name] = {{"value", p.value}, {"support_mass", p.support_mass}, {"policy", to_json(p.policy)["probs"]}};
    for (const auto& inv : report.invariants) j["invariants"][inv.name] = {{"pass", inv.pass}, {"detail", inv.detail}};
    Json files = Json::array();
    for (const auto& p : report.svg_paths) files.push_back(p.filename().string());
    j["svg"] = files;
    write_json_file(out_dir / (cfg.name + "_report.json"), j);
    return report;
}

inline ScenarioReport run_scenario(const std::filesystem::path& config_path, const std::filesystem::path& out_dir) {
    const ScenarioConfig cfg = scenario_from_json(read_json_file(config_path), config_path.parent_path());
    return run_scenario(cfg, out_dir);
}

}  // namespace cirl
