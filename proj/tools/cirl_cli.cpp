// Command-line front end for the cirl library.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cirl/cirl.hpp"

namespace fs = std::filesystem;
using namespace cirl;

namespace {

void emit(const Json& j, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << j.dump(2) << '\n';
    } else {
        write_json_file(out, j);
    }
}

BehaviorModel parse_model(const std::string& name, double coef = 1.0) {
    if (name == "opt") return BehaviorModel::opt();
    if (name == "mce") return BehaviorModel::mce(coef);
    if (name == "birl") return BehaviorModel::birl(coef);
    throw DomainError("unknown model \"" + name + "\"");
}

std::optional<ConstraintSpec> load_constraint(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return constraint_from_json(read_json_file(path));
}

BudgetConvention parse_convention(const std::string& s) {
    if (s == "discounted") return BudgetConvention::Discounted;
    if (s == "occupancy") return BudgetConvention::Occupancy;
    throw DomainError("budget convention must be \"discounted\" or \"occupancy\"");
}

// Geometry checks --------------------------------------------------------

struct CheckReport {
    double estimate = 0.0;
    double std_error = 0.0;
    double target = 0.0;
    bool pass = false;
    Json extra = Json::object();

    Json to_json() const {
        Json j = {{"estimate", estimate}, {"std_error", std_error}, {"target", target},
                  {"sigmas_off", std_error > 0.0 ? (estimate - target) / std_error : 0.0}, {"pass", pass}};
        for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
        return j;
    }
};

CheckReport check_hypercube_bias(std::uint64_t n, std::uint64_t seed) {
    const TabularMdp m = escape_chain_mdp(0.999);
    const std::array<std::size_t, 2> acts = {0, 0};
    const auto est = mc_volume_fraction(m, PolicyTable::from_actions(acts, 2), BehaviorModel::opt(), {-1.0, 1.0}, n, seed);
    CheckReport r{est.mean, est.std_error, 1.0 / 6.0};
    r.pass = std::abs(est.mean - r.target) <= 0.01;
    return r;
}

CheckReport check_segment() {
    const TabularMdp m = single_state_mdp(0.9);
    auto seg = [&](double p) { return segment_volume_1d(m, PolicyTable(Matrix{{p, 1.0 - p}}), BehaviorModel::mce(1.0), 1.0); };
    CheckReport r{seg(1.0 / 3.0), 0.0, 2.0 - std::log(2.0)};
    const double half = seg(0.5);
    r.pass = std::abs(r.estimate - r.target) <= 1e-12 && std::abs(half - 2.0) <= 1e-12;
    r.extra["length_half"] = half;
    return r;
}

TabularMdp small_random_instance(std::uint64_t seed) { return random_mdp(2, 2, 0.5, seed); }

CheckReport check_volumes(std::uint64_t n, std::uint64_t seed) {
    const TabularMdp m = small_random_instance(seed);
    const BoundedSetParams params(1.0, 1.0, BehaviorModel::opt());
    const Interval box = bounding_box(params, m.discount());
    const double vol = std::pow(box.width(), 4.0);
    const auto est = mc_policy_volumes(m, box, n, seed + 1, params);
    CheckReport r;
    r.target = 4.0;
    r.pass = true;
    Json vols = Json::array();
    double sum = 0.0, worst_se = 0.0;
    for (const auto& e : est) {
        const double v = e.mean * vol, se = e.std_error * vol;
        vols.push_back({{"volume", v}, {"std_error", se}});
        sum += v;
        worst_se = std::max(worst_se, se);
        if (std::abs(v - r.target) > 3.0 * se) r.pass = false;
    }
    for (std::size_t i = 0; i < est.size(); ++i)
        for (std::size_t k = i + 1; k < est.size(); ++k) {
            const double diff = (est[i].mean - est[k].mean) * vol;
            const double se = std::hypot(est[i].std_error, est[k].std_error) * vol;
            if (std::abs(diff) > 3.0 * se) r.pass = false;
        }
    r.estimate = sum / static_cast<double>(est.size());
    r.std_error = worst_se / std::sqrt(static_cast<double>(est.size()));
    r.extra["volumes"] = vols;
    return r;
}

// Random 2×2 instance in which s₁ is absorbing under a₁, so that {s₁} is a support.
TabularMdp absorbing_instance(std::uint64_t seed) {
    const TabularMdp base = random_mdp(2, 2, 0.5, seed);
    std::vector<double> p(base.transitions().begin(), base.transitions().end());
    p[0] = 1.0;
    p[1] = 0.0;
    return TabularMdp(2, 2, 0, std::move(p), 0.5);
}

CheckReport check_opt_centroid(std::uint64_t n, std::uint64_t seed) {
    const TabularMdp m = absorbing_instance(seed);
    const std::array<std::size_t, 2> acts = {0, 0};
    const PolicyTable expert = PolicyTable::from_actions(acts, 2);
    StateSet support(2);
    support.insert(0);
    const BoundedSetParams params(1.0, 1.0, BehaviorModel::opt());
    const auto est = mc_centroid_opt(m, expert, support, params, n, seed + 1);
    CheckReport r;
    r.extra["n_accepted"] = est.n_accepted;
    if (est.n_accepted < 2) return r;
    const AffineFit fit = affine_fit(RewardTable(est.mean), centroid_opt({expert, support, BehaviorModel::opt()}));
    r.estimate = fit.residual_sup;
    r.std_error = est.max_std_error();
    r.pass = fit.alpha > 0.0 && fit.residual_sup <= std::max(0.02, 4.0 * r.std_error);
    r.extra["alpha"] = fit.alpha;
    r.extra["beta"] = fit.beta;
    return r;
}

CheckReport check_manifold(std::uint64_t n, std::uint64_t seed, const std::string& model) {
    const TabularMdp m = random_mdp(3, 2, 0.9, seed);
    Rng rng(mix64(seed + 17));
    Matrix probs(3, 2);
    for (std::size_t s = 0; s < 3; ++s) {
        probs(s, 0) = 0.1 + 0.8 * rng.uniform();
        probs(s, 1) = 1.0 - probs(s, 0);
    }
    const PolicyTable pi(std::move(probs));
    const RewardTable eta = model == "birl" ? eta_birl(pi, 1.0) : eta_mce(pi, 1.0);
    const auto est = mc_centroid_manifold(m, eta, 1.0, n, seed + 1);
    CheckReport r;
    r.pass = true;
    double worst = 0.0;
    for (std::size_t k = 0; k < eta.flat().size(); ++k) {
        const double gap = std::abs(est.mean.flat()[k] - eta.flat()[k]);
        worst = std::max(worst, gap);
        if (gap > 4.0 * est.std_error.flat()[k]) r.pass = false;
    }
    r.estimate = worst;
    r.std_error = est.max_std_error();
    return r;
}

CheckReport check_prior(std::uint64_t n, std::uint64_t seed) {
    const TabularMdp m = small_random_instance(seed);
    const BoundedSetParams params(1.0, 1.0, BehaviorModel::opt());
    const auto est = mc_prior_centroid_opt(m, params, n, seed + 1);
    CheckReport r;
    r.extra["n_accepted"] = est.n_accepted;
    if (est.n_accepted < 2) return r;
    const AffineFit fit = constant_fit(RewardTable(est.mean));
    r.estimate = fit.residual_sup;
    r.std_error = est.max_std_error();
    r.pass = fit.residual_sup <= 4.0 * r.std_error;
    return r;
}

CheckReport check_bias_ratio(std::uint64_t n, std::uint64_t seed, double c2) {
    const auto est = new_env_bias_ratio(c2, n, seed);
    CheckReport r{est.mean, est.std_error, bias_ratio_closed_form(c2)};
    r.pass = std::abs(est.mean - r.target) <= 3.0 * est.std_error;
    r.extra["c2"] = c2;
    r.extra["sigmas_from_half"] = est.std_error > 0.0 ? (est.mean - 0.5) / est.std_error : 0.0;
    return r;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reward centroids, IRL estimators and constrained imitation planning on tabular MDPs"};
    app.require_subcommand(1);
    app.fallthrough();
    std::size_t workers = 0;
    app.add_option("--workers", workers, "Worker threads for Monte Carlo checks (0 = all cores)");

    // centroid
    auto* c_centroid = app.add_subcommand("centroid", "Reward centroid of an expert policy");
    std::string model = "opt", policy_path, support_path, mdp_path, out;
    double pi_min = kDefaultPiMinPrime;
    c_centroid->add_option("--model", model, "opt, mce or birl")->check(CLI::IsMember({"opt", "mce", "birl"}));
    c_centroid->add_option("--policy", policy_path, "Expert policy JSON")->required();
    c_centroid->add_option("--support", support_path, "Support JSON {num_states, states}");
    c_centroid->add_option("--mdp", mdp_path, "MDP JSON, used to compute the support when none is given");
    c_centroid->add_option("--pi-min", pi_min, "Floor for MCE/BIRL log-probabilities off the support");
    c_centroid->add_option("--out", out, "Output file (default stdout)");

    // estimate
    auto* c_estimate = app.add_subcommand("estimate", "Estimate a reward from trajectories");
    std::string traj_path, counting = "first_visit";
    std::size_t num_states = 0, num_actions = 0;
    c_estimate->add_option("--model", model)->check(CLI::IsMember({"opt", "mce", "birl"}));
    c_estimate->add_option("--trajectories", traj_path, "JSON-lines trajectory file")->required();
    c_estimate->add_option("--mdp", mdp_path, "MDP JSON providing the state and action counts");
    c_estimate->add_option("--num-states", num_states);
    c_estimate->add_option("--num-actions", num_actions);
    c_estimate->add_option("--pi-min", pi_min);
    c_estimate->add_option("--counting", counting)->check(CLI::IsMember({"first_visit", "all"}));
    c_estimate->add_option("--out", out);

    // simulate
    auto* c_simulate = app.add_subcommand("simulate", "Sample expert trajectories");
    std::size_t n_traj = 1000, horizon = 0;
    std::uint64_t seed = 1;
    c_simulate->add_option("--mdp", mdp_path)->required();
    c_simulate->add_option("--policy", policy_path)->required();
    c_simulate->add_option("--n", n_traj, "Number of trajectories");
    c_simulate->add_option("--horizon", horizon, "Trajectory length (default: number of states)");
    c_simulate->add_option("--seed", seed);
    c_simulate->add_option("--out", out);

    // plan
    auto* c_plan = app.add_subcommand("plan", "Constrained planning via the occupancy LP");
    std::string reward_path, constraint_path, convention = "discounted";
    c_plan->add_option("--mdp", mdp_path)->required();
    c_plan->add_option("--reward", reward_path)->required();
    c_plan->add_option("--constraint", constraint_path, "ConstraintSpec JSON");
    c_plan->add_option("--budget-convention", convention)->check(CLI::IsMember({"discounted", "occupancy"}));
    c_plan->add_option("--out", out);

    // mimic
    auto* c_mimic = app.add_subcommand("mimic", "Occupancy-matching policy in a target MDP");
    std::string target_path;
    c_mimic->add_option("--mdp", mdp_path, "Source MDP")->required();
    c_mimic->add_option("--target", target_path, "Target MDP")->required();
    c_mimic->add_option("--policy", policy_path)->required();
    c_mimic->add_option("--constraint", constraint_path);
    c_mimic->add_option("--budget-convention", convention)->check(CLI::IsMember({"discounted", "occupancy"}));
    c_mimic->add_option("--out", out);

    // geometry
    auto* c_geometry = app.add_subcommand("geometry", "Monte Carlo checks of reward-set geometry");
    std::string check;
    std::uint64_t n_samples = 0;
    double c2 = 1.0;
    // prop1/prop2/prop4/thm1 are accepted as short aliases.
    const std::map<std::string, std::string> check_names = {
        {"hypercube", "hypercube"}, {"prop1", "hypercube"},     {"segment", "segment"},
        {"prop2", "segment"},       {"volumes", "volumes"},     {"prop4", "volumes"},
        {"opt-centroid", "opt-centroid"}, {"thm1", "opt-centroid"}, {"manifold", "manifold"},
        {"manifold-birl", "manifold-birl"}, {"prior", "prior"}, {"bias-ratio", "bias-ratio"}};
    c_geometry->add_option("--check", check)->required()->transform(CLI::CheckedTransformer(check_names));
    c_geometry->add_option("--n", n_samples, "Number of samples");
    c_geometry->add_option("--seed", seed);
    c_geometry->add_option("--c2", c2, "Advantage bound for bias-ratio");
    c_geometry->add_option("--out", out);

    // gridworld
    auto* c_grid = app.add_subcommand("gridworld", "Build a gridworld MDP or run a scenario");
    std::string spec_path, config_path;
    c_grid->add_option("--spec", spec_path, "GridworldSpec JSON; writes {mdp, constraint}");
    c_grid->add_option("--config", config_path, "Scenario config JSON; runs the pipeline");
    c_grid->add_option("--out", out, "Output file (--spec) or directory (--config)");

    // render
    auto* c_render = app.add_subcommand("render", "Render a policy and/or occupancy as SVG");
    std::string occupancy_path;
    c_render->add_option("--spec", spec_path)->required();
    c_render->add_option("--policy", policy_path);
    c_render->add_option("--occupancy", occupancy_path, "Occupancy JSON {values}");
    c_render->add_option("--out", out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    worker_override() = workers;

    try {
        if (c_centroid->parsed()) {
            const PolicyTable expert = policy_from_json(read_json_file(policy_path));
            StateSet support;
            if (!support_path.empty()) support = state_set_from_json(read_json_file(support_path));
            else if (!mdp_path.empty()) support = reachable_support(mdp_from_json(read_json_file(mdp_path)), expert);
            else support = StateSet::all(expert.num_states());
            const BehaviorModel bm = parse_model(model, 1.0);
            RewardTable r;
            if (bm.kind() != ModelKind::Opt && !support.is_full()) r = clipped_log_reward(bm.kind(), expert, support, pi_min);
            else r = centroid({expert, support, bm});
            emit(to_json(r), out);
        } else if (c_estimate->parsed()) {
            if (!mdp_path.empty()) {
                const TabularMdp m = mdp_from_json(read_json_file(mdp_path));
                num_states = m.num_states();
                num_actions = m.num_actions();
            }
            if (num_states == 0 || num_actions == 0) throw DomainError("estimate: give --mdp or --num-states and --num-actions");
            std::ifstream in(traj_path);
            if (!in) throw DomainError("cannot open " + traj_path);
            const TrajectoryDataset data = trajectories_from_jsonl(in);
            const CountingMode mode = counting == "all" ? CountingMode::AllOccurrences : CountingMode::FirstVisit;
            RewardTable r;
            if (model == "opt") r = estimate_opt(data, num_states, num_actions);
            else if (model == "mce") r = estimate_mce(data, num_states, num_actions, pi_min, mode);
            else r = estimate_birl(data, num_states, num_actions, pi_min, mode);
            emit(to_json(r), out);
        } else if (c_simulate->parsed()) {
            const TabularMdp m = mdp_from_json(read_json_file(mdp_path));
            const PolicyTable expert = policy_from_json(read_json_file(policy_path));
            const TrajectoryDataset data = simulate_expert(m, expert, n_traj, horizon ? horizon : m.num_states(), seed);
            const std::string text = trajectories_to_jsonl(data);
            if (out.empty() || out == "-") std::cout << text;
            else write_text_file(out, text);
        } else if (c_plan->parsed()) {
            const TabularMdp m = mdp_from_json(read_json_file(mdp_path));
            const RewardTable r = reward_from_json(read_json_file(reward_path));
            const ConstrainedPlan plan = plan_constrained(m, r, load_constraint(constraint_path), parse_convention(convention));
            emit({{"policy", to_json(plan.policy)}, {"occupancy", to_json(plan.occupancy)}, {"value", plan.value}}, out);
        } else if (c_mimic->parsed()) {
            const TabularMdp src = mdp_from_json(read_json_file(mdp_path));
            const TabularMdp tgt = mdp_from_json(read_json_file(target_path));
            const PolicyTable expert = policy_from_json(read_json_file(policy_path));
            const MimicResult res = mimic_policy(src, expert, tgt, load_constraint(constraint_path), parse_convention(convention));
            emit({{"policy", to_json(res.policy)}, {"occupancy", to_json(res.occupancy)}, {"l1_distance", res.l1_distance}}, out);
        } else if (c_geometry->parsed()) {
            auto n_or = [&](std::uint64_t fallback) { return n_samples ? n_samples : fallback; };
            CheckReport r;
            if (check == "hypercube") r = check_hypercube_bias(n_or(2'000'000), seed);
            else if (check == "segment") r = check_segment();
            else if (check == "volumes") r = check_volumes(n_or(10'000'000), seed);
            else if (check == "opt-centroid") r = check_opt_centroid(n_or(10'000'000), seed);
            else if (check == "manifold") r = check_manifold(n_or(100'000), seed, "mce");
            else if (check == "manifold-birl") r = check_manifold(n_or(100'000), seed, "birl");
            else if (check == "prior") r = check_prior(n_or(5'000'000), seed);
            else r = check_bias_ratio(n_or(1'000'000), seed, c2);
            Json j = r.to_json();
            j["check"] = check;
            emit(j, out);
            return r.pass ? 0 : 1;
        } else if (c_grid->parsed()) {
            if (spec_path.empty() == config_path.empty()) throw DomainError("gridworld: give exactly one of --spec and --config");
            if (!spec_path.empty()) {
                const GridworldSpec spec = gridworld_spec_from_json(read_json_file(spec_path), fs::path(spec_path).parent_path());
                const GridworldInstance g = build_gridworld(spec);
                emit({{"mdp", to_json(g.mdp)}, {"constraint", to_json(g.constraint)}}, out);
            } else {
                const ScenarioReport rep = run_scenario(config_path, out.empty() ? fs::path(".") : fs::path(out));
                Json j = {{"name", rep.name}, {"value", rep.value}, {"invariants_hold", rep.invariants_hold()}};
                Json files = Json::array();
                for (const auto& p : rep.svg_paths) files.push_back(p.string());
                j["svg"] = files;
                std::cout << j.dump(2) << '\n';
                return rep.invariants_hold() ? 0 : 1;
            }
        } else if (c_render->parsed()) {
            const GridworldSpec spec = gridworld_spec_from_json(read_json_file(spec_path), fs::path(spec_path).parent_path());
            std::optional<PolicyTable> pi;
            std::optional<OccupancyMeasure> d;
            if (!policy_path.empty()) pi = policy_from_json(read_json_file(policy_path));
            if (!occupancy_path.empty()) {
                const Json j = read_json_file(occupancy_path);
                d = OccupancyMeasure(detail::matrix_from_json(j.at("values"), "occupancy"));
            }
            render_grid_svg(spec, {d ? &*d : nullptr, pi ? &*pi : nullptr, nullptr}, out);
            std::cout << out << '\n';
        }
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
