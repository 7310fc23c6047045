// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Targets are computed here, independently of the
// library routines under test.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cirl/cirl.hpp"
#include "lp_oracle.hpp"
#include "test_instances.hpp"

using namespace cirl;
using cirl::testing::TestRng;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// 1 ------------------------------------------------------------------------------------
Outcome hypercube_bias() {
    // Volume 8/3 of the staying policy's region inside a box of volume 2⁴.
    const double target = (8.0 / 3.0) / 16.0;
    const auto est = mc_volume_fraction(escape_chain_mdp(0.999), PolicyTable::from_actions(std::vector<std::size_t>{0, 0}, 2),
                                        BehaviorModel::opt(), {-1.0, 1.0}, 2'000'000, 7);
    return {std::abs(est.mean - target) <= 0.01,
            fmt("est=%.5f se=%.1e target=%.5f |d|=%.5f <= 0.01", est.mean, est.std_error, target, std::abs(est.mean - target))};
}

// 2 ------------------------------------------------------------------------------------
Outcome segment_lengths() {
    const auto m = single_state_mdp(0.9);
    const double half = segment_volume_1d(m, PolicyTable::uniform(1, 2), BehaviorModel::mce(1.0), 1.0);
    const double third =
        segment_volume_1d(m, PolicyTable(Matrix{{1.0 / 3.0, 2.0 / 3.0}}), BehaviorModel::mce(1.0), 1.0);
    const double t2 = 2.0 - std::log(2.0);
    return {std::abs(half - 2.0) <= 1e-12 && std::abs(third - t2) <= 1e-12,
            fmt("len(1/2)=%.15f target 2; len(1/3)=%.15f target %.15f", half, third, t2)};
}

// 3 ------------------------------------------------------------------------------------
Outcome bounded_set_volumes() {
    const std::size_t S = 2, A = 2;
    const double c1 = 1.0, c2 = 1.0, gamma = 0.5;
    const auto m = random_mdp(S, A, gamma, 11);
    const BoundedSetParams params(c1, c2, BehaviorModel::opt());
    const double up = (1.0 + gamma) / (1.0 - gamma) * c1;
    const double vol = std::pow(2.0 * up + c2, static_cast<double>(S * A));
    const double analytic = std::pow(2.0, S) * std::pow(c1, S) * std::pow(c2, S * (A - 1));
    const auto est = mc_policy_volumes(m, {-up - c2, up}, 10'000'000, 12, params);
    bool pass = est.size() == 4;
    std::string detail = fmt("analytic=%.3f vols:", analytic);
    for (const auto& e : est) {
        const double v = e.mean * vol, se = e.std_error * vol;
        pass = pass && std::abs(v - analytic) <= 3 * se;
        detail += fmt(" %.4f(%.1fσ)", v, (v - analytic) / se);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i)
        for (std::size_t j = i + 1; j < est.size(); ++j) {
            const double z = std::abs(est[i].mean - est[j].mean) / std::hypot(est[i].std_error, est[j].std_error);
            worst = std::max(worst, z);
        }
    pass = pass && worst <= 3.0;
    return {pass, detail + fmt("; worst pairwise %.2fσ", worst)};
}

// 4 ------------------------------------------------------------------------------------
Outcome opt_centroid_by_sampling() {
    const auto base = random_mdp(2, 2, 0.5, 11);
    std::vector<double> p(base.transitions().begin(), base.transitions().end());
    p[0] = 1.0;  // a₁ keeps s₁ in place, so the support is {s₁}
    p[1] = 0.0;
    const TabularMdp m(2, 2, 0, std::move(p), 0.5);
    const auto expert = PolicyTable::from_actions(std::vector<std::size_t>{0, 0}, 2);
    const StateSet support(2, std::vector<std::size_t>{0});
    const auto est = mc_centroid_opt(m, expert, support, BoundedSetParams(1.0, 1.0, BehaviorModel::opt()), 10'000'000, 12);
    if (est.n_accepted < 2) return {false, "no accepted samples"};
    // Closed form: indicator of the expert action on the support, 1/A elsewhere.
    const RewardTable closed(Matrix{{1.0, 0.0}, {0.5, 0.5}});
    const auto fit = affine_fit(RewardTable(est.mean), closed);
    const double limit = std::max(0.02, 4 * est.max_std_error());
    return {fit.alpha > 0.0 && fit.residual_sup <= limit,
            fmt("accepted=%llu alpha=%.4f residual=%.5f <= %.5f", static_cast<unsigned long long>(est.n_accepted), fit.alpha,
                fit.residual_sup, limit)};
}

// 5 ------------------------------------------------------------------------------------
Outcome manifold_centroids() {
    const auto m = random_mdp(3, 2, 0.9, 5);
    TestRng rng(5);
    const auto pi = cirl::testing::random_positive_policy(rng, 3, 2, 0.05);
    bool pass = true;
    std::string detail;
    for (int kind = 0; kind < 2; ++kind) {
        Matrix eta(3, 2);
        for (std::size_t s = 0; s < 3; ++s) {
            const double mx = std::max(pi(s, 0), pi(s, 1));
            for (std::size_t a = 0; a < 2; ++a) eta(s, a) = std::log(kind == 0 ? pi(s, a) : pi(s, a) / mx);
        }
        const auto est = mc_centroid_manifold(m, RewardTable(eta), 1.0, 100'000, 6 + kind);
        double worst = 0.0;
        for (std::size_t k = 0; k < 6; ++k)
            worst = std::max(worst, std::abs(est.mean.flat()[k] - eta.flat()[k]) / est.std_error.flat()[k]);
        pass = pass && worst <= 4.0;
        detail += fmt("%s worst %.2fσ ", kind == 0 ? "mce" : "birl", worst);
    }
    return {pass, detail + "(<= 4σ)"};
}

// 6 ------------------------------------------------------------------------------------
Outcome prior_centroid() {
    const auto m = random_mdp(2, 2, 0.5, 11);
    const auto est = mc_prior_centroid_opt(m, BoundedSetParams(1.0, 1.0, BehaviorModel::opt()), 5'000'000, 12);
    const Matrix& mean = est.mean;
    double avg = 0.0;
    for (double x : mean.flat()) avg += x;
    avg /= static_cast<double>(mean.flat().size());
    double residual = 0.0;
    for (double x : mean.flat()) residual = std::max(residual, std::abs(x - avg));
    const double limit = 4 * est.max_std_error();
    return {residual <= limit, fmt("accepted=%llu constant residual=%.5f <= %.5f",
                                   static_cast<unsigned long long>(est.n_accepted), residual, limit)};
}

// 7 ------------------------------------------------------------------------------------
Outcome new_environment_ratio() {
    bool pass = true;
    std::string detail;
    for (double c2 : {1.0, 3.0}) {
        const double target = c2 >= 2.0 ? 1.0 / (3.0 * c2) : c2 * c2 / 24.0 - c2 / 4.0 + 0.5;
        const auto est = new_env_bias_ratio(c2, 1'000'000, 3);
        const double z = (est.mean - target) / est.std_error;
        const double z_half = std::abs(est.mean - 0.5) / est.std_error;
        pass = pass && std::abs(z) <= 3.0 && z_half >= 5.0;
        detail += fmt("C2=%g est=%.5f target=%.5f (%.2fσ, %.0fσ from 1/2) ", c2, est.mean, target, z, z_half);
    }
    return {pass, detail};
}

// 8 ------------------------------------------------------------------------------------
Outcome opt_sample_complexity() {
    TestRng rng(8);
    const std::size_t S = 5, A = 2;
    const auto m = cirl::testing::random_kernel_mdp(rng, S, A, 0.9, 0.5);
    const auto expert = PolicyTable::from_actions(cirl::testing::random_actions(rng, S, A), A);
    const auto support = reachable_support(m, expert);
    SampleBoundParams p;
    p.num_states = S;
    p.num_actions = A;
    p.support_size = support.size();
    p.delta = 0.1;
    p.p_min = p_min_h(m, expert, S);
    p.horizon = S;
    const auto n = sample_bound(ModelKind::Opt, p);
    Matrix truth(S, A);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            truth(s, a) = support.contains(s) ? (expert.action(s) == a ? 1.0 : 0.0) : 1.0 / static_cast<double>(A);
    int hits = 0;
    for (int trial = 0; trial < 200; ++trial)
        hits += estimate_opt(simulate_expert(m, expert, n, S, 80'000 + trial), S, A).values() == truth;
    return {hits >= 170, fmt("|supp|=%zu p_min=%.4f N=%llu exact recovery %d/200 (>= 170)", support.size(), p.p_min,
                             static_cast<unsigned long long>(n), hits)};
}

// 9 ------------------------------------------------------------------------------------
Outcome soft_sample_complexity() {
    TestRng rng(9);
    const std::size_t S = 5, A = 2;
    const auto m = cirl::testing::random_kernel_mdp(rng, S, A, 0.9);
    const auto expert = cirl::testing::random_positive_policy(rng, S, A, 0.1);
    double pi_min = 1.0;
    for (double x : expert.probs().flat()) pi_min = std::min(pi_min, x);
    SampleBoundParams p;
    p.num_states = S;
    p.num_actions = A;
    p.support_size = S;
    p.delta = 0.1;
    p.epsilon = 0.5;
    p.pi_min_prime = 0.05;
    p.p_min = p_min_h(m, expert, S);
    p.horizon = S;
    bool pass = pi_min >= p.pi_min_prime;
    std::string detail = fmt("pi_min=%.3f p_min=%.4f", pi_min, p.p_min);
    for (ModelKind kind : {ModelKind::Mce, ModelKind::Birl}) {
        const auto n = sample_bound(kind, p);
        Matrix truth(S, A);
        for (std::size_t s = 0; s < S; ++s) {
            const double mx = std::max(expert(s, 0), expert(s, 1));
            for (std::size_t a = 0; a < A; ++a)
                truth(s, a) = std::log(kind == ModelKind::Mce ? expert(s, a) : expert(s, a) / mx);
        }
        int hits = 0;
        for (int trial = 0; trial < 200; ++trial) {
            const auto data = simulate_expert(m, expert, n, S, 90'000 + 1000 * static_cast<int>(kind) + trial);
            const auto est = kind == ModelKind::Mce ? estimate_mce(data, S, A, p.pi_min_prime)
                                                    : estimate_birl(data, S, A, p.pi_min_prime);
            hits += sup_distance(est.values(), truth) <= p.epsilon;
        }
        pass = pass && hits >= 170;
        detail += fmt("; %s N=%llu within eps %d/200", kind == ModelKind::Mce ? "mce" : "birl",
                      static_cast<unsigned long long>(n), hits);
    }
    return {pass, detail + " (>= 170)"};
}

// 10 -----------------------------------------------------------------------------------
Outcome centroid_imitation() {
    TestRng rng(10);
    double worst = 0.0;
    for (int kind = 0; kind < 3; ++kind)
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t S = 2 + rng.index(5), A = 2 + rng.index(3);
            const auto m = cirl::testing::random_kernel_mdp(rng, S, A, rng.uniform(0.1, 0.95), 0.5, rng.index(S));
            const auto v = cirl::testing::random_vector(rng, S, -2.0, 2.0);
            RewardTable r_e, c;
            if (kind == 0) {
                const auto acts = cirl::testing::random_actions(rng, S, A);
                const auto pi = PolicyTable::from_actions(acts, A);
                Matrix gaps(S, A);
                for (std::size_t s = 0; s < S; ++s)
                    for (std::size_t a = 0; a < A; ++a)
                        if (a != acts[s]) gaps(s, a) = -rng.uniform(0.01, 1.0);
                r_e = t_operator(m, pi, v, AdvantageGap(gaps, pi));
                c = centroid({pi, reachable_support(m, pi), BehaviorModel::opt()});
            } else {
                const auto pi = cirl::testing::random_positive_policy(rng, S, A);
                const double coef = rng.uniform(0.3, 2.0);
                const auto eta = kind == 1 ? eta_mce(pi, coef) : eta_birl(pi, coef);
                r_e = u_operator(m, eta, v);
                c = centroid({pi, StateSet::all(S), kind == 1 ? BehaviorModel::mce(coef) : BehaviorModel::birl(coef)});
            }
            const PolicyTable plan = greedy_policy(optimal_values_exact(m, c).q);
            const double best = optimal_values_exact(m, r_e).v[m.initial_state()];
            worst = std::max(worst, best - policy_evaluation(m, plan, r_e).v[m.initial_state()]);
        }
    return {worst <= 1e-7, fmt("600 pairs (200 per model), worst regret %.2e <= 1e-7", worst)};
}

// 11 -----------------------------------------------------------------------------------
Outcome perturbation_bound() {
    TestRng rng(11);
    int violations = 0;
    double worst = -1e300;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t S = 1 + rng.index(5), A = 2 + rng.index(2);
        const auto m = cirl::testing::random_kernel_mdp(rng, S, A, rng.uniform(0.0, 0.95), 0.4);
        const auto r = cirl::testing::random_reward(rng, S, A);
        Matrix noisy = r.values();
        const double scale = rng.uniform(0.0, 0.5);
        for (double& x : noisy.flat()) x += rng.uniform(-scale, scale);
        std::optional<ConstraintSpec> c;
        if (trial % 2) {
            // Budget between the cheapest achievable cost and the trivial cap, so it is feasible and often binding.
            const auto cost = cirl::testing::random_reward(rng, S, A, 0.0, 1.0);
            Matrix neg = cost.values();
            for (double& x : neg.flat()) x = -x;
            const double cheapest = -value_iteration(m, RewardTable(neg)).v[m.initial_state()];
            c.emplace(cost, cheapest + rng.uniform(1e-6, 0.5) * (1.0 / (1.0 - m.discount()) - cheapest));
        }
        const auto b = suboptimality_bound(m, RewardTable(noisy), r, c);
        const double rhs = sup_distance(noisy, r.values()) / (1.0 - m.discount());
        worst = std::max(worst, b.lhs - rhs);
        violations += b.lhs > rhs + 1e-9;
    }
    return {violations == 0, fmt("500 pairs, max(lhs - rhs) = %.2e, violations %d", worst, violations)};
}

// 12 -----------------------------------------------------------------------------------
Outcome lp_engine() {
    TestRng rng(12);
    int mismatches = 0, optimal = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto lp = cirl::testing::random_bounded_lp(rng);
        const auto oracle = cirl::testing::enumerate_vertices(lp);
        const auto sol = solve(lp);
        if (!oracle) {
            mismatches += sol.status != LpStatus::Infeasible;
            continue;
        }
        ++optimal;
        if (sol.status != LpStatus::Optimal) {
            ++mismatches;
            continue;
        }
        worst = std::max(worst, std::abs(sol.objective_value - oracle->objective));
    }
    double worst_vi = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t S = 1 + rng.index(6), A = 1 + rng.index(4);
        const auto m = cirl::testing::random_kernel_mdp(rng, S, A, rng.uniform(0.0, 0.95), 0.4, rng.index(S));
        const auto r = cirl::testing::random_reward(rng, S, A);
        const auto cost = cirl::testing::random_reward(rng, S, A, 0.0, 1.0);
        const ConstraintSpec slack(cost, cost.values().max_abs() / (1.0 - m.discount()));
        const double lp_value = plan_constrained(m, r, slack).value;
        worst_vi = std::max(worst_vi, std::abs(lp_value - value_iteration(m, r).v[m.initial_state()]));
    }
    return {mismatches == 0 && worst <= 1e-8 && worst_vi <= 1e-6,
            fmt("200 LPs (%d optimal): status mismatches %d, worst |obj gap| %.1e <= 1e-8; "
                "100 MDPs: worst |LP - VI| %.1e <= 1e-6",
                optimal, mismatches, worst, worst_vi)};
}

// 13 -----------------------------------------------------------------------------------
Outcome figure_pipeline(const fs::path& source_dir, const fs::path& work_dir) {
    std::vector<fs::path> configs;
    for (const auto& e : fs::directory_iterator(source_dir / "scenarios"))
        if (e.path().extension() == ".json") configs.push_back(e.path());
    std::sort(configs.begin(), configs.end());
    const fs::path golden = source_dir / "tests" / "golden";
    std::vector<std::string> problems;
    std::size_t svgs = 0;
    for (const auto& cfg : configs) {
        std::vector<std::vector<fs::path>> produced;
        for (std::size_t workers : {std::size_t{1}, std::size_t{4}}) {
            worker_override() = workers;
            const fs::path out = work_dir / ("workers" + std::to_string(workers));
            const auto rep = run_scenario(cfg, out);
            if (!rep.invariants_hold())
                for (const auto& inv : rep.invariants)
                    if (!inv.pass) problems.push_back(rep.name + ": invariant " + inv.name + " failed");
            std::vector<fs::path> files = rep.svg_paths;
            files.push_back(out / (rep.name + "_report.json"));
            produced.push_back(files);
        }
        worker_override() = 0;
        for (std::size_t i = 0; i < produced[0].size(); ++i) {
            const auto& a = produced[0][i];
            if (i >= produced[1].size() || read_file(a) != read_file(produced[1][i]))
                problems.push_back(a.filename().string() + " differs across worker counts");
            if (a.extension() != ".svg") continue;
            ++svgs;
            const fs::path g = golden / a.filename();
            if (!fs::exists(g)) problems.push_back(a.filename().string() + ": no golden file");
            else if (read_file(g) != read_file(a)) problems.push_back(a.filename().string() + " differs from golden");
        }
    }
    std::string detail = fmt("%zu scenarios, %zu SVGs", configs.size(), svgs);
    for (std::size_t i = 0; i < problems.size() && i < 5; ++i) detail += "; " + problems[i];
    return {!configs.empty() && problems.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::string source_dir = ".", work_dir = "acceptance_out";
    app.add_option("--source-dir", source_dir, "Repository root");
    app.add_option("--work-dir", work_dir, "Scratch directory for scenario outputs");
    CLI11_PARSE(app, argc, argv);
    fs::create_directories(work_dir);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"hypercube bias on the escape chain", hypercube_bias},
        {"exact feasible-line lengths", segment_lengths},
        {"bounded-set volumes equal across policies", bounded_set_volumes},
        {"OPT centroid by rejection sampling", opt_centroid_by_sampling},
        {"MCE/BIRL centroids by manifold sampling", manifold_centroids},
        {"prior centroid is constant", prior_centroid},
        {"new-environment ratio", new_environment_ratio},
        {"OPT estimator sample bound", opt_sample_complexity},
        {"MCE/BIRL estimator sample bounds", soft_sample_complexity},
        {"centroid planning imitates the expert", centroid_imitation},
        {"reward perturbation bound", perturbation_bound},
        {"LP engine", lp_engine},
        {"figure pipeline", [&] { return figure_pipeline(source_dir, work_dir); }},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !o.pass;
        std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
