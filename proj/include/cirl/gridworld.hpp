#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cirl/json_io.hpp"
#include "cirl/mdp.hpp"
#include "cirl/planning.hpp"

namespace cirl {

struct Cell {
    std::size_t x = 0;
    std::size_t y = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Actions of the gridworld, in table order.
enum GridAction : std::size_t { kLeft = 0, kRight = 1, kUp = 2, kDown = 3, kStay = 4 };
inline constexpr std::size_t kGridActions = 5;

struct GridworldSpec {
    std::size_t width = 10;
    std::size_t height = 10;
    Cell initial_cell{};
    double gamma = 0.9;
    bool reversed = false;
    std::vector<Cell> blocked_cells;
    std::optional<std::filesystem::path> expert_policy_file;

    std::size_t num_states() const noexcept { return width * height; }
    std::size_t state(Cell c) const noexcept { return c.y * width + c.x; }
    Cell cell(std::size_t s) const noexcept { return {s % width, s / width}; }

    void validate() const {
        if (width == 0 || height == 0) throw DomainError("gridworld: width and height must be positive");
        auto check = [&](Cell c, const char* what) {
            if (c.x >= width || c.y >= height) throw DomainError(std::string("gridworld: ") + what + " out of range");
        };
        check(initial_cell, "initial cell");
        for (const auto& c : blocked_cells) {
            check(c, "blocked cell");
            if (c == initial_cell) throw DomainError("gridworld: the initial cell cannot be blocked");
        }
        if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("gridworld: gamma must lie in [0,1)");
    }
};

struct GridworldInstance {
    TabularMdp mdp;
    ConstraintSpec constraint;  ///< cost 1 on blocked cells, budget 0
};

/// Deterministic moves; off-grid moves stay in place. Reversal swaps ←/→ and ↑/↓.
inline GridworldInstance build_gridworld(const GridworldSpec& spec) {
    spec.validate();
    const std::size_t W = spec.width, H = spec.height, S = W * H, A = kGridActions;
    std::vector<double> p(S * A * S, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        const Cell c = spec.cell(s);
        for (std::size_t a = 0; a < A; ++a) {
            std::size_t eff = a;
            if (spec.reversed && a != kStay) eff = a ^ 1;  // 0↔1, 2↔3
            Cell n = c;
            switch (eff) {
                case kLeft: if (c.x > 0) --n.x; break;
                case kRight: if (c.x + 1 < W) ++n.x; break;
                case kUp: if (c.y > 0) --n.y; break;
                case kDown: if (c.y + 1 < H) ++n.y; break;
                default: break;
            }
            p[(s * A + a) * S + spec.state(n)] = 1.0;
        }
    }
    Matrix cm(S, A);
    for (const auto& b : spec.blocked_cells)
        for (std::size_t a = 0; a < A; ++a) cm(spec.state(b), a) = 1.0;
    return {TabularMdp(S, A, spec.state(spec.initial_cell), std::move(p), spec.gamma),
            ConstraintSpec(RewardTable(std::move(cm)), 0.0)};
}

namespace detail {

inline Cell cell_from_json(const Json& j, const char* what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_unsigned() || !j[1].is_number_unsigned())
        throw DomainError(std::string("gridworld: ") + what + " must be [x, y] with nonnegative integers");
    return {j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

}  // namespace detail

/// Reads a spec; `expert_policy_file` is resolved against `base_dir`.
inline GridworldSpec gridworld_spec_from_json(const Json& j, const std::filesystem::path& base_dir = {}) {
    if (!j.is_object()) throw DomainError("gridworld: spec must be an object");
    GridworldSpec spec;
    if (j.contains("width")) spec.width = detail::json_get<std::size_t>(j, "width", "gridworld");
    if (j.contains("height")) spec.height = detail::json_get<std::size_t>(j, "height", "gridworld");
    if (j.contains("initial_cell")) spec.initial_cell = detail::cell_from_json(j.at("initial_cell"), "initial_cell");
    if (j.contains("gamma")) spec.gamma = detail::json_get<double>(j, "gamma", "gridworld");
    if (j.contains("reversed")) spec.reversed = detail::json_get<bool>(j, "reversed", "gridworld");
    if (j.contains("blocked_cells")) {
        const Json& b = j.at("blocked_cells");
        if (!b.is_array()) throw DomainError("gridworld: blocked_cells must be an array");
        for (const auto& c : b) spec.blocked_cells.push_back(detail::cell_from_json(c, "blocked cell"));
    }
    if (j.contains("expert_policy_file") && !j.at("expert_policy_file").is_null())
        spec.expert_policy_file = base_dir / detail::json_get<std::string>(j, "expert_policy_file", "gridworld");
    spec.validate();
    return spec;
}

struct SvgLayers {
    const OccupancyMeasure* occupancy = nullptr;
    const PolicyTable* policy = nullptr;
    const StateSet* policy_mask = nullptr;  ///< cells outside are left blank
};

namespace detail {

inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    std::string s(buf);
    if (s == "-0.00") s = "0.00";
    return s;
}

inline std::string blue_shade(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const std::array<int, 3> lo = {255, 255, 255}, hi = {8, 48, 107};
    char buf[8];
    int c[3];
    for (int k = 0; k < 3; ++k) c[k] = static_cast<int>(std::lround(lo[k] + (hi[k] - lo[k]) * t));
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
    return buf;
}

}  // namespace detail

inline constexpr double kSvgCell = 40.0;
inline constexpr double kGlyphThreshold = 1e-6;

/**
 * Standalone SVG of a grid. Cell fill darkens with state occupancy, arrows
 * are scaled by action probability (a circle for staying), the initial cell
 * has a red border and blocked cells are brown.
 */
inline std::string grid_svg(const GridworldSpec& spec, const SvgLayers& layers) {
    if (!layers.occupancy && !layers.policy) throw DomainError("render_grid_svg: nothing to draw");
    const std::size_t S = spec.num_states();
    if (layers.occupancy && (layers.occupancy->num_states() != S || layers.occupancy->num_actions() != kGridActions))
        throw DomainError("render_grid_svg: occupancy does not match the grid");
    if (layers.policy && (layers.policy->num_states() != S || layers.policy->num_actions() != kGridActions))
        throw DomainError("render_grid_svg: policy does not match the grid");
    using detail::fmt;
    const double cs = kSvgCell, pad = 2.0;
    const double W = static_cast<double>(spec.width) * cs + 2 * pad, H = static_cast<double>(spec.height) * cs + 2 * pad;
    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + fmt(W) + "\" height=\"" + fmt(H) +
           "\" viewBox=\"0 0 " + fmt(W) + " " + fmt(H) + "\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"" + fmt(W) + "\" height=\"" + fmt(H) + "\" fill=\"#ffffff\"/>\n";

    double peak = 0.0;
    std::vector<double> mass(S, 0.0);
    if (layers.occupancy) {
        mass = layers.occupancy->state_marginal();
        peak = *std::max_element(mass.begin(), mass.end());
    }
    std::vector<char> blocked(S, 0);
    for (const auto& b : spec.blocked_cells) blocked[spec.state(b)] = 1;

    out += "<g stroke=\"#999999\" stroke-width=\"1\">\n";
    for (std::size_t s = 0; s < S; ++s) {
        const Cell c = spec.cell(s);
        const double x = pad + static_cast<double>(c.x) * cs, y = pad + static_cast<double>(c.y) * cs;
        std::string fill = "#ffffff";
        if (blocked[s]) fill = "#8b5a2b";
        else if (peak > 0.0) fill = detail::blue_shade(mass[s] / peak);
        out += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(cs) + "\" height=\"" + fmt(cs) +
               "\" fill=\"" + fill + "\"/>\n";
    }
    out += "</g>\n";

    if (layers.policy) {
        out += "<g stroke=\"#222222\" fill=\"#222222\" stroke-width=\"2\">\n";
        for (std::size_t s = 0; s < S; ++s) {
            if (layers.policy_mask && !layers.policy_mask->contains(s)) continue;
            const Cell c = spec.cell(s);
            const double cx = pad + (static_cast<double>(c.x) + 0.5) * cs;
            const double cy = pad + (static_cast<double>(c.y) + 0.5) * cs;
            for (std::size_t a = 0; a < kGridActions; ++a) {
                const double p = (*layers.policy)(s, a);
                if (p < kGlyphThreshold) continue;
                if (a == kStay) {
                    out += "<circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) + "\" r=\"" + fmt(0.16 * cs * std::sqrt(p)) +
                           "\" stroke=\"none\"/>\n";
                    continue;
                }
                const double dx = a == kLeft ? -1.0 : a == kRight ? 1.0 : 0.0;
                const double dy = a == kUp ? -1.0 : a == kDown ? 1.0 : 0.0;
                const double len = 0.42 * cs * p, head = 0.14 * cs * std::sqrt(p);
                const double tx = cx + dx * len, ty = cy + dy * len;
                const double bx = tx - dx * head, by = ty - dy * head;
                out += "<line x1=\"" + fmt(cx) + "\" y1=\"" + fmt(cy) + "\" x2=\"" + fmt(bx) + "\" y2=\"" + fmt(by) + "\"/>\n";
                const double px = -dy * head * 0.6, py = dx * head * 0.6;
                out += "<polygon stroke=\"none\" points=\"" + fmt(tx) + "," + fmt(ty) + " " + fmt(bx + px) + "," +
                       fmt(by + py) + " " + fmt(bx - px) + "," + fmt(by - py) + "\"/>\n";
            }
        }
        out += "</g>\n";
    }

    const Cell c0 = spec.initial_cell;
    out += "<rect x=\"" + fmt(pad + static_cast<double>(c0.x) * cs + 1.5) + "\" y=\"" +
           fmt(pad + static_cast<double>(c0.y) * cs + 1.5) + "\" width=\"" + fmt(cs - 3.0) + "\" height=\"" +
           fmt(cs - 3.0) + "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"3\"/>\n";
    out += "</svg>\n";
    return out;
}

inline std::filesystem::path render_grid_svg(const GridworldSpec& spec, const SvgLayers& layers,
                                             const std::filesystem::path& out) {
    write_text_file(out, grid_svg(spec, layers));
    return out;
}

}  // namespace cirl
