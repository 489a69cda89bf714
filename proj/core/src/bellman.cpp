#include "bellmanlab/bellman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "bellmanlab/function_family.hpp"
#include "bellmanlab/rng.hpp"

namespace bellmanlab {

namespace {

void for_each_node(std::size_t count, const std::function<void(std::size_t)>& body) {
    const unsigned hw = std::thread::hardware_concurrency();
    if (hw <= 1 || count < 64) {
        for (std::size_t j = 0; j < count; ++j) body(j);
        return;
    }
    // nodes are independent and write disjoint slots, so chunking is safe
    // and the result does not depend on the schedule
    const unsigned n_threads = std::min<unsigned>(hw, 8);
    std::vector<std::thread> pool;
    const std::size_t chunk = (count + n_threads - 1) / n_threads;
    for (unsigned t = 0; t < n_threads; ++t) {
        const std::size_t lo = t * chunk, hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            for (std::size_t j = lo; j < hi; ++j) body(j);
        });
    }
    for (auto& th : pool) th.join();
}

double nodemax_diff(const GridFunction& a, const GridFunction& b) {
    double m = 0.0;
    for (std::size_t j = 0; j < a.values().size(); ++j)
        m = std::max(m, std::abs(a.value_at(j) - b.value_at(j)));
    return m;
}

} // namespace

double bellman_value_at(const MdpSpec& spec, const GridFunction& q, const DomainPoint& p,
                        const SimConfig& cfg) {
    if (spec.mode == DynamicsMode::DiscreteDeterministic) {
        Vec next(spec.state_dim);
        spec.transition(p.s, p.action, next);
        return spec.running_reward(0.0, p.s, p.a) + spec.gamma * q.max_over_actions(0.0, next);
    }
    return mc_discounted_reward(spec, p.t, p.s, p.a, p.action, q, cfg).mean;
}

GridFunction bellman_apply(const MdpSpec& spec, const GridFunction& q, const SimConfig& cfg) {
    const GridPtr grid = q.domain_ptr();
    Vec out(grid->size());
    const CounterRng derive(cfg.seed);
    for_each_node(grid->size(), [&](std::size_t j) {
        const DomainPoint p = grid->point(j);
        if (spec.mode == DynamicsMode::DiscreteDeterministic) {
            out[j] = bellman_value_at(spec, q, p, cfg);
        } else {
            SimConfig node_cfg = cfg;
            node_cfg.seed = derive.derive(j); // fixed per node, not per sweep
            out[j] = mc_discounted_reward(spec, p.t, p.s, p.a, p.action, q, node_cfg).mean;
        }
    });
    return GridFunction(grid, std::move(out));
}

GridFunction residual_apply(const MdpSpec& spec, const GridFunction& q, const SimConfig& cfg) {
    GridFunction bq = bellman_apply(spec, q, cfg);
    Vec out(bq.values());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] -= q.value_at(j);
    return GridFunction(q.domain_ptr(), std::move(out));
}

IterationTrace value_iterate(const MdpSpec& spec, const GridFunction& q0, int k_max, double tol,
                             const SimConfig& cfg) {
    if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");

    const CounterRng derive(cfg.seed);
    IterationTrace trace;
    trace.tol = tol;
    trace.iterates.push_back(q0);
    trace.sup_norms.push_back(q0.sup_norm_nodes());
    trace.lipschitz.push_back(estimate_lipschitz(q0, 256, derive.derive(900)));

    for (int k = 0; k < k_max; ++k) {
        GridFunction next = bellman_apply(spec, trace.iterates.back(), cfg);
        const double d = nodemax_diff(next, trace.iterates.back());
        trace.sup_distances.push_back(d);
        if (trace.sup_distances.size() > 1) {
            const double prev = trace.sup_distances[trace.sup_distances.size() - 2];
            trace.ratios.push_back(prev > 0.0 ? d / prev : 0.0);
        }
        trace.sup_norms.push_back(next.sup_norm_nodes());
        trace.lipschitz.push_back(estimate_lipschitz(next, 256, derive.derive(901 + k)));
        trace.iterates.push_back(std::move(next));
        if (d <= tol) {
            trace.converged = true;
            break;
        }
    }
    return trace;
}

ContractionReport verify_contraction(const MdpSpec& spec, const GridPtr& grid, int n_pairs,
                                     const SimConfig& cfg, std::uint64_t seed, double tolerance) {
    if (n_pairs < 1) throw std::invalid_argument("n_pairs must be >= 1");

    FunctionFamily family;
    family.amplitude_cap = std::max(1.0, uniform_q_bound(spec));
    family.lipschitz_cap = 4.0 * family.amplitude_cap;
    family.curriculum_fraction = 0.0;
    family.seed = seed;
    const auto funcs = sample_target_family(family, grid, 2 * n_pairs);

    ContractionReport rep;
    rep.beta = discount_factor(spec);
    rep.tolerance = tolerance;
    rep.pairs_used = n_pairs;
    for (int i = 0; i < n_pairs; ++i) {
        const GridFunction& q1 = funcs[2 * i];
        const GridFunction& q2 = funcs[2 * i + 1];
        const double denom = nodemax_diff(q1, q2);
        if (denom < 1e-15) {
            rep.ratios.push_back(0.0);
            continue;
        }
        // identical cfg: common random numbers across the two applications
        const GridFunction b1 = bellman_apply(spec, q1, cfg);
        const GridFunction b2 = bellman_apply(spec, q2, cfg);
        rep.ratios.push_back(nodemax_diff(b1, b2) / denom);
    }
    rep.max_ratio = rep.ratios.empty() ? 0.0 : *std::max_element(rep.ratios.begin(), rep.ratios.end());
    rep.pass = rep.max_ratio <= rep.beta * (1.0 + tolerance) + 1e-9;
    return rep;
}

double RegularityBudget::envelope(int k) const {
    double geo;
    if (std::abs(carry - 1.0) < 1e-14) {
        geo = static_cast<double>(k);
    } else {
        geo = (1.0 - std::pow(carry, k)) / (1.0 - carry);
    }
    return additive * geo + std::pow(carry, k) * initial;
}

RegularityBudget regularity_budget(const MdpSpec& spec, double additive, double carry,
                                   double initial) {
    if (additive < 0.0 || carry < 0.0) throw std::invalid_argument("budget constants must be >= 0");
    RegularityBudget b;
    b.additive = additive;
    b.carry = carry;
    b.initial = initial;
    if (spec.mode == DynamicsMode::ContinuousSde) {
        b.n_max = static_cast<int>(std::ceil(spec.horizon / spec.hold_delta));
    } else {
        b.n_max = spec.n_stages; // 0 = open-ended stationary iteration
    }
    if (b.n_max > 0) {
        b.uniform_cap = b.envelope(b.n_max);
    } else if (carry < 1.0) {
        b.uniform_cap = additive / (1.0 - carry);
    } else {
        b.uniform_cap = std::numeric_limits<double>::infinity();
    }
    return b;
}

RegularityBudget analytic_budget(const MdpSpec& spec) {
    if (spec.mode != DynamicsMode::DiscreteDeterministic)
        throw std::invalid_argument("analytic budget constants exist only in discrete mode");
    RegularityBudget b =
        regularity_budget(spec, spec.bounds.lip_reward, spec.gamma * spec.bounds.lip_transition, 0.0);
    // the stationary iteration has no stage cutoff; report the open-ended cap
    b.n_max = 0;
    b.uniform_cap = b.carry < 1.0 ? b.additive / (1.0 - b.carry)
                                  : std::numeric_limits<double>::infinity();
    return b;
}

RegularityBudget estimate_budget(const MdpSpec& spec, const GridPtr& grid, int n_funcs,
                                 const SimConfig& cfg, std::uint64_t seed) {
    if (n_funcs < 2) throw std::invalid_argument("estimate_budget needs >= 2 functions");
    FunctionFamily family;
    family.amplitude_cap = std::max(1.0, uniform_q_bound(spec));
    family.lipschitz_cap = 6.0;
    family.curriculum_fraction = 0.0;
    family.seed = seed;
    const auto funcs = sample_target_family(family, grid, n_funcs);

    const CounterRng derive(seed);
    Vec lx, ly;
    for (int i = 0; i < n_funcs; ++i) {
        const double l_in = estimate_lipschitz(funcs[i], 256, derive.derive(10 + i));
        const GridFunction bq = bellman_apply(spec, funcs[i], cfg);
        const double l_out = estimate_lipschitz(bq, 256, derive.derive(500 + i));
        lx.push_back(l_in);
        ly.push_back(l_out);
    }
    // least squares fit l_out = a + b * l_in
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(lx.size());
    for (size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double det = n * sxx - sx * sx;
    double b = det > 1e-12 ? (n * sxy - sx * sy) / det : 0.0;
    double a = (sy - b * sx) / n;
    a = std::max(0.0, a);
    b = std::max(0.0, b);
    return regularity_budget(spec, a, b, 0.0);
}

RegularityReport verify_uniform_regularity(const MdpSpec& spec, const IterationTrace& trace,
                                           const RegularityBudget& budget, double value_bound,
                                           double tolerance) {
    if (trace.iterates.empty()) throw std::invalid_argument("empty trace");
    RegularityReport rep;
    rep.value_cap = value_bound;
    rep.lipschitz_cap = budget.uniform_cap;
    rep.uniform_ok = true;
    rep.envelope_ok = true;
    const double lip_slack = 1.02; // estimates are sampled, same factor as the audit

    for (std::size_t k = 0; k < trace.iterates.size(); ++k) {
        RegularityRow row;
        row.k = static_cast<int>(k);
        row.sup_norm = trace.sup_norms[k];
        row.lipschitz = trace.lipschitz[k];
        row.sup_cap = spec.mode == DynamicsMode::DiscreteDeterministic
                          ? uniform_q_bound_staged(spec, static_cast<int>(k))
                          : value_bound;
        row.lip_envelope = budget.envelope(static_cast<int>(k));
        row.within_uniform = row.sup_norm <= value_bound * (1.0 + tolerance) + 1e-15 &&
                             row.lipschitz <= budget.uniform_cap * lip_slack + 1e-12;
        row.within_envelope = row.sup_norm <= row.sup_cap * (1.0 + tolerance) + 1e-15 &&
                              row.lipschitz <= row.lip_envelope * lip_slack + 1e-12;
        if (!row.within_uniform) {
            rep.uniform_ok = false;
            rep.violations.push_back(row.k);
        }
        if (!row.within_envelope) rep.envelope_ok = false;
        rep.rows.push_back(row);
    }
    return rep;
}

} // namespace bellmanlab
