#include "bellmanlab/resnet_stack.hpp"

#include <algorithm>
#include <cmath>

#include "bellmanlab/rng.hpp"

namespace bellmanlab {

namespace {

double nodemax_diff(const Vec& a, const Vec& b) {
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
    return m;
}

} // namespace

StackPlan plan_stack(const MdpSpec& spec, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    StackPlan plan;
    plan.epsilon = epsilon;
    plan.beta = discount_factor(spec);
    plan.value_bound = uniform_q_bound(spec);
    const double rate = -std::log(plan.beta); // lambda*delta or ln(1/gamma)
    if (epsilon >= 2.0 * plan.value_bound) {
        plan.layers = 1;
    } else {
        plan.layers = static_cast<int>(std::ceil(std::log(2.0 * plan.value_bound / epsilon) / rate)) + 1;
    }
    plan.per_layer_budget = epsilon * (1.0 - plan.beta) / 2.0;
    return plan;
}

double resolution_floor(const MdpSpec& spec, const GridFunction& q_star, const SimConfig& cfg,
                        int n_probe) {
    const GridDomain& dom = q_star.domain();
    CounterRng rng(cfg.seed ^ 0x666c6f6f72ull); // "floor"
    SimConfig probe_cfg = cfg;
    double worst = 0.0;
    for (int i = 0; i < n_probe; ++i) {
        const DomainPoint p = dom.sample(rng, 17, i);
        probe_cfg.seed = rng.derive(100000 + i);
        const double defect = std::abs(bellman_value_at(spec, q_star, p, probe_cfg) - q_star.eval(p));
        worst = std::max(worst, defect);
    }
    return worst;
}

StackTrace run_stack(const MdpSpec& spec, const StackPlan& plan,
                     const std::vector<const OperatorBlock*>& blocks, const GridFunction& q0,
                     const IterationTrace& reference, const GridFunction& q_star,
                     const SimConfig& cfg, BlockMode mode, double injected_constant) {
    const GridPtr grid = q0.domain_ptr();
    if (!q_star.domain().same_as(*grid)) throw GridMismatch("q_star lives on a different grid");
    if (static_cast<int>(reference.iterates.size()) < plan.layers + 1)
        throw std::invalid_argument("reference trace is shorter than the planned stack");
    if (mode == BlockMode::Trained) {
        if (blocks.empty()) throw BlockMissing("no blocks supplied");
        if (blocks.size() != 1 && static_cast<int>(blocks.size()) < plan.layers)
            throw BlockMissing("need one shared block or one block per layer");
        for (const auto* b : blocks)
            if (!b || b->grid_checksum != grid->checksum())
                throw GridMismatch("block grid does not match");
    }

    const CounterRng derive(cfg.seed);
    StackTrace trace;
    Vec current = q0.values();
    for (int l = 0; l <= plan.layers; ++l) {
        GridFunction q_hat(grid, current);
        StackLayerRow row;
        row.layer = l;
        row.err_vs_exact = nodemax_diff(current, reference.iterates[l].values());
        row.envelope = plan.envelope(l);
        row.sup_norm = q_hat.sup_norm_nodes();
        row.lipschitz = estimate_lipschitz(q_hat, 256, derive.derive(3000 + l));
        if (l < plan.layers) {
            const Vec exact = residual_apply(spec, q_hat, cfg).values();
            Vec update;
            switch (mode) {
                case BlockMode::Oracle: update = exact; break;
                case BlockMode::InjectedConstant: {
                    update = exact;
                    for (double& x : update) x += injected_constant;
                    break;
                }
                case BlockMode::Trained: {
                    const OperatorBlock* b = blocks.size() == 1 ? blocks[0] : blocks[l];
                    update = b->net.forward(current);
                    break;
                }
            }
            row.residual_gap = nodemax_diff(update, exact);
            for (std::size_t j = 0; j < current.size(); ++j) current[j] += update[j];
        }
        trace.rows.push_back(row);
    }
    trace.final_error = nodemax_diff(current, q_star.values());
    return trace;
}

namespace {

IterationTrace reference_iterates(const MdpSpec& spec, const GridFunction& q0, int layers,
                                  const SimConfig& cfg) {
    IterationTrace trace = value_iterate(spec, q0, layers, 1e-300, cfg);
    while (static_cast<int>(trace.iterates.size()) < layers + 1) {
        // converged exactly inside the run; pad with the fixed iterate
        trace.iterates.push_back(trace.iterates.back());
        trace.sup_norms.push_back(trace.sup_norms.back());
        trace.lipschitz.push_back(trace.lipschitz.back());
        trace.sup_distances.push_back(0.0);
    }
    return trace;
}

} // namespace

TheoremReport verify_theorem(const MdpSpec& spec, const GridPtr& grid, double epsilon,
                             const FunctionFamily& family_template, const TrainConfig& tc,
                             const SimConfig& cfg, const TheoremOptions& opts) {
    TheoremReport rep;
    rep.plan = plan_stack(spec, epsilon);

    const GridFunction q0(grid, Vec(grid->size(), 0.0));

    // reference fixed point at tight tolerance
    IterationTrace star_run =
        value_iterate(spec, q0, std::max(opts.q_star_iterations, 2 * rep.plan.layers),
                      opts.q_star_tol, cfg);
    const GridFunction q_star = star_run.last();
    rep.plan.resolution_floor = resolution_floor(spec, q_star, cfg, opts.floor_probes);
    if (epsilon < 2.0 * rep.plan.resolution_floor) {
        rep.plan.feasible = false;
        rep.status = "infeasible-as-configured";
        return rep;
    }

    IterationTrace reference = reference_iterates(spec, q0, rep.plan.layers, cfg);

    // regularity constants for the cap recurrence
    RegularityBudget budget = spec.mode == DynamicsMode::DiscreteDeterministic
                                  ? analytic_budget(spec)
                                  : estimate_budget(spec, grid, 12, cfg, opts.seed ^ 0xb0d6e7ull);
    rep.budget_additive = budget.additive;
    rep.budget_carry = budget.carry;

    // blocks
    std::vector<OperatorBlock> owned;
    std::vector<const OperatorBlock*> blocks;
    FunctionFamily family = family_template;
    family.curriculum = reference.iterates;
    family.curriculum.push_back(q_star);
    if (opts.mode == BlockMode::Trained) {
        TrainConfig train = tc;
        if (train.target <= 0.0) train.target = rep.plan.per_layer_budget * 0.9;
        if (opts.shared_block) {
            family.seed = opts.seed;
            owned.push_back(train_block(spec, family, grid, train, cfg, opts.seed));
        } else {
            for (int l = 0; l < rep.plan.layers; ++l) {
                FunctionFamily layer_family = family;
                layer_family.seed = CounterRng(opts.seed).derive(l);
                layer_family.curriculum = {reference.iterates[l]};
                owned.push_back(
                    train_block(spec, layer_family, grid, train, cfg, layer_family.seed));
            }
        }
        for (const auto& b : owned) blocks.push_back(&b);
        rep.train_metrics = owned.front().metrics;
        rep.lfstar_measured = 0.0;
        for (const auto& b : owned)
            rep.lfstar_measured = std::max(rep.lfstar_measured, b.metrics.output_lipschitz);
    }

    rep.trace = run_stack(spec, rep.plan, blocks, q0, reference, q_star, cfg, opts.mode,
                          opts.injected_constant);

    // caps of the compact target set the blocks must cover
    rep.amplitude_cap = rep.plan.value_bound + epsilon / 2.0;
    const double a_prime = 2.0 * budget.additive + rep.lfstar_measured;
    const double b_prime = 2.0 * budget.carry + 1.0;
    const int depth = rep.plan.layers;
    if (depth <= 1) {
        rep.lipschitz_cap = 0.0;
    } else if (std::abs(b_prime - 1.0) < 1e-14) {
        rep.lipschitz_cap = a_prime * (depth - 1);
    } else {
        rep.lipschitz_cap = a_prime * (std::pow(b_prime, depth - 1) - 1.0) / (b_prime - 1.0);
    }

    const double measure_tol = 1e-12;
    rep.checks.per_layer_budget_ok = true;
    rep.checks.envelope_ok = true;
    rep.checks.caps_ok = true;
    for (const auto& row : rep.trace.rows) {
        if (row.layer < depth) {
            rep.max_residual_gap = std::max(rep.max_residual_gap, row.residual_gap);
            if (row.residual_gap > rep.plan.per_layer_budget)
                rep.checks.per_layer_budget_ok = false;
            // caps apply to the block inputs Qhat^(0..L-1)
            if (row.sup_norm > rep.amplitude_cap + measure_tol ||
                row.lipschitz > rep.lipschitz_cap * 1.02 + measure_tol)
                rep.checks.caps_ok = false;
        }
        if (row.err_vs_exact > row.envelope + measure_tol) rep.checks.envelope_ok = false;
    }
    rep.final_error = rep.trace.final_error;
    rep.checks.final_error_ok = rep.final_error < epsilon;
    rep.status = rep.checks.all() ? "pass" : "bound-failure";
    return rep;
}

} // namespace bellmanlab
