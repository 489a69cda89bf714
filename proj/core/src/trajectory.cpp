#include "bellmanlab/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "bellmanlab/rng.hpp"

namespace bellmanlab {

namespace {

// fixed-order pairwise sum; the reduction tree depends only on the range
double pairwise_sum(const Vec& x, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 8) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += x[i];
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(x, lo, mid) + pairwise_sum(x, mid, hi);
}

McEstimate reduce(const Vec& samples) {
    McEstimate e;
    e.n_samples = static_cast<int>(samples.size());
    e.mean = pairwise_sum(samples, 0, samples.size()) / samples.size();
    if (samples.size() > 1) {
        Vec dev(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const double d = samples[i] - e.mean;
            dev[i] = d * d;
        }
        const double var = pairwise_sum(dev, 0, dev.size()) / (samples.size() - 1);
        e.stderr_ = std::sqrt(std::max(0.0, var) / samples.size());
    }
    return e;
}

struct PathSpec {
    double tau_end;   // min(t + delta, T)
    int substeps;     // 0 when tau_end == t
    double du;
    bool past_horizon; // t + delta > T: terminal reward applies
};

PathSpec path_spec(const MdpSpec& spec, double t, const SimConfig& cfg) {
    PathSpec ps;
    ps.past_horizon = t + spec.hold_delta > spec.horizon;
    ps.tau_end = ps.past_horizon ? spec.horizon : t + spec.hold_delta;
    ps.substeps = ps.tau_end > t ? cfg.substeps : 0;
    ps.du = ps.substeps > 0 ? (ps.tau_end - t) / ps.substeps : 0.0;
    return ps;
}

} // namespace

SamplePath simulate_held_action(const MdpSpec& spec, double t, const Vec& s, const Vec& a,
                                const SimConfig& cfg, std::uint64_t sample_id) {
    if (spec.mode != DynamicsMode::ContinuousSde)
        throw std::invalid_argument("simulate_held_action requires SDE mode");
    cfg.check();

    const PathSpec ps = path_spec(spec, t, cfg);
    CounterRng rng(cfg.seed);
    const bool antithetic = cfg.antithetic;
    const std::uint64_t base_id = antithetic ? sample_id / 2 : sample_id;
    const double sign = antithetic && (sample_id % 2 == 1) ? -1.0 : 1.0;

    SamplePath path;
    path.times.push_back(t);
    path.states.push_back(s);

    const int n = spec.state_dim, d = spec.noise_dim;
    Vec h(n), sg(n * d), x = s, noise(d);
    const double sqrt_du = std::sqrt(ps.du);
    for (int k = 0; k < ps.substeps; ++k) {
        const double u = t + k * ps.du;
        spec.drift(u, x, a, h);
        spec.diffusion(u, x, a, sg);
        for (int j = 0; j < d; ++j)
            noise[j] = sign * rng.normal(base_id, static_cast<std::uint64_t>(k), j);
        for (int i = 0; i < n; ++i) {
            double dx = h[i] * ps.du;
            for (int j = 0; j < d; ++j) dx += sg[i * d + j] * sqrt_du * noise[j];
            double xi = x[i] + dx;
            if (!std::isfinite(xi))
                throw NonFiniteState("state blew up at substep " + std::to_string(k));
            const double clipped = std::min(spec.state_box.hi[i], std::max(spec.state_box.lo[i], xi));
            if (clipped != xi) ++path.clipped;
            x[i] = clipped;
        }
        path.times.push_back(u + ps.du);
        path.states.push_back(x);
    }
    return path;
}

namespace {

double continuation_value(const MdpSpec& spec, const GridFunction& q_next, const PathSpec& ps,
                          double t, const Vec& terminal_state) {
    if (ps.past_horizon)
        return std::exp(-spec.discount_lambda * (spec.horizon - t)) *
               spec.terminal_reward(terminal_state);
    return std::exp(-spec.discount_lambda * spec.hold_delta) *
           q_next.max_over_actions(t + spec.hold_delta, terminal_state);
}

} // namespace

McEstimate mc_discounted_reward(const MdpSpec& spec, double t, const Vec& s, const Vec& a,
                                int action_index, const GridFunction& q_next,
                                const SimConfig& cfg) {
    cfg.check();

    if (spec.mode == DynamicsMode::DiscreteDeterministic) {
        Vec next(spec.state_dim);
        spec.transition(s, action_index, next);
        McEstimate e;
        e.mean = spec.running_reward(0.0, s, a) + spec.gamma * q_next.max_over_actions(0.0, next);
        e.n_samples = 1;
        return e;
    }

    if (cfg.antithetic && cfg.n_samples % 2 != 0)
        throw std::invalid_argument("antithetic sampling needs an even n_samples");

    const PathSpec ps = path_spec(spec, t, cfg);
    const double lambda = spec.discount_lambda;
    Vec samples(cfg.n_samples);
    std::int64_t clipped = 0;
    for (int i = 0; i < cfg.n_samples; ++i) {
        const SamplePath path = simulate_held_action(spec, t, s, a, cfg, i);
        clipped += path.clipped;
        double acc = 0.0;
        for (int k = 0; k < ps.substeps; ++k) {
            const double u = path.times[k];
            acc += std::exp(-lambda * (u - t)) * spec.running_reward(u, path.states[k], a) * ps.du;
        }
        samples[i] = acc + continuation_value(spec, q_next, ps, t, path.terminal());
    }

    McEstimate e;
    if (cfg.antithetic) {
        Vec pair_means(cfg.n_samples / 2);
        for (int i = 0; i < cfg.n_samples / 2; ++i)
            pair_means[i] = 0.5 * (samples[2 * i] + samples[2 * i + 1]);
        e = reduce(pair_means);
        e.n_samples = cfg.n_samples;
    } else {
        e = reduce(samples);
    }
    e.clipped_substeps = clipped;
    e.total_substeps = static_cast<std::int64_t>(ps.substeps) * cfg.n_samples;
    return e;
}

McEstimate bsde_evaluate(const MdpSpec& spec, const GridFunction& q_continuation, double t,
                         const Vec& s, const Vec& a, const SimConfig& cfg) {
    if (spec.mode != DynamicsMode::ContinuousSde)
        throw std::invalid_argument("bsde_evaluate requires SDE mode");
    cfg.check();
    if (cfg.antithetic && cfg.n_samples % 2 != 0)
        throw std::invalid_argument("antithetic sampling needs an even n_samples");

    const PathSpec ps = path_spec(spec, t, cfg);
    const double lambda = spec.discount_lambda;
    Vec samples(cfg.n_samples);
    std::int64_t clipped = 0;
    for (int i = 0; i < cfg.n_samples; ++i) {
        const SamplePath path = simulate_held_action(spec, t, s, a, cfg, i);
        clipped += path.clipped;
        double y;
        if (ps.past_horizon)
            y = spec.terminal_reward(path.terminal());
        else
            y = q_continuation.max_over_actions(t + spec.hold_delta, path.terminal());
        for (int k = ps.substeps - 1; k >= 0; --k) {
            const double u = path.times[k];
            y += (spec.running_reward(u, path.states[k], a) - lambda * y) * ps.du;
        }
        samples[i] = y;
    }

    McEstimate e;
    if (cfg.antithetic) {
        Vec pair_means(cfg.n_samples / 2);
        for (int i = 0; i < cfg.n_samples / 2; ++i)
            pair_means[i] = 0.5 * (samples[2 * i] + samples[2 * i + 1]);
        e = reduce(pair_means);
        e.n_samples = cfg.n_samples;
    } else {
        e = reduce(samples);
    }
    e.clipped_substeps = clipped;
    e.total_substeps = static_cast<std::int64_t>(ps.substeps) * cfg.n_samples;
    return e;
}

StabilityProbe probe_sde_stability(const MdpSpec& spec, const SimConfig& cfg, int n_points,
                                   std::uint64_t seed) {
    if (spec.mode != DynamicsMode::ContinuousSde)
        throw std::invalid_argument("probe_sde_stability requires SDE mode");
    StabilityProbe probe;
    probe.perturbation_sizes = {0.01, 0.02, 0.04, 0.08};
    CounterRng rng(seed);

    for (double rho : probe.perturbation_sizes) {
        double total = 0.0;
        int count = 0;
        for (int p = 0; p < n_points; ++p) {
            Vec s(spec.state_dim), s2(spec.state_dim), a;
            for (int i = 0; i < spec.state_dim; ++i) {
                s[i] = rng.uniform_in(spec.state_box.lo[i], spec.state_box.hi[i], p, 1, i);
                const double dir = rng.uniform(p, 2, i) < 0.5 ? -1.0 : 1.0;
                s2[i] = std::min(spec.state_box.hi[i],
                                 std::max(spec.state_box.lo[i], s[i] + dir * rho));
            }
            if (spec.n_actions() > 0) {
                a = {static_cast<double>(rng.index_below(spec.n_actions(), p, 3, 0))};
            } else {
                a.resize(spec.action_box.dim());
                for (int i = 0; i < spec.action_box.dim(); ++i)
                    a[i] = rng.uniform_in(spec.action_box.lo[i], spec.action_box.hi[i], p, 3, i);
            }
            const double t = rng.uniform_in(0.0, std::max(0.0, spec.horizon - spec.hold_delta), p, 4, 0);
            double dist_in = 0.0;
            for (int i = 0; i < spec.state_dim; ++i) dist_in += (s[i] - s2[i]) * (s[i] - s2[i]);
            dist_in = std::sqrt(dist_in);
            if (dist_in < 1e-12) continue;

            SimConfig local = cfg;
            local.seed = rng.derive(1000 + p); // common noise for the pair
            double mean_dist = 0.0;
            for (int m = 0; m < cfg.n_samples; ++m) {
                const SamplePath p1 = simulate_held_action(spec, t, s, a, local, m);
                const SamplePath p2 = simulate_held_action(spec, t, s2, a, local, m);
                double dd = 0.0;
                for (int i = 0; i < spec.state_dim; ++i) {
                    const double d = p1.terminal()[i] - p2.terminal()[i];
                    dd += d * d;
                }
                mean_dist += std::sqrt(dd);
            }
            mean_dist /= cfg.n_samples;
            total += mean_dist / dist_in;
            ++count;
        }
        probe.mean_terminal_distances.push_back(count > 0 ? total / count * rho : 0.0);
        probe.fitted_slope = std::max(probe.fitted_slope, count > 0 ? total / count : 0.0);
    }
    return probe;
}

} // namespace bellmanlab
