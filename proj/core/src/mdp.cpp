#include "bellmanlab/mdp.hpp"

#include <algorithm>
#include <cmath>

#include "bellmanlab/rng.hpp"

namespace bellmanlab {

namespace {

constexpr double kLipschitzTolerance = 1.02;

double norm2(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double norm2_diff(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

struct ProbePoint {
    double t = 0.0;
    Vec s;
    Vec a;        // coordinates (embedded index for finite actions)
    int action = -1;
};

Vec flatten(const MdpSpec& spec, const ProbePoint& p) {
    Vec out;
    if (spec.mode == DynamicsMode::ContinuousSde) out.push_back(p.t);
    out.insert(out.end(), p.s.begin(), p.s.end());
    out.insert(out.end(), p.a.begin(), p.a.end());
    return out;
}

double metric(const MdpSpec& spec, const ProbePoint& x, const ProbePoint& y) {
    double d = 0.0;
    if (spec.mode == DynamicsMode::ContinuousSde) d += std::abs(x.t - y.t);
    d += norm2_diff(x.s, y.s);
    d += norm2_diff(x.a, y.a);
    return d;
}

ProbePoint sample_point(const MdpSpec& spec, const CounterRng& rng, std::uint64_t id) {
    ProbePoint p;
    std::uint64_t k = 0;
    if (spec.mode == DynamicsMode::ContinuousSde)
        p.t = rng.uniform_in(0.0, spec.horizon, id, 0, k++);
    p.s.resize(spec.state_dim);
    for (int i = 0; i < spec.state_dim; ++i)
        p.s[i] = rng.uniform_in(spec.state_box.lo[i], spec.state_box.hi[i], id, 0, k++);
    if (spec.n_actions() > 0) {
        p.action = static_cast<int>(rng.index_below(spec.n_actions(), id, 0, k++));
        p.a = {static_cast<double>(p.action)};
    } else {
        p.a.resize(spec.action_box.dim());
        for (int i = 0; i < spec.action_box.dim(); ++i)
            p.a[i] = rng.uniform_in(spec.action_box.lo[i], spec.action_box.hi[i], id, 0, k++);
    }
    return p;
}

void require_finite(double v, const char* what) {
    if (!std::isfinite(v))
        throw NonFiniteCoefficient(std::string("non-finite value from coefficient ") + what);
}

void require_finite(const Vec& v, const char* what) {
    for (double x : v) require_finite(x, what);
}

} // namespace

void MdpSpec::check_structure() const {
    if (state_dim < 1) throw std::invalid_argument("state_dim must be positive");
    if (static_cast<int>(state_box.lo.size()) != state_dim ||
        static_cast<int>(state_box.hi.size()) != state_dim)
        throw std::invalid_argument("state_box dimension mismatch");
    for (int i = 0; i < state_dim; ++i)
        if (!(state_box.lo[i] < state_box.hi[i]))
            throw std::invalid_argument("state_box must have positive volume");
    if (mode == DynamicsMode::ContinuousSde) {
        if (!(hold_delta > 0.0)) throw std::invalid_argument("hold_delta must be > 0");
        if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
        if (discount_lambda < 0.0) throw std::invalid_argument("discount_lambda must be >= 0");
        if (noise_dim < 1) throw std::invalid_argument("noise_dim must be positive");
        if (n_actions() == 0 && action_box.dim() == 0)
            throw std::invalid_argument("an action set is required");
        if (!drift || !diffusion || !running_reward || !terminal_reward)
            throw std::invalid_argument("SDE mode requires drift/diffusion/reward/terminal");
    } else {
        if (!(gamma > 0.0 && gamma < 1.0))
            throw std::invalid_argument("gamma must lie in (0,1)");
        if (n_actions() < 1)
            throw std::invalid_argument("discrete mode requires a finite action list");
        if (!transition || !running_reward || !terminal_reward)
            throw std::invalid_argument("discrete mode requires transition/reward/terminal");
    }
}

double discount_factor(const MdpSpec& spec) {
    spec.check_structure();
    double beta;
    if (spec.mode == DynamicsMode::ContinuousSde) {
        if (!(spec.discount_lambda > 0.0))
            throw std::invalid_argument("discount_factor requires lambda > 0");
        beta = std::exp(-spec.discount_lambda * spec.hold_delta);
    } else {
        beta = spec.gamma;
    }
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("contraction factor must lie in (0,1)");
    return beta;
}

double uniform_q_bound(const MdpSpec& spec) {
    if (spec.mode == DynamicsMode::ContinuousSde) {
        if (!(spec.discount_lambda > 0.0))
            throw std::invalid_argument("uniform_q_bound requires lambda > 0");
        return spec.bounds.max_reward / spec.discount_lambda + spec.bounds.max_terminal;
    }
    return spec.bounds.max_reward / (1.0 - spec.gamma) + spec.bounds.max_terminal;
}

double uniform_q_bound_staged(const MdpSpec& spec, int n_stages) {
    if (spec.mode != DynamicsMode::DiscreteDeterministic)
        throw std::invalid_argument("staged bound applies to discrete mode");
    if (n_stages < 0) throw std::invalid_argument("n_stages must be >= 0");
    const double g = spec.gamma;
    const double gn = std::pow(g, n_stages);
    return spec.bounds.max_reward * (1.0 - gn) / (1.0 - g) + gn * spec.bounds.max_terminal;
}

AuditReport validate_spec(const MdpSpec& spec, int n_probe, std::uint64_t seed) {
    spec.check_structure();
    if (n_probe < 2) throw std::invalid_argument("n_probe must be >= 2");

    CounterRng rng(seed);
    AuditReport rep;
    rep.n_probe = n_probe;
    rep.seed = seed;

    const bool sde = spec.mode == DynamicsMode::ContinuousSde;
    Vec h1(spec.state_dim), h2(spec.state_dim);
    Vec sg1(spec.state_dim * spec.noise_dim), sg2(spec.state_dim * spec.noise_dim);
    Vec tr1(spec.state_dim), tr2(spec.state_dim);

    auto flag = [&](const char* coeff, const char* kind, double declared, double observed,
                    const ProbePoint& x, const ProbePoint& y) {
        if (observed > declared * (kind == std::string("lipschitz") ? kLipschitzTolerance : 1.0)) {
            rep.violations.push_back(
                {coeff, kind, declared, observed, flatten(spec, x), flatten(spec, y)});
        }
    };

    for (int i = 0; i < n_probe; ++i) {
        // pair i uses probe streams (2i, 2i+1); prefix property in n_probe
        const ProbePoint x = sample_point(spec, rng, 2 * static_cast<std::uint64_t>(i));
        const ProbePoint y = sample_point(spec, rng, 2 * static_cast<std::uint64_t>(i) + 1);
        const double d = metric(spec, x, y);

        const double rx = spec.running_reward(x.t, x.s, x.a);
        const double ry = spec.running_reward(y.t, y.s, y.a);
        require_finite(rx, "running_reward");
        rep.max_reward = std::max(rep.max_reward, std::abs(rx));
        rep.max_reward = std::max(rep.max_reward, std::abs(ry));
        flag("reward", "bound", spec.bounds.max_reward, std::abs(rx), x, x);
        if (d > 1e-12) {
            const double q = std::abs(rx - ry) / d;
            rep.slope_reward = std::max(rep.slope_reward, q);
            flag("reward", "lipschitz", spec.bounds.lip_reward, q, x, y);
        }

        const double gx = spec.terminal_reward(x.s);
        const double gy = spec.terminal_reward(y.s);
        require_finite(gx, "terminal_reward");
        rep.max_terminal = std::max({rep.max_terminal, std::abs(gx), std::abs(gy)});
        flag("terminal", "bound", spec.bounds.max_terminal, std::abs(gx), x, x);
        const double ds = norm2_diff(x.s, y.s);
        if (ds > 1e-12) {
            const double q = std::abs(gx - gy) / ds;
            rep.slope_terminal = std::max(rep.slope_terminal, q);
            flag("terminal", "lipschitz", spec.bounds.lip_terminal, q, x, y);
        }

        if (sde) {
            spec.drift(x.t, x.s, x.a, h1);
            spec.drift(y.t, y.s, y.a, h2);
            require_finite(h1, "drift");
            rep.max_drift = std::max({rep.max_drift, norm2(h1), norm2(h2)});
            flag("drift", "bound", spec.bounds.max_drift, norm2(h1), x, x);
            spec.diffusion(x.t, x.s, x.a, sg1);
            spec.diffusion(y.t, y.s, y.a, sg2);
            require_finite(sg1, "diffusion");
            rep.max_diffusion = std::max({rep.max_diffusion, norm2(sg1), norm2(sg2)});
            flag("diffusion", "bound", spec.bounds.max_diffusion, norm2(sg1), x, x);
            if (d > 1e-12) {
                const double qh = norm2_diff(h1, h2) / d;
                const double qs = norm2_diff(sg1, sg2) / d;
                rep.slope_drift = std::max(rep.slope_drift, qh);
                rep.slope_diffusion = std::max(rep.slope_diffusion, qs);
                flag("drift", "lipschitz", spec.bounds.lip_drift, qh, x, y);
                flag("diffusion", "lipschitz", spec.bounds.lip_diffusion, qs, x, y);
            }
        } else if (x.action == y.action && ds > 1e-12) {
            spec.transition(x.s, x.action, tr1);
            spec.transition(y.s, y.action, tr2);
            require_finite(tr1, "transition");
            const double q = norm2_diff(tr1, tr2) / ds;
            rep.slope_transition = std::max(rep.slope_transition, q);
            flag("transition", "lipschitz", spec.bounds.lip_transition, q, x, y);
        }
    }
    return rep;
}

} // namespace bellmanlab
