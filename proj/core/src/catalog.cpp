#include "bellmanlab/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace bellmanlab {

namespace {

class Params {
public:
    Params(const std::map<std::string, double>& p, std::set<std::string> known)
        : p_(p), known_(std::move(known)) {
        for (const auto& [k, v] : p_)
            if (!known_.count(k))
                throw std::invalid_argument("unknown problem parameter: " + k);
    }
    double get(const std::string& k, double fallback) const {
        auto it = p_.find(k);
        return it == p_.end() ? fallback : it->second;
    }

private:
    const std::map<std::string, double>& p_;
    std::set<std::string> known_;
};

MdpSpec move_to_center(const std::map<std::string, double>& params, bool zero_reward) {
    Params p(params, {"gamma", "step", "n_stages"});
    const double step = p.get("step", 0.1);
    if (!(step > 0.0 && step < 1.0)) throw std::invalid_argument("step must lie in (0,1)");

    MdpSpec spec;
    spec.name = zero_reward ? "move_to_center_zero" : "move_to_center";
    spec.mode = DynamicsMode::DiscreteDeterministic;
    spec.state_dim = 1;
    spec.state_box = {{0.0}, {1.0}};
    spec.action_labels = {"left", "right"};
    spec.gamma = p.get("gamma", 0.9);
    spec.n_stages = static_cast<int>(p.get("n_stages", 2.0));

    spec.transition = [step](const Vec& s, int action, Vec& out) {
        out[0] = action == 0 ? std::max(0.0, s[0] - step) : std::min(1.0, s[0] + step);
    };
    if (zero_reward) {
        spec.running_reward = [](double, const Vec&, const Vec&) { return 0.0; };
        spec.bounds.max_reward = 0.0;
        spec.bounds.lip_reward = 0.0;
    } else {
        spec.running_reward = [](double, const Vec& s, const Vec&) {
            return -(s[0] - 0.5) * (s[0] - 0.5);
        };
        spec.bounds.max_reward = 0.25;
        spec.bounds.lip_reward = 1.0;
    }
    spec.terminal_reward = [](const Vec&) { return 0.0; };
    spec.bounds.max_terminal = 0.0;
    spec.bounds.lip_terminal = 0.0;
    spec.bounds.lip_transition = 1.0;
    return spec;
}

MdpSpec pull_to_action(const std::map<std::string, double>& params) {
    Params p(params, {"kappa", "sigma", "lambda", "horizon", "delta"});
    const double kappa = p.get("kappa", 1.0);
    const double sigma = p.get("sigma", 0.2);

    MdpSpec spec;
    spec.name = "pull_to_action";
    spec.mode = DynamicsMode::ContinuousSde;
    spec.state_dim = 1;
    spec.noise_dim = 1;
    spec.state_box = {{-1.0}, {1.0}};
    spec.action_box = {{-1.0}, {1.0}};
    spec.horizon = p.get("horizon", 1.0);
    spec.hold_delta = p.get("delta", 0.25);
    spec.discount_lambda = p.get("lambda", 1.0);

    spec.drift = [kappa](double, const Vec& s, const Vec& a, Vec& out) {
        out[0] = kappa * (a[0] - s[0]);
    };
    spec.diffusion = [sigma](double, const Vec&, const Vec&, Vec& out) { out[0] = sigma; };
    spec.running_reward = [](double, const Vec& s, const Vec& a) {
        return -s[0] * s[0] - 0.1 * a[0] * a[0];
    };
    spec.terminal_reward = [](const Vec& s) { return -0.5 * s[0] * s[0]; };

    spec.bounds.lip_drift = kappa;          // |k(a-s) - k(a'-s')| <= k(|a-a'|+|s-s'|)
    spec.bounds.max_drift = kappa * 2.0;    // sup |a-s| over the boxes
    spec.bounds.lip_diffusion = 0.0;
    spec.bounds.max_diffusion = sigma;
    spec.bounds.lip_reward = 2.0;           // |d/ds| <= 2, |d/da| <= 0.2
    spec.bounds.max_reward = 1.1;
    spec.bounds.lip_terminal = 1.0;
    spec.bounds.max_terminal = 0.5;
    return spec;
}

MdpSpec const_sde(const std::map<std::string, double>& params) {
    Params p(params, {"drift", "sigma", "reward", "terminal", "lambda", "horizon", "delta"});
    const double h = p.get("drift", 0.0);
    const double sg = p.get("sigma", 0.0);
    const double r = p.get("reward", 1.0);
    const double g = p.get("terminal", 0.0);

    MdpSpec spec;
    spec.name = "const_sde";
    spec.mode = DynamicsMode::ContinuousSde;
    spec.state_dim = 1;
    spec.noise_dim = 1;
    spec.state_box = {{-2.0}, {2.0}};
    spec.action_box = {{0.0}, {1.0}};
    spec.horizon = p.get("horizon", 1.0);
    spec.hold_delta = p.get("delta", 0.25);
    spec.discount_lambda = p.get("lambda", 1.0);

    spec.drift = [h](double, const Vec&, const Vec&, Vec& out) { out[0] = h; };
    spec.diffusion = [sg](double, const Vec&, const Vec&, Vec& out) { out[0] = sg; };
    spec.running_reward = [r](double, const Vec&, const Vec&) { return r; };
    spec.terminal_reward = [g](const Vec&) { return g; };

    spec.bounds.max_drift = std::abs(h);
    spec.bounds.max_diffusion = std::abs(sg);
    spec.bounds.max_reward = std::abs(r);
    spec.bounds.max_terminal = std::abs(g);
    return spec;
}

} // namespace

MdpSpec make_problem(const std::string& id, const std::map<std::string, double>& params) {
    MdpSpec spec;
    if (id == "move_to_center") {
        spec = move_to_center(params, false);
    } else if (id == "move_to_center_zero") {
        spec = move_to_center(params, true);
    } else if (id == "pull_to_action") {
        spec = pull_to_action(params);
    } else if (id == "const_sde") {
        spec = const_sde(params);
    } else {
        throw std::invalid_argument("unknown problem id: " + id);
    }
    spec.check_structure();
    return spec;
}

MdpSpec make_move_to_center() { return make_problem("move_to_center"); }

} // namespace bellmanlab
