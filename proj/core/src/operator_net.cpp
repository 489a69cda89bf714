#include "bellmanlab/operator_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "bellmanlab/rng.hpp"

namespace bellmanlab {

using nlohmann::json;

Mlp Mlp::make(const std::vector<int>& sizes, double output_bound, std::uint64_t seed) {
    if (sizes.size() < 2) throw std::invalid_argument("net needs at least input and output layers");
    for (int s : sizes)
        if (s < 1) throw std::invalid_argument("layer sizes must be positive");
    if (!(output_bound > 0.0)) throw std::invalid_argument("output_bound must be > 0");

    Mlp net;
    net.sizes = sizes;
    net.output_bound = output_bound;
    CounterRng rng(seed);
    for (size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l], fan_out = sizes[l + 1];
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Vec w(static_cast<std::size_t>(fan_out) * fan_in);
        for (std::size_t i = 0; i < w.size(); ++i)
            w[i] = rng.uniform_in(-scale, scale, l, 0, i);
        net.weights.push_back(std::move(w));
        net.biases.push_back(Vec(fan_out, 0.0));
    }
    return net;
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

double& Mlp::parameter(std::size_t flat) {
    for (size_t l = 0; l < weights.size(); ++l) {
        if (flat < weights[l].size()) return weights[l][flat];
        flat -= weights[l].size();
        if (flat < biases[l].size()) return biases[l][flat];
        flat -= biases[l].size();
    }
    throw std::out_of_range("parameter index");
}

double Mlp::parameter(std::size_t flat) const {
    return const_cast<Mlp*>(this)->parameter(flat);
}

namespace {

void affine(const Vec& w, const Vec& b, const Vec& x, Vec& z) {
    const int out = static_cast<int>(b.size());
    const int in = static_cast<int>(x.size());
    for (int i = 0; i < out; ++i) {
        double acc = b[i];
        const double* row = w.data() + static_cast<std::size_t>(i) * in;
        for (int j = 0; j < in; ++j) acc += row[j] * x[j];
        z[i] = acc;
    }
}

} // namespace

Vec Mlp::forward(const Vec& input) const {
    if (static_cast<int>(input.size()) != input_size())
        throw ShapeMismatch("input length does not match the net");
    Vec a = input, z;
    for (size_t l = 0; l < weights.size(); ++l) {
        z.assign(biases[l].size(), 0.0);
        affine(weights[l], biases[l], a, z);
        const bool last = l + 1 == weights.size();
        for (double& v : z) v = (last ? output_bound : 1.0) * std::tanh(v);
        a.swap(z);
    }
    return a;
}

Vec Mlp::loss_gradient(const Vec& input, const Vec& target, double* loss_out) const {
    if (static_cast<int>(input.size()) != input_size() ||
        static_cast<int>(target.size()) != output_size())
        throw ShapeMismatch("input/target length does not match the net");

    const size_t n_layers = weights.size();
    std::vector<Vec> acts(n_layers + 1);
    acts[0] = input;
    for (size_t l = 0; l < n_layers; ++l) {
        Vec z(biases[l].size());
        affine(weights[l], biases[l], acts[l], z);
        const bool last = l + 1 == n_layers;
        for (double& v : z) v = (last ? output_bound : 1.0) * std::tanh(v);
        acts[l + 1] = std::move(z);
    }

    const Vec& y = acts[n_layers];
    double loss = 0.0;
    Vec delta(y.size());
    for (size_t j = 0; j < y.size(); ++j) {
        const double e = y[j] - target[j];
        loss += 0.5 * e * e;
        // y = B tanh(z) => dy/dz = B - y^2 / B
        delta[j] = e * (output_bound - y[j] * y[j] / output_bound);
    }
    if (loss_out) *loss_out = loss;

    Vec grad(parameter_count());
    // offsets of each layer's block in the flattened parameter vector
    std::vector<std::size_t> offset(n_layers);
    {
        std::size_t off = 0;
        for (size_t l = 0; l < n_layers; ++l) {
            offset[l] = off;
            off += weights[l].size() + biases[l].size();
        }
    }
    for (int l = static_cast<int>(n_layers) - 1; l >= 0; --l) {
        const Vec& a_in = acts[l];
        const int out = static_cast<int>(biases[l].size());
        const int in = static_cast<int>(a_in.size());
        double* gw = grad.data() + offset[l];
        double* gb = gw + weights[l].size();
        for (int i = 0; i < out; ++i) {
            const double d = delta[i];
            double* row = gw + static_cast<std::size_t>(i) * in;
            for (int j = 0; j < in; ++j) row[j] = d * a_in[j];
            gb[i] = d;
        }
        if (l > 0) {
            Vec prev(in, 0.0);
            for (int i = 0; i < out; ++i) {
                const double d = delta[i];
                const double* row = weights[l].data() + static_cast<std::size_t>(i) * in;
                for (int j = 0; j < in; ++j) prev[j] += row[j] * d;
            }
            for (int j = 0; j < in; ++j) prev[j] *= 1.0 - acts[l][j] * acts[l][j]; // tanh'
            delta.swap(prev);
        }
    }
    return grad;
}

Vec fd_loss_gradient(const Mlp& net, const Vec& input, const Vec& target,
                     const std::vector<std::size_t>& params, double h_fd) {
    if (!(h_fd >= 1e-7 && h_fd <= 1e-4))
        throw std::invalid_argument("h_fd must lie in [1e-7, 1e-4]");
    Mlp probe = net;
    auto loss_at = [&]() {
        const Vec y = probe.forward(input);
        double loss = 0.0;
        for (size_t j = 0; j < y.size(); ++j) {
            const double e = y[j] - target[j];
            loss += 0.5 * e * e;
        }
        return loss;
    };
    Vec out(params.size());
    for (size_t k = 0; k < params.size(); ++k) {
        const double saved = probe.parameter(params[k]);
        probe.parameter(params[k]) = saved + h_fd;
        const double lp = loss_at();
        probe.parameter(params[k]) = saved - h_fd;
        const double lm = loss_at();
        probe.parameter(params[k]) = saved;
        out[k] = (lp - lm) / (2.0 * h_fd);
    }
    return out;
}

double grad_check(const Mlp& net, const Vec& input, const Vec& target, double h_fd, int n_params,
                  std::uint64_t seed) {
    const std::size_t total = net.parameter_count();
    std::vector<std::size_t> params;
    if (total <= static_cast<std::size_t>(n_params)) {
        params.resize(total);
        std::iota(params.begin(), params.end(), 0);
    } else {
        CounterRng rng(seed);
        for (int i = 0; i < n_params; ++i) params.push_back(rng.index_below(total, 77, 0, i));
        std::sort(params.begin(), params.end());
        params.erase(std::unique(params.begin(), params.end()), params.end());
    }
    const Vec bp = net.loss_gradient(input, target);
    const Vec fd = fd_loss_gradient(net, input, target, params, h_fd);
    double worst = 0.0;
    for (size_t k = 0; k < params.size(); ++k) {
        const double a = bp[params[k]], b = fd[k];
        const double denom = std::max({std::abs(a), std::abs(b), 1e-10});
        if (std::max(std::abs(a), std::abs(b)) < 1e-12) continue;
        worst = std::max(worst, std::abs(a - b) / denom);
    }
    return worst;
}

Vec block_forward(const OperatorBlock& block, const Vec& input) {
    return block.net.forward(input);
}

GridFunction apply_block(const OperatorBlock& block, const GridFunction& q) {
    if (q.domain().checksum() != block.grid_checksum)
        throw GridMismatch("block was trained on a different grid");
    return GridFunction(q.domain_ptr(), block.net.forward(q.values()));
}

namespace {

double nodemax_err(const Vec& a, const Vec& b) {
    double m = 0.0;
    for (size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
    return m;
}

} // namespace

OperatorBlock train_block(const MdpSpec& spec, const FunctionFamily& family, const GridPtr& grid,
                          const TrainConfig& tc, const SimConfig& cfg, std::uint64_t seed) {
    if (tc.train_count < 1 || tc.test_count < 1)
        throw std::invalid_argument("train/test counts must be >= 1");

    const int m = static_cast<int>(grid->size());
    std::vector<int> sizes{m};
    if (tc.hidden.empty()) {
        sizes.push_back(4 * m);
        sizes.push_back(4 * m);
    } else {
        sizes.insert(sizes.end(), tc.hidden.begin(), tc.hidden.end());
    }
    sizes.push_back(m);

    const double beta = discount_factor(spec);
    const double bound =
        tc.output_bound > 0.0 ? tc.output_bound : 2.0 * (1.0 + beta) * std::max(0.25, family.amplitude_cap);

    OperatorBlock block;
    block.grid_checksum = grid->checksum();
    block.seed = seed;
    block.net = Mlp::make(sizes, bound, seed);

    // dataset: inputs are node values, targets are the residual's node values
    const auto funcs = sample_target_family(family, grid, tc.train_count + tc.test_count);
    std::vector<Vec> inputs, targets;
    inputs.reserve(funcs.size());
    targets.reserve(funcs.size());
    for (const auto& f : funcs) {
        inputs.push_back(f.values());
        targets.push_back(residual_apply(spec, f, cfg).values());
    }

    auto held_out_err = [&](const Mlp& net) {
        double worst = 0.0;
        for (int i = tc.train_count; i < tc.train_count + tc.test_count; ++i)
            worst = std::max(worst, nodemax_err(net.forward(inputs[i]), targets[i]));
        return worst;
    };

    CounterRng rng(seed);
    Vec velocity(block.net.parameter_count(), 0.0);
    Vec batch_grad(block.net.parameter_count());
    std::vector<int> order(tc.train_count);
    std::iota(order.begin(), order.end(), 0);

    Mlp best = block.net;
    double best_err = held_out_err(block.net);
    double last_mse = 0.0;
    int epochs_run = 0;

    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        // deterministic shuffle keyed by (seed, epoch)
        for (int i = tc.train_count - 1; i > 0; --i)
            std::swap(order[i], order[rng.index_below(i + 1, 1000 + epoch, 5, i)]);

        double mse_acc = 0.0;
        for (int start = 0; start < tc.train_count; start += tc.batch_size) {
            const int end = std::min(tc.train_count, start + tc.batch_size);
            std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
            for (int i = start; i < end; ++i) {
                double loss = 0.0;
                const Vec g = block.net.loss_gradient(inputs[order[i]], targets[order[i]], &loss);
                mse_acc += 2.0 * loss / m;
                for (std::size_t p = 0; p < g.size(); ++p) batch_grad[p] += g[p];
            }
            const double scale = 1.0 / (m * (end - start)); // mean over nodes and batch
            for (std::size_t p = 0; p < velocity.size(); ++p) {
                velocity[p] = tc.momentum * velocity[p] - tc.learn_rate * batch_grad[p] * scale;
                block.net.parameter(p) += velocity[p];
            }
        }
        last_mse = mse_acc / tc.train_count;
        if (!std::isfinite(last_mse)) throw TrainingDiverged("loss became non-finite");
        epochs_run = epoch + 1;

        if ((epoch + 1) % tc.eval_every == 0 || epoch + 1 == tc.epochs) {
            const double err = held_out_err(block.net);
            if (err < best_err) {
                best_err = err;
                best = block.net;
            }
            if (tc.target > 0.0 && best_err <= tc.target) break;
        }
    }
    block.net = best;

    // recorded metrics
    TrainMetrics& mm = block.metrics;
    mm.target = tc.target;
    mm.epochs_run = epochs_run;
    mm.final_mse = last_mse;
    for (int i = 0; i < tc.train_count; ++i)
        mm.eps_op_train =
            std::max(mm.eps_op_train, nodemax_err(block.net.forward(inputs[i]), targets[i]));
    mm.eps_op_test = best_err;
    mm.target_met = tc.target <= 0.0 || mm.eps_op_test <= tc.target;
    mm.net_error_nodes = mm.eps_op_test;

    // dense probe on a few held-out functions: true residual off the grid
    const int dense_funcs = std::min(8, tc.test_count);
    for (int i = tc.train_count; i < tc.train_count + dense_funcs; ++i) {
        const GridFunction& q = funcs[i];
        const GridFunction target_fn(grid, targets[i]);
        const GridFunction out_fn(grid, block.net.forward(inputs[i]));
        auto residual_at = [&](const DomainPoint& p) {
            return bellman_value_at(spec, q, p, cfg) - q.eval(p);
        };
        mm.eps_op_dense = std::max(mm.eps_op_dense, sup_distance_fn(out_fn, residual_at, 512).value);
        mm.interp_error_dense =
            std::max(mm.interp_error_dense, sup_distance_fn(target_fn, residual_at, 512).value);
    }
    const CounterRng derive(seed);
    for (int i = tc.train_count; i < tc.train_count + tc.test_count; ++i) {
        const GridFunction out_fn(grid, block.net.forward(inputs[i]));
        mm.output_lipschitz = std::max(
            mm.output_lipschitz, estimate_lipschitz(out_fn, 128, derive.derive(4000 + i)));
    }
    return block;
}

LfStarReport measure_output_lipschitz(const OperatorBlock& block, const FunctionFamily& family,
                                      const GridPtr& grid, int n_funcs) {
    if (n_funcs < 1) throw std::invalid_argument("n_funcs must be >= 1");
    const auto funcs = sample_target_family(family, grid, n_funcs);
    const CounterRng derive(family.seed);
    LfStarReport rep;
    rep.n_funcs = n_funcs;
    for (int i = 0; i < n_funcs; ++i) {
        const GridFunction out = apply_block(block, funcs[i]);
        rep.measured =
            std::max(rep.measured, estimate_lipschitz(out, 256, derive.derive(6000 + i)));
    }
    rep.ceiling = static_cast<double>(grid->size()) * block.net.output_bound / grid->min_spacing();
    rep.within = rep.measured <= rep.ceiling + 1e-9;
    return rep;
}

OperatorBlock OperatorBlock::from_json(const std::string& text) {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "bellmanlab-block-v1")
        throw std::invalid_argument("unknown block file format");
    OperatorBlock b;
    b.grid_checksum = j.at("grid_checksum").get<std::uint64_t>();
    b.seed = j.at("seed").get<std::uint64_t>();
    b.net.sizes = j.at("sizes").get<std::vector<int>>();
    b.net.output_bound = j.at("output_bound").get<double>();
    b.net.weights = j.at("weights").get<std::vector<Vec>>();
    b.net.biases = j.at("biases").get<std::vector<Vec>>();
    const json& m = j.at("metrics");
    b.metrics.eps_op_train = m.at("eps_op_train").get<double>();
    b.metrics.eps_op_test = m.at("eps_op_test").get<double>();
    b.metrics.eps_op_dense = m.at("eps_op_dense").get<double>();
    b.metrics.net_error_nodes = m.at("net_error_nodes").get<double>();
    b.metrics.interp_error_dense = m.at("interp_error_dense").get<double>();
    b.metrics.final_mse = m.at("final_mse").get<double>();
    b.metrics.epochs_run = m.at("epochs_run").get<int>();
    b.metrics.target_met = m.at("target_met").get<bool>();
    b.metrics.target = m.at("target").get<double>();
    b.metrics.output_lipschitz = m.at("output_lipschitz").get<double>();
    return b;
}

std::string OperatorBlock::to_json() const {
    json j;
    j["format"] = "bellmanlab-block-v1";
    j["grid_checksum"] = grid_checksum;
    j["seed"] = seed;
    j["sizes"] = net.sizes;
    j["output_bound"] = net.output_bound;
    j["weights"] = net.weights;
    j["biases"] = net.biases;
    j["metrics"] = {{"eps_op_train", metrics.eps_op_train},
                    {"eps_op_test", metrics.eps_op_test},
                    {"eps_op_dense", metrics.eps_op_dense},
                    {"net_error_nodes", metrics.net_error_nodes},
                    {"interp_error_dense", metrics.interp_error_dense},
                    {"final_mse", metrics.final_mse},
                    {"epochs_run", metrics.epochs_run},
                    {"target_met", metrics.target_met},
                    {"target", metrics.target},
                    {"output_lipschitz", metrics.output_lipschitz}};
    return j.dump(2) + "\n";
}

} // namespace bellmanlab
