#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bellmanlab/bellman.hpp"
#include "bellmanlab/function_family.hpp"
#include "bellmanlab/grid.hpp"
#include "bellmanlab/mdp.hpp"

namespace bellmanlab {

struct ShapeMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct GridMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct TrainingDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense feedforward net R^M -> R^M with tanh hidden layers and a bounded
/// final layer y_j = output_bound * tanh(z_j), so every output component
/// satisfies |y_j| <= output_bound by construction.
struct Mlp {
    std::vector<int> sizes;              // e.g. {M, 4M, 4M, M}
    std::vector<Vec> weights;            // weights[l]: sizes[l+1] x sizes[l], row-major
    std::vector<Vec> biases;             // biases[l]: sizes[l+1]
    double output_bound = 1.0;

    static Mlp make(const std::vector<int>& sizes, double output_bound, std::uint64_t seed);

    int input_size() const { return sizes.front(); }
    int output_size() const { return sizes.back(); }
    std::size_t parameter_count() const;

    Vec forward(const Vec& input) const;

    /// Gradient of the squared-error loss 0.5 * sum_j (y_j - target_j)^2
    /// with respect to all parameters (flattened weights then biases,
    /// layer by layer), via backpropagation.
    Vec loss_gradient(const Vec& input, const Vec& target, double* loss_out = nullptr) const;

    double& parameter(std::size_t flat);
    double parameter(std::size_t flat) const;
};

/// Central finite-difference gradient of the same loss for a subset of
/// parameters; the independent check against loss_gradient.
Vec fd_loss_gradient(const Mlp& net, const Vec& input, const Vec& target,
                     const std::vector<std::size_t>& params, double h_fd);

/// Max relative disagreement between backprop and central differences over
/// >= n_params randomly chosen parameters.
double grad_check(const Mlp& net, const Vec& input, const Vec& target, double h_fd,
                  int n_params = 50, std::uint64_t seed = 1);

struct TrainMetrics {
    double eps_op_train = 0.0;   // max over train functions of nodewise sup error
    double eps_op_test = 0.0;    // same on held-out functions (the recorded value)
    double eps_op_dense = 0.0;   // sup error probed off-grid on held-out functions
    double net_error_nodes = 0.0;    // E1: network error at the nodes (decoder is 1-Lipschitz)
    double interp_error_dense = 0.0; // E2: interpolation error of the target residual
    double final_mse = 0.0;
    int epochs_run = 0;
    bool target_met = false;
    double target = 0.0;
    double output_lipschitz = 0.0; // measured on held-out outputs
};

/// One operator block: encode -> net -> decode with recorded training
/// metadata. Serialized blocks reload bit-identically.
struct OperatorBlock {
    std::uint64_t grid_checksum = 0;
    Mlp net;
    std::uint64_t seed = 0;
    TrainMetrics metrics;

    std::string to_json() const;
    static OperatorBlock from_json(const std::string& text);
};

Vec block_forward(const OperatorBlock& block, const Vec& input);

GridFunction apply_block(const OperatorBlock& block, const GridFunction& q);

struct TrainConfig {
    int train_count = 256;
    int test_count = 64;
    int epochs = 40000;       // budget; early stop on the held-out sup error
    int eval_every = 200;
    double learn_rate = 0.05; // fixed step
    double momentum = 0.9;
    int batch_size = 32;
    double target = 0.0;      // 0 = run the full budget
    std::vector<int> hidden;  // empty = default {4M, 4M}
    double output_bound = 0.0; // 0 = default 2 * (1 + beta) * amplitude_cap
};

/// Fits the net to (encode(Q), encode(B Q - Q)) pairs drawn from the
/// family, by mini-batch gradient descent with momentum on the mean
/// squared node error; the recorded quantity is the held-out nodewise sup
/// error. Deterministic given (seed, hyperparameters). Keeps the
/// parameters of the best held-out epoch.
OperatorBlock train_block(const MdpSpec& spec, const FunctionFamily& family, const GridPtr& grid,
                          const TrainConfig& tc, const SimConfig& cfg, std::uint64_t seed);

struct LfStarReport {
    double measured = 0.0; // max over sampled Q of Lipschitz(apply_block(Q))
    double ceiling = 0.0;  // M * output_bound * L_phi, L_phi = 1/h_min
    bool within = false;
    int n_funcs = 0;
};

LfStarReport measure_output_lipschitz(const OperatorBlock& block, const FunctionFamily& family,
                                      const GridPtr& grid, int n_funcs);

} // namespace bellmanlab
