#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "bellmanlab/mdp.hpp"

namespace bellmanlab {

enum class AxisKind { Time, State, Action };

struct GridAxis {
    AxisKind kind;
    std::string name;
    Vec nodes; // strictly increasing
};

/// A point of the domain, split into the pieces the engine needs.
struct DomainPoint {
    double t = 0.0;
    Vec s;
    Vec a;          // action coordinates (index coordinate for finite actions)
    int action = -1; // finite action index, -1 otherwise
};

/// Regular product grid over the compact domain. Continuous axes are listed
/// in (time, state..., action...) order and interpolated multilinearly; a
/// finite action set contributes per-action slices that are never
/// interpolated across.
///
/// Node ordering (fixed, documented for file portability): the finite
/// action index is the slowest coordinate, then continuous axes in listed
/// order with the last axis fastest:
///   flat = action * prod(n_axis) + row_major(continuous indices).
class GridDomain {
public:
    GridDomain(std::vector<GridAxis> axes, int finite_actions,
               std::vector<std::string> action_labels = {});

    static std::shared_ptr<const GridDomain> for_spec(const MdpSpec& spec,
                                                      const std::vector<int>& state_nodes,
                                                      int time_nodes = 0,
                                                      const std::vector<int>& action_nodes = {});

    const std::vector<GridAxis>& axes() const { return axes_; }
    int finite_actions() const { return finite_actions_; }
    const std::vector<std::string>& action_labels() const { return action_labels_; }

    std::size_t size() const { return total_; }        // M
    std::size_t slice_size() const { return slice_; }  // nodes per action slice

    DomainPoint point(std::size_t flat) const;
    double min_spacing() const; // h_min over continuous axes

    /// Uniform sample of the domain from a counter stream; used by norms
    /// and Lipschitz probing.
    DomainPoint sample(const class CounterRng& rng, std::uint64_t a, std::uint64_t b) const;

    std::uint64_t checksum() const { return checksum_; }

    bool same_as(const GridDomain& other) const { return checksum_ == other.checksum_; }

private:
    std::vector<GridAxis> axes_;
    int finite_actions_;
    std::vector<std::string> action_labels_;
    std::size_t slice_;
    std::size_t total_;
    std::uint64_t checksum_;
};

using GridPtr = std::shared_ptr<const GridDomain>;

struct LengthMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct DomainMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NonFiniteValue : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A function on the domain represented by node values plus multilinear
/// interpolation within each cell (exact lookup across finite actions).
/// Immutable after construction. Interpolated values are convex
/// combinations of cell corner values, and as a map from value vectors to
/// functions the decoder is 1-Lipschitz in the sup norms.
class GridFunction {
public:
    GridFunction(GridPtr domain, Vec values);

    const GridDomain& domain() const { return *domain_; }
    GridPtr domain_ptr() const { return domain_; }
    const Vec& values() const { return values_; }

    double value_at(std::size_t flat) const { return values_[flat]; }

    /// Multilinear evaluation; continuous coordinates are clamped to the
    /// domain box, finite actions are exact per-slice lookup.
    double eval(const DomainPoint& p) const;

    /// max over action choices of eval at (t, s): exact max over slices for
    /// finite actions, max over action-axis node tuples for box actions.
    double max_over_actions(double t, const Vec& s) const;

    double sup_norm_nodes() const;

private:
    GridPtr domain_;
    Vec values_;
};

/// Point sampling on the grid nodes: component j equals f(p_j).
Vec encode(const std::function<double(const DomainPoint&)>& f, const GridDomain& grid);

/// Wraps a value vector as a GridFunction (multilinear reconstruction).
GridFunction decode(GridPtr grid, Vec values);

/// encode(decode(v)) returns v exactly; this helper re-samples an existing
/// function onto its own grid in tests.
Vec encode(const GridFunction& f);

struct SupDistance {
    double value = 0.0;
    DomainPoint at;
};

/// Estimated sup distance: exact max over nodes plus n_dense quasi-random
/// interior probes (additive-recurrence sequence, deterministic). For two
/// functions on the same grid the node scan alone is already exact, since
/// their difference is again multilinear.
SupDistance sup_distance(const GridFunction& f, const GridFunction& g, int n_dense = 4096);

/// Sup distance between a grid function and an arbitrary reference
/// function, probed on nodes plus quasi-random points.
SupDistance sup_distance_fn(const GridFunction& f,
                            const std::function<double(const DomainPoint&)>& ref,
                            int n_dense = 4096);

/// Lower bound on the Lipschitz constant under the metric
/// |t-t'| + ||s-s'|| + ||a-a'||: max over adjacent-node difference
/// quotients (including across-action pairs) and n_pairs random point
/// pairs. For multilinear interpolants the adjacent scan alone is within a
/// dimension-dependent factor of the true constant.
double estimate_lipschitz(const GridFunction& f, int n_pairs, std::uint64_t seed);

} // namespace bellmanlab
