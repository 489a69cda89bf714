#include "bellmanlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "bellmanlab/rng.hpp"

namespace bellmanlab {

namespace {

std::uint64_t hash_doubles(std::uint64_t h, const Vec& v) {
    for (double x : v) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(x));
        std::memcpy(&bits, &x, sizeof(bits));
        h = mix64(h ^ bits);
    }
    return h;
}

// Additive-recurrence quasi-random sequence (generalized golden ratio);
// fills the unit cube evenly and deterministically.
class QuasiSequence {
public:
    explicit QuasiSequence(int dim) : alpha_(dim) {
        // phi_d is the unique root > 1 of x^(d+1) = x + 1
        double phi = 2.0;
        for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
        double a = 1.0 / phi;
        for (int i = 0; i < dim; ++i) {
            alpha_[i] = a;
            a /= phi;
        }
    }
    void point(int k, Vec& u) const {
        for (size_t i = 0; i < alpha_.size(); ++i) {
            const double x = 0.5 + (k + 1) * alpha_[i];
            u[i] = x - std::floor(x);
        }
    }

private:
    Vec alpha_;
};

double clamp(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

} // namespace

GridDomain::GridDomain(std::vector<GridAxis> axes, int finite_actions,
                       std::vector<std::string> action_labels)
    : axes_(std::move(axes)), finite_actions_(finite_actions),
      action_labels_(std::move(action_labels)) {
    if (finite_actions_ < 0) throw std::invalid_argument("finite_actions must be >= 0");
    slice_ = 1;
    for (const auto& ax : axes_) {
        if (ax.nodes.size() < 2) throw std::invalid_argument("axis needs at least 2 nodes");
        for (size_t i = 1; i < ax.nodes.size(); ++i)
            if (!(ax.nodes[i] > ax.nodes[i - 1]))
                throw std::invalid_argument("axis nodes must be strictly increasing");
        slice_ *= ax.nodes.size();
    }
    total_ = slice_ * std::max(1, finite_actions_);
    if (finite_actions_ > 0 && action_labels_.empty())
        for (int i = 0; i < finite_actions_; ++i) action_labels_.push_back("a" + std::to_string(i));

    std::uint64_t h = mix64(0x67726964ull); // "grid"
    h = mix64(h ^ static_cast<std::uint64_t>(finite_actions_));
    for (const auto& ax : axes_) {
        h = mix64(h ^ static_cast<std::uint64_t>(ax.kind));
        h = hash_doubles(h, ax.nodes);
    }
    checksum_ = h;
}

std::shared_ptr<const GridDomain> GridDomain::for_spec(const MdpSpec& spec,
                                                       const std::vector<int>& state_nodes,
                                                       int time_nodes,
                                                       const std::vector<int>& action_nodes) {
    if (static_cast<int>(state_nodes.size()) != spec.state_dim)
        throw std::invalid_argument("state_nodes must list one count per state dimension");
    auto linspace = [](double lo, double hi, int n) {
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
        return v;
    };
    std::vector<GridAxis> axes;
    if (spec.mode == DynamicsMode::ContinuousSde) {
        if (time_nodes < 2) throw std::invalid_argument("SDE grids need a time axis (>= 2 nodes)");
        axes.push_back({AxisKind::Time, "t", linspace(0.0, spec.horizon, time_nodes)});
    }
    for (int i = 0; i < spec.state_dim; ++i)
        axes.push_back({AxisKind::State, "s" + std::to_string(i),
                        linspace(spec.state_box.lo[i], spec.state_box.hi[i], state_nodes[i])});
    if (spec.n_actions() > 0) {
        return std::make_shared<const GridDomain>(std::move(axes), spec.n_actions(),
                                                  spec.action_labels);
    }
    if (static_cast<int>(action_nodes.size()) != spec.action_box.dim())
        throw std::invalid_argument("action_nodes must list one count per action dimension");
    for (int i = 0; i < spec.action_box.dim(); ++i)
        axes.push_back({AxisKind::Action, "a" + std::to_string(i),
                        linspace(spec.action_box.lo[i], spec.action_box.hi[i], action_nodes[i])});
    return std::make_shared<const GridDomain>(std::move(axes), 0);
}

DomainPoint GridDomain::point(std::size_t flat) const {
    DomainPoint p;
    if (finite_actions_ > 0) {
        p.action = static_cast<int>(flat / slice_);
        p.a = {static_cast<double>(p.action)};
        flat %= slice_;
    }
    // row-major, last axis fastest
    std::vector<std::size_t> idx(axes_.size());
    for (int i = static_cast<int>(axes_.size()) - 1; i >= 0; --i) {
        idx[i] = flat % axes_[i].nodes.size();
        flat /= axes_[i].nodes.size();
    }
    for (size_t i = 0; i < axes_.size(); ++i) {
        const double c = axes_[i].nodes[idx[i]];
        switch (axes_[i].kind) {
            case AxisKind::Time: p.t = c; break;
            case AxisKind::State: p.s.push_back(c); break;
            case AxisKind::Action: p.a.push_back(c); break;
        }
    }
    return p;
}

double GridDomain::min_spacing() const {
    double h = std::numeric_limits<double>::infinity();
    for (const auto& ax : axes_)
        for (size_t i = 1; i < ax.nodes.size(); ++i)
            h = std::min(h, ax.nodes[i] - ax.nodes[i - 1]);
    return h;
}

DomainPoint GridDomain::sample(const CounterRng& rng, std::uint64_t a, std::uint64_t b) const {
    DomainPoint p;
    std::uint64_t k = 0;
    for (const auto& ax : axes_) {
        const double c = rng.uniform_in(ax.nodes.front(), ax.nodes.back(), a, b, k++);
        switch (ax.kind) {
            case AxisKind::Time: p.t = c; break;
            case AxisKind::State: p.s.push_back(c); break;
            case AxisKind::Action: p.a.push_back(c); break;
        }
    }
    if (finite_actions_ > 0) {
        p.action = static_cast<int>(rng.index_below(finite_actions_, a, b, k++));
        p.a = {static_cast<double>(p.action)};
    }
    return p;
}

GridFunction::GridFunction(GridPtr domain, Vec values)
    : domain_(std::move(domain)), values_(std::move(values)) {
    if (!domain_) throw std::invalid_argument("null grid domain");
    if (values_.size() != domain_->size())
        throw LengthMismatch("value vector length does not match grid size");
    for (size_t j = 0; j < values_.size(); ++j)
        if (!std::isfinite(values_[j]))
            throw NonFiniteValue("non-finite grid value at node " + std::to_string(j));
}

namespace {

struct CellWeight {
    std::size_t i0;   // lower node index
    double w1;        // weight of upper node
};

CellWeight locate(const Vec& nodes, double x) {
    const double c = clamp(x, nodes.front(), nodes.back());
    auto it = std::upper_bound(nodes.begin(), nodes.end(), c);
    std::size_t hi = std::min<std::size_t>(nodes.size() - 1,
                                           std::max<std::size_t>(1, it - nodes.begin()));
    const std::size_t lo = hi - 1;
    const double w = (c - nodes[lo]) / (nodes[hi] - nodes[lo]);
    return {lo, w};
}

} // namespace

double GridFunction::eval(const DomainPoint& p) const {
    const auto& axes = domain_->axes();
    std::vector<CellWeight> cw(axes.size());
    size_t is = 0, ia = 0;
    for (size_t i = 0; i < axes.size(); ++i) {
        double c = 0.0;
        switch (axes[i].kind) {
            case AxisKind::Time: c = p.t; break;
            case AxisKind::State: c = p.s.at(is++); break;
            case AxisKind::Action: c = p.a.at(ia++); break;
        }
        cw[i] = locate(axes[i].nodes, c);
    }
    std::size_t base = 0;
    if (domain_->finite_actions() > 0) {
        if (p.action < 0 || p.action >= domain_->finite_actions())
            throw std::invalid_argument("finite action index out of range");
        base = static_cast<std::size_t>(p.action) * domain_->slice_size();
    }
    // accumulate over the 2^k cell corners
    const size_t k = axes.size();
    double acc = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << k); ++corner) {
        double w = 1.0;
        std::size_t flat = 0;
        for (size_t i = 0; i < k; ++i) {
            const bool up = corner & (std::size_t{1} << i);
            w *= up ? cw[i].w1 : 1.0 - cw[i].w1;
            flat = flat * axes[i].nodes.size() + cw[i].i0 + (up ? 1 : 0);
        }
        if (w != 0.0) acc += w * values_[base + flat];
    }
    return acc;
}

double GridFunction::max_over_actions(double t, const Vec& s) const {
    DomainPoint p;
    p.t = t;
    p.s = s;
    if (domain_->finite_actions() > 0) {
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < domain_->finite_actions(); ++a) {
            p.action = a;
            p.a = {static_cast<double>(a)};
            best = std::max(best, eval(p));
        }
        return best;
    }
    std::vector<const GridAxis*> act;
    for (const auto& ax : domain_->axes())
        if (ax.kind == AxisKind::Action) act.push_back(&ax);
    if (act.empty()) throw std::invalid_argument("grid has no action axis");
    std::vector<std::size_t> idx(act.size(), 0);
    double best = -std::numeric_limits<double>::infinity();
    for (;;) {
        p.a.clear();
        for (size_t i = 0; i < act.size(); ++i) p.a.push_back(act[i]->nodes[idx[i]]);
        best = std::max(best, eval(p));
        size_t i = 0;
        for (; i < act.size(); ++i) {
            if (++idx[i] < act[i]->nodes.size()) break;
            idx[i] = 0;
        }
        if (i == act.size()) break;
    }
    return best;
}

double GridFunction::sup_norm_nodes() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

Vec encode(const std::function<double(const DomainPoint&)>& f, const GridDomain& grid) {
    Vec v(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        v[j] = f(grid.point(j));
        if (!std::isfinite(v[j]))
            throw NonFiniteValue("non-finite sample at node " + std::to_string(j));
    }
    return v;
}

GridFunction decode(GridPtr grid, Vec values) { return GridFunction(std::move(grid), std::move(values)); }

Vec encode(const GridFunction& f) {
    return encode([&f](const DomainPoint& p) { return f.eval(p); }, f.domain());
}

namespace {

int quasi_dim(const GridDomain& g) {
    return static_cast<int>(g.axes().size()) + (g.finite_actions() > 0 ? 1 : 0);
}

DomainPoint quasi_point(const GridDomain& g, const QuasiSequence& seq, int k, Vec& u) {
    seq.point(k, u);
    DomainPoint p;
    size_t ui = 0;
    for (const auto& ax : g.axes()) {
        const double c = ax.nodes.front() + (ax.nodes.back() - ax.nodes.front()) * u[ui++];
        switch (ax.kind) {
            case AxisKind::Time: p.t = c; break;
            case AxisKind::State: p.s.push_back(c); break;
            case AxisKind::Action: p.a.push_back(c); break;
        }
    }
    if (g.finite_actions() > 0) {
        p.action = std::min(g.finite_actions() - 1,
                            static_cast<int>(u[ui] * g.finite_actions()));
        p.a = {static_cast<double>(p.action)};
    }
    return p;
}

} // namespace

SupDistance sup_distance(const GridFunction& f, const GridFunction& g, int n_dense) {
    if (!f.domain().same_as(g.domain()))
        throw DomainMismatch("sup_distance requires functions on the same grid");
    SupDistance out;
    const auto& dom = f.domain();
    for (std::size_t j = 0; j < dom.size(); ++j) {
        const double d = std::abs(f.value_at(j) - g.value_at(j));
        if (d > out.value) {
            out.value = d;
            out.at = dom.point(j);
        }
    }
    QuasiSequence seq(quasi_dim(dom));
    Vec u(quasi_dim(dom));
    for (int k = 0; k < n_dense; ++k) {
        const DomainPoint p = quasi_point(dom, seq, k, u);
        const double d = std::abs(f.eval(p) - g.eval(p));
        if (d > out.value) {
            out.value = d;
            out.at = p;
        }
    }
    return out;
}

SupDistance sup_distance_fn(const GridFunction& f,
                            const std::function<double(const DomainPoint&)>& ref, int n_dense) {
    SupDistance out;
    const auto& dom = f.domain();
    for (std::size_t j = 0; j < dom.size(); ++j) {
        const DomainPoint p = dom.point(j);
        const double d = std::abs(f.value_at(j) - ref(p));
        if (d > out.value) {
            out.value = d;
            out.at = p;
        }
    }
    QuasiSequence seq(quasi_dim(dom));
    Vec u(quasi_dim(dom));
    for (int k = 0; k < n_dense; ++k) {
        const DomainPoint p = quasi_point(dom, seq, k, u);
        const double d = std::abs(f.eval(p) - ref(p));
        if (d > out.value) {
            out.value = d;
            out.at = p;
        }
    }
    return out;
}

namespace {

double point_metric(const GridDomain& dom, const DomainPoint& x, const DomainPoint& y) {
    double d = 0.0;
    bool has_time = false;
    for (const auto& ax : dom.axes()) has_time |= ax.kind == AxisKind::Time;
    if (has_time) d += std::abs(x.t - y.t);
    double ss = 0.0;
    for (size_t i = 0; i < x.s.size(); ++i) ss += (x.s[i] - y.s[i]) * (x.s[i] - y.s[i]);
    d += std::sqrt(ss);
    double aa = 0.0;
    for (size_t i = 0; i < x.a.size(); ++i) aa += (x.a[i] - y.a[i]) * (x.a[i] - y.a[i]);
    d += std::sqrt(aa);
    return d;
}

} // namespace

double estimate_lipschitz(const GridFunction& f, int n_pairs, std::uint64_t seed) {
    if (n_pairs < 0) throw std::invalid_argument("n_pairs must be >= 0");
    const auto& dom = f.domain();
    const auto& axes = dom.axes();
    double best = 0.0;

    // adjacent-node scan along each continuous axis
    std::vector<std::size_t> strides(axes.size());
    {
        std::size_t st = 1;
        for (int i = static_cast<int>(axes.size()) - 1; i >= 0; --i) {
            strides[i] = st;
            st *= axes[i].nodes.size();
        }
    }
    const int n_act = std::max(1, dom.finite_actions());
    const std::size_t slice = dom.slice_size();
    for (int act = 0; act < n_act; ++act) {
        const std::size_t base = static_cast<std::size_t>(act) * slice;
        for (std::size_t j = 0; j < slice; ++j) {
            for (size_t i = 0; i < axes.size(); ++i) {
                const std::size_t n = axes[i].nodes.size();
                const std::size_t idx = (j / strides[i]) % n;
                if (idx + 1 < n) {
                    const double dh = axes[i].nodes[idx + 1] - axes[i].nodes[idx];
                    const double q =
                        std::abs(f.value_at(base + j + strides[i]) - f.value_at(base + j)) / dh;
                    best = std::max(best, q);
                }
            }
        }
    }
    // across finite action slices (embedded coordinate distance = index gap)
    for (int a1 = 0; a1 + 1 < n_act; ++a1)
        for (std::size_t j = 0; j < slice; ++j) {
            const double q = std::abs(f.value_at((a1 + 1) * slice + j) - f.value_at(a1 * slice + j));
            best = std::max(best, q);
        }

    CounterRng rng(seed);
    for (int i = 0; i < n_pairs; ++i) {
        const DomainPoint x = dom.sample(rng, 2 * static_cast<std::uint64_t>(i), 0);
        const DomainPoint y = dom.sample(rng, 2 * static_cast<std::uint64_t>(i) + 1, 0);
        const double d = point_metric(dom, x, y);
        if (d < 1e-12) continue;
        best = std::max(best, std::abs(f.eval(x) - f.eval(y)) / d);
    }
    return best;
}

} // namespace bellmanlab
