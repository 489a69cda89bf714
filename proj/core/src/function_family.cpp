#include "bellmanlab/function_family.hpp"

#include <algorithm>
#include <cmath>

#include "bellmanlab/rng.hpp"

namespace bellmanlab {

namespace {

// normalized coordinates of a node: every axis mapped to [0,1], finite
// action index appended as one more coordinate
Vec normalized_coords(const GridDomain& grid, std::size_t flat) {
    const DomainPoint p = grid.point(flat);
    Vec u;
    size_t is = 0, ia = 0;
    for (const auto& ax : grid.axes()) {
        double c = 0.0;
        switch (ax.kind) {
            case AxisKind::Time: c = p.t; break;
            case AxisKind::State: c = p.s[is++]; break;
            case AxisKind::Action: c = p.a[ia++]; break;
        }
        u.push_back((c - ax.nodes.front()) / (ax.nodes.back() - ax.nodes.front()));
    }
    if (grid.finite_actions() > 0)
        u.push_back(grid.finite_actions() > 1
                        ? static_cast<double>(p.action) / (grid.finite_actions() - 1)
                        : 0.0);
    return u;
}

Vec bump_values(const GridDomain& grid, const CounterRng& rng, std::uint64_t id, int n_bumps) {
    const std::size_t m = grid.size();
    std::vector<Vec> coords(m);
    for (std::size_t j = 0; j < m; ++j) coords[j] = normalized_coords(grid, j);
    const size_t dim = coords[0].size();

    Vec v(m, 0.0);
    for (int b = 0; b < n_bumps; ++b) {
        Vec center(dim);
        for (size_t i = 0; i < dim; ++i)
            center[i] = rng.uniform(id, 10 + b, i);
        const double width = rng.uniform_in(0.12, 0.45, id, 60 + b, 0);
        const double amp = rng.uniform_in(-1.0, 1.0, id, 90 + b, 0);
        for (std::size_t j = 0; j < m; ++j) {
            double d2 = 0.0;
            for (size_t i = 0; i < dim; ++i) {
                const double d = coords[j][i] - center[i];
                d2 += d * d;
            }
            v[j] += amp * std::exp(-d2 / (2.0 * width * width));
        }
    }
    return v;
}

double nodemax(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// scales values into the caps; returns false only for the zero function
bool fit_to_caps(const GridPtr& grid, Vec& v, double amplitude_cap, double lipschitz_cap,
                 double target_amplitude, std::uint64_t lip_seed) {
    const double sup = nodemax(v);
    if (sup < 1e-300 || amplitude_cap <= 0.0) {
        std::fill(v.begin(), v.end(), 0.0);
        return amplitude_cap >= 0.0;
    }
    double scale = std::min(target_amplitude, amplitude_cap) / sup;
    const double lip = estimate_lipschitz(GridFunction(grid, v), 128, lip_seed);
    if (lip * scale > lipschitz_cap) scale = lipschitz_cap / lip * 0.999;
    for (double& x : v) x *= scale;
    return true;
}

} // namespace

std::vector<GridFunction> sample_target_family(const FunctionFamily& family, const GridPtr& grid,
                                               int count) {
    if (count < 0) throw std::invalid_argument("count must be >= 0");
    if (family.amplitude_cap < 0.0 || family.lipschitz_cap < 0.0)
        throw std::invalid_argument("family caps must be >= 0");
    for (const auto& c : family.curriculum)
        if (!c.domain().same_as(*grid))
            throw DomainMismatch("curriculum function lives on a different grid");

    CounterRng rng(family.seed);
    std::vector<GridFunction> out;
    out.reserve(count);

    const bool use_curriculum = family.curriculum_fraction > 0.0 && !family.curriculum.empty();
    for (int i = 0; i < count; ++i) {
        const std::uint64_t id = static_cast<std::uint64_t>(i);
        Vec v;
        if (use_curriculum && i < static_cast<int>(family.curriculum.size())) {
            // leading draws are the curriculum functions themselves
            v = family.curriculum[i].values();
        } else if (use_curriculum &&
                   rng.uniform(id, 1, 0) < family.curriculum_fraction) {
            const auto& base =
                family.curriculum[rng.index_below(family.curriculum.size(), id, 2, 0)];
            v = base.values();
            Vec pert = bump_values(*grid, rng, id, std::max(1, family.n_bumps / 2));
            const double psup = nodemax(pert);
            if (psup > 1e-300) {
                const double pamp =
                    family.perturbation_scale * rng.uniform(id, 3, 0) / psup;
                for (std::size_t j = 0; j < v.size(); ++j) v[j] += pamp * pert[j];
            }
        } else {
            v = bump_values(*grid, rng, id, family.n_bumps);
        }

        // amplitude target biased toward small functions
        const double u = rng.uniform(id, 4, 0);
        const double target = family.amplitude_cap * std::max(0.02, u * u);
        if (!fit_to_caps(grid, v, family.amplitude_cap, family.lipschitz_cap, target,
                         rng.derive(7000 + id)))
            throw RejectionBudgetExceeded("family caps unsatisfiable");

        GridFunction f(grid, std::move(v));
        // verify caps; one corrective rescale, then give up
        for (int attempt = 0;; ++attempt) {
            const double sup = f.sup_norm_nodes();
            const double lip = estimate_lipschitz(f, 128, rng.derive(8000 + id + attempt));
            const bool ok = sup <= family.amplitude_cap + 1e-12 &&
                            lip <= family.lipschitz_cap * 1.02 + 1e-12;
            if (ok) break;
            if (attempt >= 2) throw RejectionBudgetExceeded("family caps unsatisfiable");
            const double shrink =
                0.9 * std::min(sup > 0 ? family.amplitude_cap / sup : 1.0,
                               lip > 0 ? family.lipschitz_cap / lip : 1.0);
            Vec w = f.values();
            for (double& x : w) x *= std::min(1.0, shrink);
            f = GridFunction(grid, std::move(w));
        }
        out.push_back(std::move(f));
    }
    return out;
}

} // namespace bellmanlab
