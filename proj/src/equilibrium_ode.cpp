#include "eqlib/equilibrium_ode.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "eqlib/errors.hpp"

namespace eqlib::ode {

namespace od = boost::numeric::odeint;

void ModelParams::validate() const {
    if (!(gamma1 > 0.0) || !(gamma2 > 0.0))
        throw ConfigError("params: risk aversions must be > 0");
    if (!(sigma > 0.0)) throw ConfigError("params: sigma must be > 0");
    if (delta() == 0.0)
        throw ConfigError(
            "params: delta = 0 (identical risk-weighted endowments); the equilibrium is "
            "frictionless and the ergodic ODE degenerates");
}

namespace {

double interp(const std::vector<double>& xs, const std::vector<double>& vs, double x,
              const char* what) {
    if (x < xs.front() || x > xs.back()) {
        std::ostringstream os;
        os << what << ": x = " << x << " outside solved grid [" << xs.front() << ", "
           << xs.back() << "]; re-solve with larger x_max";
        throw NumericError(os.str());
    }
    // uniform grid
    const double h = (xs.back() - xs.front()) / double(xs.size() - 1);
    size_t i = std::min(xs.size() - 2, size_t(std::max(0.0, (x - xs.front()) / h)));
    const double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    return vs[i] + t * (vs[i + 1] - vs[i]);
}

// Backward integration state for the pasted first-order problem plus the
// stationary-law accumulators:
//   y' = -a x^2 + b + F(y)
//   Itilde' = -w                 Itilde(x) = int_x^{xmax} w(u) du
//   Khat'   = w Khat - 1         Khat(0)   = int_0^{xmax} exp(-I(u)) du
//   Vhat'   = w Vhat - x^2       Vhat(0)   = int_0^{xmax} u^2 exp(-I(u)) du
// with w = (2/delta^2) (G')^{-1}(y), the speed-measure exponent derivative.
struct Shoot {
    const cost::CostSpec& spec;
    double a, b, two_over_d2, x_max;

    double F(double y) const { return two_over_d2 * cost::eval_legendre(spec, y); }
    double w(double y) const { return two_over_d2 * cost::eval_Gprime_inverse(spec, std::fabs(y)); }

    // in u = x_max - x
    void rhs1(const std::array<double, 1>& s, std::array<double, 1>& d, double u) const {
        const double x = x_max - u;
        d[0] = a * x * x - b - F(s[0]);
    }
    void rhs4(const std::array<double, 4>& s, std::array<double, 4>& d, double u) const {
        const double x = x_max - u;
        const double wv = w(s[0]);
        d[0] = a * x * x - b - F(s[0]);
        d[1] = wv;
        d[2] = -(wv * s[2] - 1.0);
        d[3] = -(wv * s[3] - x * x);
    }

    double anchor() const {
        const double v = a * x_max * x_max - b;
        if (v < 0.0)
            throw NumericError("solve_first_order: a x_max^2 - b < 0, supersolution anchor "
                               "undefined (bracket error)");
        // F^{-1}(v): v = (2/d2) G*(y)
        return cost::eval_legendre_inverse(spec, v / two_over_d2);
    }
};

struct ShootResult {
    double y0 = 0.0;
    bool dived = false;
};

// Integrate y only, for bisection over b. Observer-free adaptive loop with a
// dive guard: once y goes clearly negative the sign of y(0) is decided.
ShootResult shoot_y0(const Shoot& sh, const SolverOptions& opt) {
    using state = std::array<double, 1>;
    const double y_anchor = sh.anchor();
    const double floor = -0.05 * std::max(1.0, y_anchor);
    auto stepper =
        od::make_controlled(opt.abs_tol_scale * std::max(1.0, y_anchor), opt.rel_tol,
                            od::runge_kutta_dopri5<state>());
    state s{y_anchor};
    double u = 0.0, du = sh.x_max / 1024.0;
    auto sys = [&](const state& st, state& d, double t) { sh.rhs1(st, d, t); };
    long steps = 0;
    while (u < sh.x_max) {
        du = std::min(du, sh.x_max - u);
        if (od::fail == stepper.try_step(sys, s, u, du)) {
            if (++steps > 4000000)
                throw NumericError("shoot: integrator stalled near x = " +
                                   std::to_string(sh.x_max - u));
            continue;
        }
        if (s[0] < floor) return {s[0], true};
        if (++steps > 4000000)
            throw NumericError("shoot: step budget exhausted near x = " +
                               std::to_string(sh.x_max - u));
    }
    return {s[0], false};
}

// Full backward pass recording (y, Itilde) at grid abscissae and the
// stationary accumulators at x = 0. xs_desc must descend from x_max to 0.
struct FullShootOut {
    std::vector<double> y, itilde;  // aligned with xs_desc
    double khat0 = 0.0, vhat0 = 0.0, itilde0 = 0.0;
};

FullShootOut shoot_full(const Shoot& sh, std::span<const double> xs_desc,
                        const SolverOptions& opt) {
    using state = std::array<double, 4>;
    const double y_anchor = sh.anchor();
    auto stepper =
        od::make_dense_output(opt.abs_tol_scale * std::max(1.0, y_anchor), opt.rel_tol,
                              od::runge_kutta_dopri5<state>());
    state s0{y_anchor, 0.0, 0.0, 0.0};
    stepper.initialize(s0, 0.0, sh.x_max / 1024.0);
    auto sys = [&](const state& st, state& d, double t) { sh.rhs4(st, d, t); };

    FullShootOut out;
    out.y.resize(xs_desc.size());
    out.itilde.resize(xs_desc.size());
    size_t next = 0;
    // record anchor point(s) at u = 0
    while (next < xs_desc.size() && sh.x_max - xs_desc[next] <= 0.0) {
        out.y[next] = y_anchor;
        out.itilde[next] = 0.0;
        ++next;
    }
    long steps = 0;
    while (stepper.current_time() < sh.x_max) {
        stepper.do_step(sys);
        if (++steps > 4000000)
            throw NumericError("shoot: step budget exhausted near x = " +
                               std::to_string(sh.x_max - stepper.current_time()));
        const double t1 = std::min(stepper.current_time(), sh.x_max);
        while (next < xs_desc.size() && sh.x_max - xs_desc[next] <= t1) {
            state si;
            stepper.calc_state(sh.x_max - xs_desc[next], si);
            out.y[next] = si[0];
            out.itilde[next] = si[1];
            ++next;
        }
    }
    state sf;
    stepper.calc_state(sh.x_max, sf);
    while (next < xs_desc.size()) {
        out.y[next] = sf[0];
        out.itilde[next] = sf[1];
        ++next;
    }
    out.itilde0 = sf[1];
    out.khat0 = sf[2];
    out.vhat0 = sf[3];
    return out;
}

Shoot make_shoot(const cost::CostSpec& spec, const ModelParams& params, double b,
                 double x_max) {
    const double d2 = params.delta() * params.delta();
    const double a = params.gamma_mean() * params.sigma * params.sigma / d2;
    return Shoot{spec, a, b, 2.0 / d2, x_max};
}

double growth_reference(const cost::CostSpec& spec, const ModelParams& params, double x) {
    const double v = params.gamma_mean() * params.sigma * params.sigma * x * x / 2.0;
    return cost::eval_legendre_inverse(spec, v);
}

std::vector<double> uniform_grid(double x_max, int n) {
    if (n < 5 || n % 2 == 0)
        throw ConfigError("grid_n must be an odd count >= 5 so that 0 is a node");
    std::vector<double> g(n);
    const double h = 2.0 * x_max / double(n - 1);
    for (int i = 0; i < n; ++i) g[i] = -x_max + h * i;
    g[(n - 1) / 2] = 0.0;
    return g;
}

// Generic std guess used to pick x_max before the solution is known: the
// canonical argument scale of the dominant term (variance factor ~ 1).
double std_guess(const cost::CostSpec& spec, const ModelParams& params) {
    double g = 0.0;
    for (const auto& t : spec.terms())
        g = std::max(g, 1.0 / canonical_arg_scale(t.q, t.lambda, params));
    return g;
}

}  // namespace

FirstOrderCurve solve_first_order(const cost::CostSpec& spec, const ModelParams& params,
                                  double b, double x_max, int n_out,
                                  const SolverOptions& opt) {
    if (!spec.smooth()) throw ConfigError("solve_first_order: smooth cost required");
    params.validate();
    Shoot sh = make_shoot(spec, params, b, x_max);
    std::vector<double> xs(n_out);
    for (int i = 0; i < n_out; ++i) xs[i] = x_max * double(n_out - 1 - i) / double(n_out - 1);
    auto out = shoot_full(sh, xs, opt);
    FirstOrderCurve c;
    c.xs.assign(xs.rbegin(), xs.rend());
    c.ys.assign(out.y.rbegin(), out.y.rend());
    return c;
}

double find_bF(const cost::CostSpec& spec, const ModelParams& params, double x_max,
               const SolverOptions& opt) {
    if (!spec.smooth()) throw ConfigError("find_bF: smooth cost required");
    params.validate();
    const double a = make_shoot(spec, params, 0.0, x_max).a;
    double b_hi = 4.0 * a * (x_max / 12.0) * (x_max / 12.0);
    if (!(b_hi > 0.0)) b_hi = 1.0;
    int doublings = 0;
    while (true) {
        ShootResult r = shoot_y0(make_shoot(spec, params, b_hi, x_max), opt);
        if (r.dived || r.y0 < 0.0) break;
        b_hi *= 2.0;
        if (++doublings > 60)
            throw NumericError("find_bF: no sign change after 60 bracket doublings; "
                               "parameters do not admit a pasting constant");
    }
    double b_lo = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (b_lo + b_hi);
        ShootResult r = shoot_y0(make_shoot(spec, params, mid, x_max), opt);
        if (!r.dived && std::fabs(r.y0) <= opt.bisect_tol * mid) return mid;
        if (r.dived || r.y0 < 0.0)
            b_hi = mid;
        else
            b_lo = mid;
        if (b_hi - b_lo <= 1e-14 * b_hi) break;
    }
    return 0.5 * (b_lo + b_hi);
}

OdeSolution solve_g(const cost::CostSpec& spec, const ModelParams& params, double x_max,
                    int grid_n, const SolverOptions& opt) {
    if (!spec.smooth()) throw ConfigError("solve_g: smooth cost required");
    params.validate();

    bool auto_range = !(x_max > 0.0);
    if (auto_range) x_max = 12.0 * std_guess(spec, params);

    OdeSolution sol;
    for (int attempt = 0; attempt < 4; ++attempt) {
        const double bF = find_bF(spec, params, x_max, opt);
        Shoot sh = make_shoot(spec, params, bF, x_max);

        std::vector<double> grid = uniform_grid(x_max, grid_n);
        const int mid = (grid_n - 1) / 2;
        std::vector<double> xs_desc(grid.rbegin(), grid.rbegin() + mid + 1);  // x_max down to 0
        auto out = shoot_full(sh, xs_desc, opt);

        sol = OdeSolution{};
        sol.kind = SolutionKind::numeric;
        sol.spec = spec;
        sol.params = params;
        sol.grid = std::move(grid);
        sol.b_F = bF;
        sol.a = sh.a;
        sol.g.assign(grid_n, 0.0);
        sol.g_prime.assign(grid_n, 0.0);
        sol.drift_integral.assign(grid_n, 0.0);
        for (int k = 0; k <= mid; ++k) {
            const int i = grid_n - 1 - k;       // node for xs_desc[k] (positive x side)
            const double y = std::max(0.0, out.y[k]);
            sol.g[i] = -y;
            sol.g[grid_n - 1 - i] = y;          // odd reflection
            // g'(x) = -y'(x) = -(a x^2 - b - F(y)); even in x
            const double x = sol.grid[i];
            const double gp = -(sh.a * x * x - bF - sh.F(y));
            sol.g_prime[i] = gp;
            sol.g_prime[grid_n - 1 - i] = gp;
            const double I = out.itilde0 - out.itilde[k];  // I(x) = int_0^x w
            sol.drift_integral[i] = I;
            sol.drift_integral[grid_n - 1 - i] = I;
        }
        sol.g[mid] = 0.0;
        sol.stationary_variance = out.vhat0 / out.khat0;

        const double ref = growth_reference(spec, params, x_max);
        sol.growth_ratio_at_xmax = std::fabs(sol.g.back()) / ref;
        sol.growth_ratio_ok =
            sol.growth_ratio_at_xmax >= 0.9 && sol.growth_ratio_at_xmax <= 1.1;

        if (!auto_range) break;
        const double sd = std::sqrt(sol.stationary_variance);
        if (x_max >= 9.0 * sd && x_max <= 18.0 * sd) break;
        x_max = 12.0 * sd;
    }
    return sol;
}

CanonicalSolution solve_canonical(double q, double x_max, int grid_n,
                                  const SolverOptions& opt) {
    if (!(q > 1.0 && q <= 2.0)) throw ConfigError("solve_canonical: q must be in (1, 2]");
    const cost::CostSpec spec = cost::CostSpec::power(q, q);
    ModelParams p;
    p.gamma1 = p.gamma2 = 2.0;
    p.sigma = 1.0;
    p.beta1 = std::sqrt(2.0);
    p.beta2 = -std::sqrt(2.0);
    p.s = 0.0;
    p.phi1_init = 0.0;
    // gamma sigma^2 = 2, delta^2 = 2, so a = 1 and F = G* with lambda = q.

    const double bF = find_bF(spec, p, x_max, opt);
    Shoot sh = make_shoot(spec, p, bF, x_max);
    std::vector<double> grid = uniform_grid(x_max, grid_n);
    const int mid = (grid_n - 1) / 2;
    std::vector<double> xs_desc(grid.rbegin(), grid.rbegin() + mid + 1);
    auto out = shoot_full(sh, xs_desc, opt);

    CanonicalSolution c;
    c.q = q;
    c.b_F = bF;
    c.grid = std::move(grid);
    c.g.assign(grid_n, 0.0);
    c.g_prime.assign(grid_n, 0.0);
    c.drift_integral.assign(grid_n, 0.0);
    for (int k = 0; k <= mid; ++k) {
        const int i = grid_n - 1 - k;
        const double y = std::max(0.0, out.y[k]);
        c.g[i] = -y;
        c.g[grid_n - 1 - i] = y;
        const double x = c.grid[i];
        const double gp = -(sh.a * x * x - bF - sh.F(y));
        c.g_prime[i] = gp;
        c.g_prime[grid_n - 1 - i] = gp;
        const double I = out.itilde0 - out.itilde[k];
        c.drift_integral[i] = I;
        c.drift_integral[grid_n - 1 - i] = I;
    }
    c.g[mid] = 0.0;
    c.c_tilde = 1.0 / (2.0 * out.khat0);
    c.v_tilde = out.vhat0 / out.khat0;
    c.stationary_variance = c.v_tilde;
    c.growth_ratio = std::fabs(c.g.back()) / growth_reference(spec, p, x_max);
    if (std::exp(-(out.itilde0)) > 1e-12)
        throw NumericError("solve_canonical: stationary-density tail not converged at the "
                           "grid end; extend x_max");
    return c;
}

double canonical_arg_scale(double q, double lambda_q, const ModelParams& params) {
    const double gs2 = params.gamma_mean() * params.sigma * params.sigma;
    const double d = std::fabs(params.delta());
    return std::pow(2.0, (q - 1.0) / (q + 2.0)) * std::pow(q * gs2 / lambda_q, 1.0 / (q + 2.0)) *
           std::pow(d, -2.0 * q / (q + 2.0));
}

double canonical_value_scale(double q, double lambda_q, const ModelParams& params) {
    const double gs2 = params.gamma_mean() * params.sigma * params.sigma;
    const double d = std::fabs(params.delta());
    return std::pow(lambda_q / q, 3.0 / (q + 2.0)) *
           std::pow(gs2 * std::pow(d, 4.0) / 8.0, (q - 1.0) / (q + 2.0));
}

OdeSolution rescale_to_g(const CanonicalSolution& canonical, double lambda_q,
                         const ModelParams& params) {
    params.validate();
    const double q = canonical.q;
    const double xi = canonical_arg_scale(q, lambda_q, params);
    const double av = canonical_value_scale(q, lambda_q, params);
    if (!(xi > 0.0) || !std::isfinite(xi) || canonical.grid.back() / xi <= 0.0)
        throw NumericError("rescale_to_g: grid degenerates under the argument scaling");

    OdeSolution sol;
    sol.kind = SolutionKind::numeric;
    sol.spec = cost::CostSpec::power(q, lambda_q);
    sol.params = params;
    const size_t n = canonical.grid.size();
    sol.grid.resize(n);
    sol.g.resize(n);
    sol.g_prime.resize(n);
    sol.drift_integral = canonical.drift_integral;  // invariant under the rescaling
    for (size_t i = 0; i < n; ++i) {
        sol.grid[i] = canonical.grid[i] / xi;
        sol.g[i] = av * canonical.g[i];
        sol.g_prime[i] = av * xi * canonical.g_prime[i];
    }
    sol.b_F = av * xi * canonical.b_F;
    const double d2 = params.delta() * params.delta();
    sol.a = params.gamma_mean() * params.sigma * params.sigma / d2;
    sol.stationary_variance = canonical.v_tilde / (xi * xi);
    sol.growth_ratio_at_xmax =
        std::fabs(sol.g.back()) / growth_reference(sol.spec, params, sol.grid.back());
    sol.growth_ratio_ok = sol.growth_ratio_at_xmax >= 0.9 && sol.growth_ratio_at_xmax <= 1.1;
    return sol;
}

OdeSolution quadratic_closed_form(double lambda, const ModelParams& params, double x_max,
                                  int grid_n) {
    params.validate();
    if (!(lambda > 0.0)) throw ConfigError("quadratic_closed_form: lambda must be > 0");
    const double gs2 = params.gamma_mean() * params.sigma * params.sigma;
    const double slope = std::sqrt(gs2 * lambda);
    const double d2 = params.delta() * params.delta();
    const double kappa = std::sqrt(gs2 / lambda);
    const double var = d2 / (2.0 * kappa);
    if (!(x_max > 0.0)) x_max = 12.0 * std::sqrt(var);

    OdeSolution sol;
    sol.kind = SolutionKind::closed_quadratic;
    sol.spec = cost::CostSpec::power(2.0, lambda);
    sol.params = params;
    sol.grid = uniform_grid(x_max, grid_n);
    sol.g.resize(grid_n);
    sol.g_prime.assign(grid_n, -slope);
    sol.drift_integral.resize(grid_n);
    // I(x) = (2/d2) int_0^x kappa u du = kappa x^2 / d2
    for (int i = 0; i < grid_n; ++i) {
        sol.g[i] = -slope * sol.grid[i];
        sol.drift_integral[i] = kappa * sol.grid[i] * sol.grid[i] / d2;
    }
    sol.b_F = slope;
    sol.a = gs2 / d2;
    sol.stationary_variance = var;
    sol.growth_ratio_at_xmax = std::fabs(sol.g.back()) / growth_reference(sol.spec, params, x_max);
    sol.growth_ratio_ok = sol.growth_ratio_at_xmax >= 0.9 && sol.growth_ratio_at_xmax <= 1.1;
    return sol;
}

double proportional_band_halfwidth(const ModelParams& params, double lambda1) {
    params.validate();
    if (!(lambda1 > 0.0)) throw ConfigError("proportional_g: lambda1 must be > 0");
    const double num = (params.gamma1 * params.beta1 - params.gamma2 * params.beta2);
    const double gsum = params.gamma1 + params.gamma2;
    const double s4 = std::pow(params.sigma, 4.0);
    return std::cbrt(3.0 * lambda1 * num * num / (gsum * gsum * gsum * s4));
}

OdeSolution proportional_g(const ModelParams& params, double lambda1, double x_max,
                           int grid_n) {
    const double l = proportional_band_halfwidth(params, lambda1);
    if (!(x_max > 0.0)) x_max = 1.5 * l;
    const double gs2 = params.gamma_mean() * params.sigma * params.sigma;
    const double d2 = params.delta() * params.delta();
    const double c = gs2 / (3.0 * d2);

    OdeSolution sol;
    sol.kind = SolutionKind::proportional;
    sol.spec = cost::CostSpec::proportional(lambda1);
    sol.params = params;
    sol.l = l;
    sol.grid = uniform_grid(x_max, grid_n);
    sol.g.resize(grid_n);
    sol.g_prime.resize(grid_n);
    sol.drift_integral.assign(grid_n, 0.0);  // no interior drift for reflected dynamics
    for (int i = 0; i < grid_n; ++i) {
        const double x = sol.grid[i];
        if (std::fabs(x) <= l) {
            sol.g[i] = c * (x * x * x - 3.0 * l * l * x);
            sol.g_prime[i] = c * (3.0 * x * x - 3.0 * l * l);
        } else {
            sol.g[i] = -lambda1 * (x > 0 ? 1.0 : -1.0);
            sol.g_prime[i] = 0.0;
        }
    }
    sol.b_F = 3.0 * c * l * l;  // |g'(0)|
    sol.a = gs2 / d2;
    sol.stationary_variance = l * l / 3.0;  // uniform stationary law on [-l, l]
    sol.growth_ratio_at_xmax = 1.0;
    return sol;
}

double OdeSolution::eval_g(double x) const { return interp(grid, g, x, "eval_g"); }
double OdeSolution::eval_g_prime(double x) const { return interp(grid, g_prime, x, "eval_g_prime"); }
double OdeSolution::eval_drift_integral(double x) const {
    return interp(grid, drift_integral, x, "eval_drift_integral");
}

double OdeSolution::eval_drift(double x) const {
    if (kind == SolutionKind::proportional) return 0.0;
    return cost::eval_Gprime_inverse(spec, eval_g(x));
}

double residual_max_scaled(const OdeSolution& sol) {
    const double gs2 = sol.params.gamma_mean() * sol.params.sigma * sol.params.sigma;
    const double d2 = sol.params.delta() * sol.params.delta();
    const double scale = gs2 * sol.x_max();
    const double h = sol.grid[1] - sol.grid[0];
    double worst = 0.0;
    for (size_t i = 1; i + 1 < sol.grid.size(); ++i) {
        const double gpp = (sol.g[i + 1] - 2.0 * sol.g[i] + sol.g[i - 1]) / (h * h);
        const double drift = cost::eval_Gprime_inverse(sol.spec, sol.g[i]);
        const double r = 0.5 * d2 * gpp + sol.g_prime[i] * drift - gs2 * sol.grid[i];
        worst = std::max(worst, std::fabs(r) / scale);
    }
    return worst;
}

}  // namespace eqlib::ode
