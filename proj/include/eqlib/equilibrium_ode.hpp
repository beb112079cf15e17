#pragma once

#include <span>
#include <vector>

#include "eqlib/cost_model.hpp"

namespace eqlib::ode {

// Two-agent market primitives. Units: risk aversions 1/currency, sigma
// currency/sqrt(day), betas shares*currency/sqrt(day) per unit of W,
// supply and positions in shares.
struct ModelParams {
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double sigma = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double s = 0.0;
    double phi1_init = 0.0;

    double gamma_bar() const { return gamma1 * gamma2 / (gamma1 + gamma2); }
    double gamma_mean() const { return 0.5 * (gamma1 + gamma2); }
    double delta() const { return (gamma1 * beta1 - gamma2 * beta2) / ((gamma1 + gamma2) * sigma); }
    double x0() const { return phi1_init - s * gamma2 / (gamma1 + gamma2); }
    void validate() const;
};

struct SolverOptions {
    double rel_tol = 1e-11;
    double abs_tol_scale = 1e-13;  // scaled by the anchor value
    double bisect_tol = 1e-9;      // on |y(0;b)| in units of b
};

enum class SolutionKind { numeric, closed_quadratic, proportional };

// Decoupling function g on a symmetric uniform grid, with the pasting
// constant and stationary-law diagnostics. g is odd, non-increasing and
// satisfies x g(x) <= 0.
struct OdeSolution {
    SolutionKind kind = SolutionKind::numeric;
    std::vector<double> grid;            // ascending, symmetric about 0
    std::vector<double> g;
    std::vector<double> g_prime;
    std::vector<double> drift_integral;  // I(x) = (2/delta^2) int_0^x |drift(u)| du, speed-measure exponent
    double b_F = 0.0;
    double a = 0.0;                      // gamma sigma^2 / delta^2
    double growth_ratio_at_xmax = 0.0;   // |g(xmax)| / (G*)^{-1}(gamma sigma^2 xmax^2 / 2)
    bool growth_ratio_ok = true;         // within [0.9, 1.1]
    double stationary_variance = 0.0;
    double l = 0.0;                      // band half-width (proportional kind only)

    cost::CostSpec spec = cost::CostSpec::power(2.0, 1.0);
    ModelParams params;

    double x_max() const { return grid.back(); }
    double eval_g(double x) const;        // piecewise-linear in g
    double eval_g_prime(double x) const;
    double eval_drift(double x) const;    // (G')^{-1}(g(x)), exact map after interpolation
    double eval_drift_integral(double x) const;
};

// First-order reduction y' = -a x^2 + b + F(y), F = 2 G*/delta^2, integrated
// backward from the supersolution anchor y(x_max) = F^{-1}(a x_max^2 - b).
struct FirstOrderCurve {
    std::vector<double> xs;  // ascending on [0, x_max]
    std::vector<double> ys;
};
FirstOrderCurve solve_first_order(const cost::CostSpec& spec, const ModelParams& params,
                                  double b, double x_max, int n_out = 513,
                                  const SolverOptions& opt = {});

// Unique b with y(0;b) = 0, by bisection (y(0;.) is strictly decreasing).
double find_bF(const cost::CostSpec& spec, const ModelParams& params, double x_max,
               const SolverOptions& opt = {});

// Full solve: g(x) = -y(x;b_F) for x >= 0, odd reflection for x < 0.
// x_max <= 0 selects roughly 12 stationary standard deviations automatically.
OdeSolution solve_g(const cost::CostSpec& spec, const ModelParams& params,
                    double x_max = 0.0, int grid_n = 8001, const SolverOptions& opt = {});

// Parameter-free canonical problem for a pure power cost: the general
// machinery run with gamma sigma^2 = 2, delta^2 = 2 and cost Power(q, q).
struct CanonicalSolution {
    double q = 2.0;
    double b_F = 0.0;
    double c_tilde = 0.0;  // normalizing constant of the canonical stationary density
    double v_tilde = 0.0;  // its variance
    double growth_ratio = 0.0;
    double stationary_variance = 0.0;
    std::vector<double> grid, g, g_prime, drift_integral;
};
CanonicalSolution solve_canonical(double q, double x_max = 12.0, int grid_n = 8001,
                                  const SolverOptions& opt = {});

// Argument scale of the canonical rescaling,
// xi = 2^{(q-1)/(q+2)} (q gamma sigma^2 / lambda_q)^{1/(q+2)} delta^{-2q/(q+2)}.
double canonical_arg_scale(double q, double lambda_q, const ModelParams& params);
// Value scale, (lambda_q/q)^{3/(q+2)} (gamma sigma^2 delta^4 / 8)^{(q-1)/(q+2)}.
double canonical_value_scale(double q, double lambda_q, const ModelParams& params);

// Map a canonical solution back to model units; exact at the nodes.
OdeSolution rescale_to_g(const CanonicalSolution& canonical, double lambda_q,
                         const ModelParams& params);

// Closed forms.
OdeSolution quadratic_closed_form(double lambda, const ModelParams& params,
                                  double x_max = 0.0, int grid_n = 8001);
// Band half-width l and the piecewise cubic/constant g for proportional costs.
OdeSolution proportional_g(const ModelParams& params, double lambda1,
                           double x_max = 0.0, int grid_n = 8001);
double proportional_band_halfwidth(const ModelParams& params, double lambda1);

// Max of |(delta^2/2) g'' + g' (G')^{-1}(g) - gamma sigma^2 x| over the
// interior grid, with g'' by central differences, normalized by the
// right-hand-side scale gamma sigma^2 x_max.
double residual_max_scaled(const OdeSolution& sol);

}  // namespace eqlib::ode
