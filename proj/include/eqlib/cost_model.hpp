#pragma once

#include <span>
#include <string>
#include <vector>

namespace eqlib::cost {

struct PowerTerm {
    double q;       // elasticity, in (1, 2]
    double lambda;  // cost scale, > 0
};

// Instantaneous trading-cost function G. Smooth kinds are sums of power
// terms lambda |x|^q / q; the proportional kind is handled by closed forms
// elsewhere and is rejected by the smooth-only evaluators below.
class CostSpec {
public:
    enum class Kind { power, composite, proportional };

    static CostSpec power(double q, double lambda);
    static CostSpec composite(std::vector<PowerTerm> terms);
    static CostSpec proportional(double lambda);

    Kind kind() const { return kind_; }
    bool smooth() const { return kind_ != Kind::proportional; }
    const std::vector<PowerTerm>& terms() const;
    double proportional_lambda() const;

    double min_q() const;
    std::string describe() const;

private:
    CostSpec(Kind k, std::vector<PowerTerm> t, double lam)
        : kind_(k), terms_(std::move(t)), prop_lambda_(lam) {}
    Kind kind_;
    std::vector<PowerTerm> terms_;
    double prop_lambda_ = 0.0;
};

// G(x) = sum_i lambda_i |x|^{q_i} / q_i
double eval_G(const CostSpec& spec, double x);

// G'(x) = sum_i lambda_i sign(x) |x|^{q_i - 1}; odd and strictly increasing.
double eval_Gprime(const CostSpec& spec, double x);

// (G')^{-1}(y): closed form for a single power, monotone bisection otherwise.
double eval_Gprime_inverse(const CostSpec& spec, double y);

// d/dy (G')^{-1}(y) = 1 / G''((G')^{-1}(y)); 0 at y=0 when some q < 2.
double eval_Gprime_inverse_derivative(const CostSpec& spec, double y);

// Legendre transform G*(y) = y (G')^{-1}(y) - G((G')^{-1}(y)).
double eval_legendre(const CostSpec& spec, double y);

// Inverse of G* restricted to the [0, inf) branch; v must be >= 0.
double eval_legendre_inverse(const CostSpec& spec, double v);

struct Assumption1Report {
    bool passed = false;
    double min_second_difference = 0.0;  // of G on the grid (convexity)
    double max_symmetry_error = 0.0;     // |G(x)-G(-x)| relative
    double gpp_bound = 0.0;              // empirical C with G''(x) <= C for |x| > x0
    double gpp_x0 = 0.0;
    std::string violated;                // empty when passed
};

// Numerical check of the convexity / symmetry / monotonicity / bounded-G''
// requirements on a sample grid. Throws ConfigError naming the violated
// clause when a check fails.
Assumption1Report validate_assumption1(const CostSpec& spec, std::span<const double> grid);

// Grid-level piece, exposed so tests can probe tabulated values directly
// (negative controls feed deliberately concave samples here).
double min_second_difference(std::span<const double> xs, std::span<const double> vals);

}  // namespace eqlib::cost
