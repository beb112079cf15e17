#include "eqlib/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "eqlib/errors.hpp"

namespace eqlib::cost {

namespace {

void check_terms(const std::vector<PowerTerm>& terms) {
    if (terms.empty()) throw ConfigError("cost: at least one power term required");
    for (const auto& t : terms) {
        if (!(t.q > 1.0 && t.q <= 2.0))
            throw ConfigError("cost: elasticity q must lie in (1, 2], got " + std::to_string(t.q));
        if (!(t.lambda > 0.0))
            throw ConfigError("cost: lambda must be > 0, got " + std::to_string(t.lambda));
    }
}

void require_smooth(const CostSpec& spec, const char* op) {
    if (!spec.smooth())
        throw ConfigError(std::string(op) + ": unsupported for proportional costs");
}

double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

}  // namespace

CostSpec CostSpec::power(double q, double lambda) {
    std::vector<PowerTerm> t{{q, lambda}};
    check_terms(t);
    return CostSpec(Kind::power, std::move(t), 0.0);
}

CostSpec CostSpec::composite(std::vector<PowerTerm> terms) {
    check_terms(terms);
    std::sort(terms.begin(), terms.end(), [](auto& a, auto& b) { return a.q < b.q; });
    return CostSpec(terms.size() == 1 ? Kind::power : Kind::composite, std::move(terms), 0.0);
}

CostSpec CostSpec::proportional(double lambda) {
    if (!(lambda > 0.0)) throw ConfigError("cost: proportional lambda must be > 0");
    return CostSpec(Kind::proportional, {}, lambda);
}

const std::vector<PowerTerm>& CostSpec::terms() const {
    if (!smooth()) throw ConfigError("cost: proportional spec has no power terms");
    return terms_;
}

double CostSpec::proportional_lambda() const {
    if (smooth()) throw ConfigError("cost: not a proportional spec");
    return prop_lambda_;
}

double CostSpec::min_q() const {
    double m = 2.0;
    for (const auto& t : terms()) m = std::min(m, t.q);
    return m;
}

std::string CostSpec::describe() const {
    std::ostringstream os;
    if (!smooth()) {
        os << "proportional(lambda=" << prop_lambda_ << ")";
        return os.str();
    }
    os << (kind_ == Kind::power ? "power" : "composite") << "(";
    for (size_t i = 0; i < terms_.size(); ++i) {
        if (i) os << ", ";
        os << "q=" << terms_[i].q << " lambda=" << terms_[i].lambda;
    }
    os << ")";
    return os.str();
}

double eval_G(const CostSpec& spec, double x) {
    require_smooth(spec, "eval_G");
    const double ax = std::fabs(x);
    double v = 0.0;
    for (const auto& t : spec.terms()) v += t.lambda * std::pow(ax, t.q) / t.q;
    return v;
}

double eval_Gprime(const CostSpec& spec, double x) {
    require_smooth(spec, "eval_Gprime");
    if (x == 0.0) return 0.0;
    const double ax = std::fabs(x);
    double v = 0.0;
    for (const auto& t : spec.terms()) v += t.lambda * std::pow(ax, t.q - 1.0);
    return sgn(x) * v;
}

double eval_Gprime_inverse(const CostSpec& spec, double y) {
    require_smooth(spec, "eval_Gprime_inverse");
    if (y == 0.0) return 0.0;
    const double ay = std::fabs(y);
    const auto& terms = spec.terms();
    if (terms.size() == 1) {
        const auto& t = terms.front();
        return sgn(y) * std::pow(ay / t.lambda, 1.0 / (t.q - 1.0));
    }
    // Monotone bisection. G'(x) >= lambda_j x^{q_j-1} for each term, so the
    // smallest single-term inverse brackets the root from above.
    double hi = std::numeric_limits<double>::infinity();
    for (const auto& t : terms) hi = std::min(hi, std::pow(ay / t.lambda, 1.0 / (t.q - 1.0)));
    hi = std::max(hi, 1e-300);
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (eval_Gprime(spec, mid) < ay)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-12 * hi) break;
    }
    return sgn(y) * 0.5 * (lo + hi);
}

double eval_Gprime_inverse_derivative(const CostSpec& spec, double y) {
    require_smooth(spec, "eval_Gprime_inverse_derivative");
    const double x = std::fabs(eval_Gprime_inverse(spec, y));
    if (x == 0.0) {
        // G''(0) is infinite as soon as any q < 2; purely quadratic otherwise.
        double l2 = 0.0;
        for (const auto& t : spec.terms()) {
            if (t.q < 2.0) return 0.0;
            l2 += t.lambda;
        }
        return 1.0 / l2;
    }
    double gpp = 0.0;
    for (const auto& t : spec.terms()) gpp += t.lambda * (t.q - 1.0) * std::pow(x, t.q - 2.0);
    return 1.0 / gpp;
}

double eval_legendre(const CostSpec& spec, double y) {
    require_smooth(spec, "eval_legendre");
    const double ay = std::fabs(y);
    const auto& terms = spec.terms();
    if (terms.size() == 1) {
        const auto& t = terms.front();
        return (1.0 - 1.0 / t.q) * std::pow(t.lambda, -1.0 / (t.q - 1.0)) *
               std::pow(ay, t.q / (t.q - 1.0));
    }
    const double x = eval_Gprime_inverse(spec, ay);
    return ay * x - eval_G(spec, x);
}

double eval_legendre_inverse(const CostSpec& spec, double v) {
    require_smooth(spec, "eval_legendre_inverse");
    if (v < 0.0) throw ConfigError("eval_legendre_inverse: argument must be >= 0");
    if (v == 0.0) return 0.0;
    const auto& terms = spec.terms();
    if (terms.size() == 1) {
        const auto& t = terms.front();
        return std::pow(t.lambda, 1.0 / t.q) *
               std::pow(t.q * v / (t.q - 1.0), (t.q - 1.0) / t.q);
    }
    double hi = 1.0;
    for (int i = 0; i < 2100 && eval_legendre(spec, hi) < v; ++i) hi *= 2.0;
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (eval_legendre(spec, mid) < v)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-12 * hi) break;
    }
    return 0.5 * (lo + hi);
}

double min_second_difference(std::span<const double> xs, std::span<const double> vals) {
    double m = std::numeric_limits<double>::infinity();
    for (size_t i = 1; i + 1 < xs.size(); ++i) {
        const double h1 = xs[i] - xs[i - 1], h2 = xs[i + 1] - xs[i];
        const double d = (vals[i + 1] - vals[i]) / h2 - (vals[i] - vals[i - 1]) / h1;
        m = std::min(m, d);
    }
    return m;
}

Assumption1Report validate_assumption1(const CostSpec& spec, std::span<const double> grid) {
    require_smooth(spec, "validate_assumption1");
    if (grid.size() < 3) throw ConfigError("validate_assumption1: grid too small");

    Assumption1Report rep;
    std::vector<double> g(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) g[i] = eval_G(spec, grid[i]);

    rep.min_second_difference = min_second_difference(grid, g);
    if (rep.min_second_difference < -1e-10) {
        rep.violated = "convexity";
        throw ConfigError("Assumption check failed: convexity (min second difference " +
                          std::to_string(rep.min_second_difference) + ")");
    }

    for (double x : grid) {
        const double gx = eval_G(spec, x), gmx = eval_G(spec, -x);
        const double err = std::fabs(gx - gmx) / (1.0 + std::fabs(gx));
        rep.max_symmetry_error = std::max(rep.max_symmetry_error, err);
    }
    if (rep.max_symmetry_error > 1e-12) {
        rep.violated = "symmetry";
        throw ConfigError("Assumption check failed: symmetry");
    }

    double prev = 0.0;
    bool first = true;
    for (double x : grid) {
        if (x <= 0.0) continue;
        const double gp = eval_Gprime(spec, x);
        if (!first && gp <= prev) {
            rep.violated = "monotone derivative";
            throw ConfigError("Assumption check failed: G' not strictly increasing on positives");
        }
        prev = gp;
        first = false;
    }

    // Empirical bound on G'' in the tail |x| > x0 (x0: upper quartile of grid).
    double xmax = 0.0;
    for (double x : grid) xmax = std::max(xmax, std::fabs(x));
    rep.gpp_x0 = 0.75 * xmax;
    for (double x : grid) {
        const double ax = std::fabs(x);
        if (ax <= rep.gpp_x0) continue;
        double gpp = 0.0;
        for (const auto& t : spec.terms()) gpp += t.lambda * (t.q - 1.0) * std::pow(ax, t.q - 2.0);
        rep.gpp_bound = std::max(rep.gpp_bound, gpp);
    }
    rep.passed = true;
    return rep;
}

}  // namespace eqlib::cost
