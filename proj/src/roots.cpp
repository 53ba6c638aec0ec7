#include "symred/roots.hpp"

#include "symred/error.hpp"

#include <cmath>
#include <limits>

namespace symred {

namespace {

double safe_eval(const std::function<double(double)>& f, double x)
{
    try {
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN();
    } catch (const DomainFault&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

RootResult bisect(const std::function<double(double)>& f, double a, double b, double tol, int max_iter, int used)
{
    double fa = safe_eval(f, a);
    double fb = safe_eval(f, b);
    if (std::isnan(fa) || std::isnan(fb) || fa * fb > 0.0) {
        throw NoConvergence("bracket does not enclose a sign change", a, fa);
    }
    for (int i = used; i < max_iter + 200; ++i) {
        const double m = 0.5 * (a + b);
        const double fm = safe_eval(f, m);
        if (std::isnan(fm)) {
            throw NoConvergence("domain fault inside bracket", m, fm);
        }
        if (std::fabs(fm) < tol || b - a < 4 * std::numeric_limits<double>::epsilon() * (1.0 + std::fabs(m))) {
            return {m, fm, i + 1};
        }
        if ((fa < 0.0) == (fm < 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    const double m = 0.5 * (a + b);
    throw NoConvergence("bisection did not converge", m, safe_eval(f, m));
}

} // namespace

RootResult find_root(const std::function<double(double)>& f, double guess,
                     std::optional<std::pair<double, double>> bracket, double tol, int max_iter)
{
    double x = guess;
    double fx = safe_eval(f, x);
    int it = 0;
    for (; it < max_iter && !std::isnan(fx); ++it) {
        if (std::fabs(fx) < tol) {
            // A few polishing steps tighten the root well below tol.
            for (int k = 0; k < 3; ++k) {
                const double h = 1e-7 * (1.0 + std::fabs(x));
                const double d = (safe_eval(f, x + h) - safe_eval(f, x - h)) / (2 * h);
                if (!std::isfinite(d) || d == 0.0) {
                    break;
                }
                const double xn = x - fx / d;
                const double fn = safe_eval(f, xn);
                if (std::isnan(fn) || std::fabs(fn) >= std::fabs(fx)) {
                    break;
                }
                x = xn;
                fx = fn;
            }
            return {x, fx, it};
        }
        const double h = 1e-7 * (1.0 + std::fabs(x));
        const double d = (safe_eval(f, x + h) - safe_eval(f, x - h)) / (2 * h);
        if (!std::isfinite(d) || d == 0.0) {
            break;
        }
        double step = fx / d;
        double lambda = 1.0;
        bool improved = false;
        for (int k = 0; k < 30; ++k) {
            const double xn = x - lambda * step;
            if (bracket && (xn < bracket->first || xn > bracket->second)) {
                lambda *= 0.5;
                continue;
            }
            const double fn = safe_eval(f, xn);
            if (!std::isnan(fn) && std::fabs(fn) < std::fabs(fx)) {
                x = xn;
                fx = fn;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved) {
            break;
        }
    }
    if (bracket) {
        return bisect(f, bracket->first, bracket->second, tol, max_iter, it);
    }
    throw NoConvergence("Newton iteration did not converge", x, fx);
}

} // namespace symred
