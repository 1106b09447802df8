#include "embedopt/errors.hpp"
#include "embedopt/optimize.hpp"

#include <cmath>
#include <string>

namespace embedopt {

LineSearchResult line_search(const ErrorFunction& f, const Embedding& x, double error, const Matrix& p,
                             const Matrix& g, double alpha_init, const LineSearchConfig& cfg) {
    if (!(cfg.c1 > 0.0 && cfg.c1 < 1.0) || !(cfg.rho > 0.0 && cfg.rho < 1.0)) {
        throw Error("line_search: need 0 < c1 < 1 and 0 < rho < 1");
    }
    if (!(alpha_init > 0.0)) throw Error("line_search: initial step must be positive");
    const double slope = (p.array() * g.array()).sum();
    if (!(slope < 0.0)) throw LineSearchFailed("line_search: direction is not a descent direction");

    LineSearchResult out;
    double alpha = alpha_init;
    for (int i = 0; i <= cfg.max_tries; ++i, alpha *= cfg.rho) {
        const double trial = f(x + alpha * p);
        ++out.evals;
        if (std::isfinite(trial) && trial <= error + cfg.c1 * alpha * slope && trial < error) {
            out.alpha = alpha;
            out.error = trial;
            return out;
        }
    }
    throw LineSearchFailed("line_search: no sufficient decrease after " + std::to_string(cfg.max_tries) +
                           " backtracks");
}

} // namespace embedopt
