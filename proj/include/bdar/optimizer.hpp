#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "bdar/matrix.hpp"

namespace bdar::optim {

using Objective = std::function<double(const std::vector<double>&)>;

/// Central-difference gradient with per-coordinate step h_i = rel_step * max(1, |x_i|).
inline std::vector<double> numerical_gradient(const Objective& f, std::vector<double> x, double rel_step = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        const double h = rel_step * std::max(1.0, std::abs(xi));
        x[i] = xi + h;
        const double fp = f(x);
        x[i] = xi - h;
        const double fm = f(x);
        x[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// Central-difference Hessian with step h_i = max(abs_step, rel_step * |x_i|).
inline Matrix numerical_hessian(const Objective& f, std::vector<double> x, double abs_step = 1e-4,
                                double rel_step = 1e-4) {
    const std::size_t n = x.size();
    Matrix h(n, n);
    std::vector<double> step(n);
    for (std::size_t i = 0; i < n; ++i) step[i] = std::max(abs_step, rel_step * std::abs(x[i]));
    const double f0 = f(x);
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        x[i] = xi + step[i];
        const double fp = f(x);
        x[i] = xi - step[i];
        const double fm = f(x);
        x[i] = xi;
        h(i, i) = (fp - 2.0 * f0 + fm) / (step[i] * step[i]);
        for (std::size_t j = 0; j < i; ++j) {
            const double xj = x[j];
            auto eval = [&](double si, double sj) {
                x[i] = xi + si * step[i];
                x[j] = xj + sj * step[j];
                const double v = f(x);
                x[i] = xi;
                x[j] = xj;
                return v;
            };
            const double v = (eval(1, 1) - eval(1, -1) - eval(-1, 1) + eval(-1, -1)) / (4.0 * step[i] * step[j]);
            h(i, j) = v;
            h(j, i) = v;
        }
    }
    return h;
}

struct BfgsOptions {
    int max_iterations = 500;
    /// Converged when max |grad| <= gradient_tolerance * max(1, |f|).
    double gradient_tolerance = 1e-7;
    /// Converged when the step and the relative decrease both fall below these.
    double step_tolerance = 1e-10;
    double function_tolerance = 1e-14;
    double gradient_rel_step = 1e-6;
};

struct BfgsResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    int iterations = 0;
    double max_gradient = std::numeric_limits<double>::infinity();
    bool converged = false;
};

/**
 * @brief Minimizes f with BFGS, finite-difference gradients and Armijo
 * backtracking.
 *
 * Non-finite objective values are treated as infeasible and shrink the
 * step. A failed line search restarts from steepest descent once before
 * giving up.
 */
inline BfgsResult minimize_bfgs(const Objective& f, std::vector<double> x, const BfgsOptions& opt = {}) {
    const std::size_t n = x.size();
    BfgsResult res;
    double fx = f(x);
    if (!std::isfinite(fx)) {
        res.x = x;
        res.value = fx;
        return res;
    }
    auto grad = [&](const std::vector<double>& at) { return numerical_gradient(f, at, opt.gradient_rel_step); };
    auto inf_norm = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double e : v) m = std::max(m, std::abs(e));
        return m;
    };
    std::vector<double> g = grad(x);
    Matrix hinv(n, n);
    for (std::size_t i = 0; i < n; ++i) hinv(i, i) = 1.0;
    bool just_reset = true;

    int iter = 0;
    for (; iter < opt.max_iterations; ++iter) {
        if (inf_norm(g) <= opt.gradient_tolerance * std::max(1.0, std::abs(fx))) {
            res.converged = true;
            break;
        }
        std::vector<double> dir(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) dir[i] -= hinv(i, j) * g[j];
        double slope = 0.0;
        for (std::size_t i = 0; i < n; ++i) slope += dir[i] * g[i];
        if (!(slope < 0.0)) {
            for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
            slope = 0.0;
            for (std::size_t i = 0; i < n; ++i) slope -= g[i] * g[i];
        }
        // Limit very long first steps on the unconstrained scale.
        const double dnorm = inf_norm(dir);
        double step = dnorm > 5.0 ? 5.0 / dnorm : 1.0;

        std::vector<double> xn(n);
        double fn = fx;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + step * dir[i];
            fn = f(xn);
            if (std::isfinite(fn) && fn <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (just_reset) break;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) hinv(i, j) = i == j ? 1.0 : 0.0;
            just_reset = true;
            continue;
        }
        just_reset = false;

        std::vector<double> gn = grad(xn);
        std::vector<double> s(n), y(n);
        double sy = 0.0, step_norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = xn[i] - x[i];
            y[i] = gn[i] - g[i];
            sy += s[i] * y[i];
            step_norm = std::max(step_norm, std::abs(s[i]) / std::max(1.0, std::abs(x[i])));
        }
        const double decrease = fx - fn;
        x = xn;
        g = gn;
        const double fprev = fx;
        fx = fn;

        if (sy > 1e-12 * std::sqrt(std::inner_product(s.begin(), s.end(), s.begin(), 0.0) *
                                   std::inner_product(y.begin(), y.end(), y.begin(), 0.0))) {
            // H+ = (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            const double rho = 1.0 / sy;
            std::vector<double> hy(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) hy[i] += hinv(i, j) * y[j];
            double yhy = 0.0;
            for (std::size_t i = 0; i < n; ++i) yhy += y[i] * hy[i];
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    hinv(i, j) += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
        }

        if (step_norm < opt.step_tolerance && decrease <= opt.function_tolerance * std::max(1.0, std::abs(fprev))) {
            res.converged = true;
            ++iter;
            break;
        }
    }
    res.x = x;
    res.value = fx;
    res.iterations = iter;
    res.max_gradient = inf_norm(g);
    if (!res.converged) res.converged = res.max_gradient <= opt.gradient_tolerance * std::max(1.0, std::abs(fx));
    return res;
}

}  // namespace bdar::optim
