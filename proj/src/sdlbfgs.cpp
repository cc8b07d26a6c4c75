#include "ssqn/sdlbfgs.hpp"

#include <cmath>

#include "ssqn/errors.hpp"

namespace ssqn {

void update_memory(LbfgsMemory& mem, const DenseVector& s, const DenseVector& y_bar,
                   double point_norm, const LbfgsUpdateHooks& hooks) {
    if (mem.capacity == 0) return;
    require_finite(s, "curvature update s");
    require_finite(y_bar, "curvature update y_bar");

    const double s_norm = norm2(s);
    const double skip_eps = 1e-14 * (1.0 + point_norm);
    if (s_norm <= skip_eps) return;  // rho would overflow; drop the pair

    const double sy = dot(s, y_bar);
    const double yy = dot(y_bar, y_bar);
    const double curvature_eps = 1e-12 * (1.0 + s_norm * std::sqrt(yy));

    double gamma;
    if (sy > curvature_eps) {
        gamma = yy / sy;
        if (hooks.gamma_floor) gamma = std::max(gamma, mem.delta);
    } else {
        gamma = hooks.gamma_floor ? mem.delta : yy / sy;
    }

    const double ss = dot(s, s);
    const double sigma = gamma * ss;  // s' H_0^{-1} s with H_0 = gamma^{-1} I
    double theta = 1.0;
    if (hooks.damping && sy < 0.25 * sigma) {
        theta = 0.75 * sigma / (sigma - sy);
    }

    CurvaturePair pair;
    pair.s = s;
    pair.y_hat.resize(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
        pair.y_hat[j] = theta * y_bar[j] + (1.0 - theta) * gamma * s[j];
    }
    const double s_yhat = dot(s, pair.y_hat);
    pair.rho = 1.0 / s_yhat;

    mem.gamma = gamma;
    mem.theta_last = theta;
    const double floor = 0.25 * gamma * ss;
    if (floor != 0.0) {
        mem.min_damping_margin = std::min(mem.min_damping_margin, (s_yhat - floor) / std::fabs(floor));
    }

    if (mem.pairs.size() == mem.capacity) mem.pairs.pop_front();
    mem.pairs.push_back(std::move(pair));
}

DenseVector two_loop_direction(const LbfgsMemory& mem, const DenseVector& v) {
    DenseVector u = v;
    if (mem.pairs.empty()) return u;

    const std::size_t p = mem.pairs.size();
    std::vector<double> mu(p);
    for (std::size_t t = p; t-- > 0;) {  // newest to oldest
        const CurvaturePair& pr = mem.pairs[t];
        mu[t] = pr.rho * dot(pr.s, u);
        axpy_inplace(-mu[t], pr.y_hat, u);
    }
    scale_inplace(1.0 / mem.gamma, u);  // H_0 = gamma^{-1} I
    for (std::size_t t = 0; t < p; ++t) {  // oldest to newest
        const CurvaturePair& pr = mem.pairs[t];
        const double nu = pr.rho * dot(pr.y_hat, u);
        axpy_inplace(mu[t] - nu, pr.s, u);
    }
    return u;
}

DenseMatrix dense_hessian_oracle(const LbfgsMemory& mem, std::size_t d) {
    DenseMatrix h;
    h.n = d;
    h.a.assign(d * d, 0.0);
    const double diag = mem.pairs.empty() ? 1.0 : 1.0 / mem.gamma;
    for (std::size_t i = 0; i < d; ++i) h.at(i, i) = diag;

    for (const CurvaturePair& pr : mem.pairs) {  // oldest first
        // W = I - rho y_hat s'
        DenseMatrix w;
        w.n = d;
        w.a.assign(d * d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                w.at(i, j) = (i == j ? 1.0 : 0.0) - pr.rho * pr.y_hat[i] * pr.s[j];
            }
        }
        // h <- W' h W + rho s s'
        DenseMatrix hw;
        hw.n = d;
        hw.a.assign(d * d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t k = 0; k < d; ++k) {
                const double hik = h.at(i, k);
                if (hik == 0.0) continue;
                for (std::size_t j = 0; j < d; ++j) hw.at(i, j) += hik * w.at(k, j);
            }
        }
        DenseMatrix next;
        next.n = d;
        next.a.assign(d * d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t k = 0; k < d; ++k) {
                const double wki = w.at(k, i);
                if (wki == 0.0) continue;
                for (std::size_t j = 0; j < d; ++j) next.at(i, j) += wki * hw.at(k, j);
            }
        }
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                next.at(i, j) += pr.rho * pr.s[i] * pr.s[j];
            }
        }
        h = std::move(next);
    }
    return h;
}

DenseVector mat_vec(const DenseMatrix& m, const DenseVector& v) {
    if (v.size() != m.n) throw DimensionError("matrix-vector dimension mismatch");
    DenseVector out(m.n, 0.0);
    for (std::size_t i = 0; i < m.n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m.n; ++j) acc += m.at(i, j) * v[j];
        out[i] = acc;
    }
    return out;
}

std::pair<double, double> theoretical_eig_bounds(double delta, double kappa, std::size_t m) {
    if (!(delta > 0.0) || !(kappa > 0.0) || m < 1) {
        throw ConfigError("eig bounds need delta > 0, kappa > 0, m >= 1");
    }
    const double md = static_cast<double>(m);
    const double lower = 1.0 / (4.0 * md * kappa * kappa / delta +
                                (4.0 * md + 1.0) * (kappa + delta));
    const double alpha = (4.0 * kappa + 5.0 * delta) / delta;
    const double a2 = alpha * alpha;
    const double a2m = std::pow(alpha, 2.0 * md);
    const double upper = (a2m - 1.0) / (a2 - 1.0) * (4.0 / delta) + a2m / delta;
    return {lower, upper};
}

}  // namespace ssqn
