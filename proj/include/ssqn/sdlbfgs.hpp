#pragma once

#include <deque>
#include <utility>

#include "ssqn/vector_ops.hpp"

namespace ssqn {

/// One stored curvature pair. y_hat is the damped gradient difference, so
/// rho = 1 / <s, y_hat> is positive for every accepted pair.
struct CurvaturePair {
    DenseVector s;
    DenseVector y_hat;
    double rho;
};

/// Audit fault-injection switches. Production paths always use the defaults.
struct LbfgsUpdateHooks {
    bool damping = true;
    bool gamma_floor = true;
};

/// Ring buffer of damped curvature pairs plus the gamma scaling of the
/// implicit initial matrix H_0 = gamma^{-1} I. The full inverse-Hessian
/// approximation H is never materialized outside the test oracle.
struct LbfgsMemory {
    std::deque<CurvaturePair> pairs;  // oldest first
    std::size_t capacity = 0;
    double delta = 1.0;
    double gamma = 1.0;
    double theta_last = 1.0;  // diagnostic
    /// Running min over accepted pairs of
    /// (s'y_hat - 0.25 gamma s's) / (0.25 gamma s's); >= -1e-12 when healthy.
    double min_damping_margin = 1e300;

    LbfgsMemory(std::size_t m, double delta_in) : capacity(m), delta(delta_in) {}
};

/// Damped curvature update. Computes gamma = max{ybar'ybar / s'ybar, delta}
/// (falling back to delta when s'ybar is not safely positive), the damping
/// coefficient theta, y_hat = theta ybar + (1 - theta) gamma s, and pushes
/// the pair, evicting the oldest when full. Pairs with ||s|| below
/// 1e-14 (1 + point_norm) are skipped entirely, as is everything when the
/// capacity is zero (memory disabled).
void update_memory(LbfgsMemory& mem, const DenseVector& s, const DenseVector& y_bar,
                   double point_norm = 0.0, const LbfgsUpdateHooks& hooks = {});

/// Matrix-free H v via the two-loop recursion, seeded at H_0 = gamma^{-1} I.
/// With empty memory this is the identity: the first step of a run is a plain
/// stochastic gradient step.
DenseVector two_loop_direction(const LbfgsMemory& mem, const DenseVector& v);

/// Row-major d x d matrix, test/audit scale only.
struct DenseMatrix {
    std::size_t n = 0;
    std::vector<double> a;

    double& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
    double at(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

/// Materializes H by the rank-two dense recursion
/// H_i = (I - rho s y_hat') H_{i-1} (I - rho y_hat s') + rho s s',
/// oldest pair first, seeded at gamma^{-1} I (identity when empty).
/// Independent oracle for two_loop_direction; keep d <= 64.
DenseMatrix dense_hessian_oracle(const LbfgsMemory& mem, std::size_t d);

DenseVector mat_vec(const DenseMatrix& m, const DenseVector& v);

/// Closed-form eigenvalue bracket for the implicit H under a curvature bound
/// kappa on the component Hessians:
///   lower = (4 m kappa^2 / delta + (4m + 1)(kappa + delta))^{-1}
///   upper = ((a^{2m} - 1)/(a^2 - 1)) (4/delta) + a^{2m}/delta,
/// with a = (4 kappa + 5 delta)/delta.
std::pair<double, double> theoretical_eig_bounds(double delta, double kappa, std::size_t m);

}  // namespace ssqn
