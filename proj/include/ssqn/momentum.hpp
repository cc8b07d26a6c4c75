#pragma once

#include <cstdint>

#include "ssqn/vector_ops.hpp"

namespace ssqn {

/// Momentum coefficient schedules. `none` pins alpha to 1, which collapses
/// the three sequences onto each other so a momentum run degenerates to the
/// plain solver.
enum class MomentumKind { none, vanilla, epoch_restart, epoch_diminishing };

/// vanilla: 2/(k+1); epoch_restart: 2/(mod(k,q)+1);
/// epoch_diminishing: 2/(ceil(k/q)+1). Values lie in (0, 2].
double momentum_alpha(MomentumKind kind, std::uint64_t k, std::size_t q);

/// The (x, y, z) sequences of the momentum solvers. y starts equal to x.
struct ThreeSequenceState {
    DenseVector x;
    DenseVector y;
    DenseVector z;

    explicit ThreeSequenceState(DenseVector x0) : x(x0), y(x0), z(std::move(x0)) {}
};

/// z = (1 - alpha_next) y + alpha_next x. alpha_next > 1 makes this an
/// extrapolation, which is expected at early iterations. alpha_next == 1
/// returns x bitwise.
void interpolate(ThreeSequenceState& state, double alpha_next);

/// x <- x - lambda d;  y <- z - beta d.
void dual_update(ThreeSequenceState& state, const DenseVector& d, double lambda,
                 double beta);

enum class LambdaRule { min, mid, max };

/// lambda_k within [beta, (1 + alpha_k) beta] per the selected rule.
double select_lambda(LambdaRule rule, double beta, double alpha_k);

}  // namespace ssqn
