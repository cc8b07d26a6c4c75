#pragma once

#include "ssqn/objectives.hpp"
#include "ssqn/rng.hpp"
#include "ssqn/vector_ops.hpp"

namespace ssqn {

/// Running SPIDER gradient estimator. prev_point is the point at which v was
/// last advanced (x_{k-1} for the plain solver, z_{k-1} for the momentum
/// ones). At every finite-sum epoch boundary v equals the exact full
/// gradient at the current point.
struct SpiderState {
    DenseVector v;
    DenseVector prev_point;
    std::uint64_t k = 0;
    std::size_t q = 1;
    std::size_t batch = 1;
    std::size_t refresh_batch = 0;  // online only
};

/// Epoch-boundary refresh, finite-sum mode: v = exact full gradient at
/// `point` (SFO += n). Throws ContractError off an epoch boundary.
void spider_refresh(SpiderState& state, const Objective& obj, const DenseVector& point,
                    OracleCounter& counter);

/// Epoch-boundary refresh, online mode: v = mean gradient over refresh_batch
/// fresh stream draws (SFO += refresh_batch).
void spider_refresh_online(SpiderState& state, const StreamingOracle& stream,
                           const DenseVector& point, OracleCounter& counter, Rng& rng);

/// Recursive update v <- grad_batch(point) - grad_batch(prev_point) + v with
/// the SAME with-replacement mini-batch at both points. Charges batch once
/// under the paper convention and 2*batch raw evaluations. reuse_batch=false
/// is an audit fault injection that breaks the same-batch rule.
void spider_advance(SpiderState& state, const Objective& obj, const DenseVector& point,
                    OracleCounter& counter, Rng& rng, bool reuse_batch = true);

/// Online advance: fresh stream draws, each component evaluated at both
/// points.
void spider_advance_online(SpiderState& state, const StreamingOracle& stream,
                           const DenseVector& point, OracleCounter& counter, Rng& rng);

}  // namespace ssqn
