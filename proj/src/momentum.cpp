#include "ssqn/momentum.hpp"

#include "ssqn/errors.hpp"

namespace ssqn {

double momentum_alpha(MomentumKind kind, std::uint64_t k, std::size_t q) {
    switch (kind) {
        case MomentumKind::none:
            return 1.0;
        case MomentumKind::vanilla:
            return 2.0 / static_cast<double>(k + 1);
        case MomentumKind::epoch_restart:
            if (q < 1) throw ConfigError("epochwise momentum needs q >= 1");
            return 2.0 / static_cast<double>(k % q + 1);
        case MomentumKind::epoch_diminishing: {
            if (q < 1) throw ConfigError("epochwise momentum needs q >= 1");
            const std::uint64_t epoch = (k + q - 1) / q;  // ceil(k/q)
            return 2.0 / static_cast<double>(epoch + 1);
        }
    }
    throw ConfigError("unknown momentum kind");
}

void interpolate(ThreeSequenceState& state, double alpha_next) {
    if (alpha_next == 1.0) {
        state.z = state.x;  // exact collapse, keeps the reduction bitwise
        return;
    }
    state.z.resize(state.x.size());
    for (std::size_t j = 0; j < state.x.size(); ++j) {
        state.z[j] = (1.0 - alpha_next) * state.y[j] + alpha_next * state.x[j];
    }
}

void dual_update(ThreeSequenceState& state, const DenseVector& d, double lambda,
                 double beta) {
    for (std::size_t j = 0; j < state.x.size(); ++j) {
        state.x[j] = state.x[j] - lambda * d[j];
    }
    state.y.resize(state.z.size());
    for (std::size_t j = 0; j < state.z.size(); ++j) {
        state.y[j] = state.z[j] - beta * d[j];
    }
}

double select_lambda(LambdaRule rule, double beta, double alpha_k) {
    switch (rule) {
        case LambdaRule::min:
            return beta;
        case LambdaRule::mid:
            return beta * (1.0 + 0.5 * alpha_k);
        case LambdaRule::max:
            return beta * (1.0 + alpha_k);
    }
    throw ConfigError("unknown lambda rule");
}

}  // namespace ssqn
