#include "ssqn/spider.hpp"

#include <string>

#include "ssqn/errors.hpp"

namespace ssqn {

namespace {

void require_boundary(const SpiderState& state) {
    if (state.q == 0 || state.k % state.q != 0) {
        throw ContractError("spider refresh called off the epoch boundary (k = " +
                            std::to_string(state.k) + ", q = " + std::to_string(state.q) + ")");
    }
}

void require_off_boundary(const SpiderState& state) {
    if (state.q != 0 && state.k % state.q == 0) {
        throw ContractError("spider advance called on an epoch boundary (k = " +
                            std::to_string(state.k) + ")");
    }
}

}  // namespace

void spider_refresh(SpiderState& state, const Objective& obj, const DenseVector& point,
                    OracleCounter& counter) {
    require_boundary(state);
    state.v = full_grad(obj, point, counter);
    state.prev_point = point;
}

void spider_refresh_online(SpiderState& state, const StreamingOracle& stream,
                           const DenseVector& point, OracleCounter& counter, Rng& rng) {
    require_boundary(state);
    if (state.refresh_batch == 0) throw ConfigError("online refresh batch must be >= 1");
    DenseVector acc(point.size(), 0.0);
    DenseVector g(point.size());
    for (std::size_t t = 0; t < state.refresh_batch; ++t) {
        const auto component = stream.draw(rng);
        component->grad(point, g);
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += g[j];
    }
    const double inv = 1.0 / static_cast<double>(state.refresh_batch);
    for (double& v : acc) v *= inv;
    counter.component_grad_evals += state.refresh_batch;
    counter.paper_sfo += state.refresh_batch;
    state.v = std::move(acc);
    state.prev_point = point;
}

void spider_advance(SpiderState& state, const Objective& obj, const DenseVector& point,
                    OracleCounter& counter, Rng& rng, bool reuse_batch) {
    require_off_boundary(state);
    if (state.batch == 0) throw ConfigError("spider batch size must be >= 1");
    const std::size_t n = obj.num_components();
    std::vector<std::size_t> batch(state.batch);
    for (auto& i : batch) i = static_cast<std::size_t>(rng.below(n));

    const DenseVector g_new = batch_grad(obj, batch, point, counter, SfoCharge::Full);
    if (!reuse_batch) {
        // audit fault: independent batch at the previous point
        for (auto& i : batch) i = static_cast<std::size_t>(rng.below(n));
    }
    const DenseVector g_old =
        batch_grad(obj, batch, state.prev_point, counter, SfoCharge::Recompute);

    for (std::size_t j = 0; j < state.v.size(); ++j) {
        state.v[j] += g_new[j] - g_old[j];
    }
    state.prev_point = point;
}

void spider_advance_online(SpiderState& state, const StreamingOracle& stream,
                           const DenseVector& point, OracleCounter& counter, Rng& rng) {
    require_off_boundary(state);
    if (state.batch == 0) throw ConfigError("spider batch size must be >= 1");
    DenseVector acc(point.size(), 0.0);
    DenseVector g(point.size());
    for (std::size_t t = 0; t < state.batch; ++t) {
        const auto component = stream.draw(rng);
        component->grad(point, g);
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += g[j];
        component->grad(state.prev_point, g);
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] -= g[j];
    }
    const double inv = 1.0 / static_cast<double>(state.batch);
    for (std::size_t j = 0; j < state.v.size(); ++j) {
        state.v[j] += acc[j] * inv;
    }
    counter.component_grad_evals += 2 * state.batch;
    counter.paper_sfo += state.batch;
    state.prev_point = point;
}

}  // namespace ssqn
