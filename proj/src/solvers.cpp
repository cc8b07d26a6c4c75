#include "ssqn/solvers.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "ssqn/errors.hpp"

namespace ssqn {

namespace {

constexpr std::uint64_t kOutputRngSalt = 0x5deece66d1a2b3c4ULL;

void step_in_place(DenseVector& x, double step, const DenseVector& d) {
    for (std::size_t j = 0; j < x.size(); ++j) {
        x[j] = x[j] - step * d[j];
    }
}

MomentumKind default_momentum(Algorithm a) {
    switch (a) {
        case Algorithm::spider_sqn_m:
            return MomentumKind::vanilla;
        case Algorithm::spider_sqn_mer:
            return MomentumKind::epoch_restart;
        case Algorithm::spider_sqn_med:
        case Algorithm::spider_med:
            return MomentumKind::epoch_diminishing;
        default:
            return MomentumKind::none;
    }
}

bool uses_momentum(Algorithm a) {
    return a == Algorithm::spider_sqn_m || a == Algorithm::spider_sqn_mer ||
           a == Algorithm::spider_sqn_med || a == Algorithm::spider_med;
}

bool quasi_newton_enabled(Algorithm a) {
    return a != Algorithm::spider_boost && a != Algorithm::spider_med &&
           a != Algorithm::sgd;
}

struct SigmaBounds {
    double sigma_min;
    double sigma_max;
};

SigmaBounds resolve_sigma_bounds(const SolverConfig& cfg) {
    if (cfg.sigma_min > 0.0 && cfg.sigma_max > 0.0) {
        if (cfg.sigma_min > cfg.sigma_max) {
            throw ConfigError("sigma_min must not exceed sigma_max");
        }
        return {cfg.sigma_min, cfg.sigma_max};
    }
    if (cfg.kappa > 0.0) {
        const auto [lo, hi] =
            theoretical_eig_bounds(cfg.delta, cfg.kappa, std::max<std::size_t>(cfg.m, 1));
        return {lo, hi};
    }
    throw ConfigError("theoretical step mode needs sigma_min/sigma_max or kappa");
}

double resolve_step(const SolverConfig& cfg, StepVariant variant) {
    if (cfg.step == StepRule::practical) {
        return variant == StepVariant::eta ? cfg.eta : cfg.beta;
    }
    if (!(cfg.L > 0.0)) throw ConfigError("theoretical step mode needs L > 0");
    const auto sb = resolve_sigma_bounds(cfg);
    return theoretical_stepsize(variant, cfg.L, sb.sigma_min, sb.sigma_max);
}

// Checkpoint recording, divergence guard and the uniform-output reservoir,
// shared across the solver loops.
class RunRecorder {
public:
    RunRecorder(const SolverConfig& cfg,
                std::function<double(const DenseVector&)> value_fn,
                std::function<DenseVector(const DenseVector&)> grad_fn)
        : cfg_(cfg),
          value_fn_(std::move(value_fn)),
          grad_fn_(std::move(grad_fn)),
          out_rng_(cfg.seed ^ kOutputRngSalt),
          start_(std::chrono::steady_clock::now()) {}

    void maybe_checkpoint(std::uint64_t k, const DenseVector& x,
                          const OracleCounter& counter) {
        if (k % cfg_.checkpoint_every != 0) return;
        Checkpoint cp;
        cp.k = k;
        cp.paper_sfo = counter.paper_sfo;
        cp.grad_evals = counter.component_grad_evals;
        cp.f = value_fn_ ? value_fn_(x) : std::numeric_limits<double>::quiet_NaN();
        cp.grad_norm = grad_fn_ ? norm2(grad_fn_(x)) : std::numeric_limits<double>::quiet_NaN();
        cp.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start_)
                         .count();
        if (value_fn_ && (!std::isfinite(cp.f) || cp.f > 1e12)) {
            throw DivergenceError("objective diverged at iteration " + std::to_string(k), k);
        }
        trace.checkpoints.push_back(cp);
    }

    void after_step(std::uint64_t k, const DenseVector& x) {
        if (!all_finite(x)) {
            throw DivergenceError("non-finite iterate at iteration " + std::to_string(k), k);
        }
        if (cfg_.output_rule == OutputRule::uniform_random_iterate) {
            // reservoir of size one over x_1, ..., x_K
            if (out_rng_.below(k + 1) == 0) trace.output_x = x;
        }
    }

    void finish(const DenseVector& final_x, const OracleCounter& counter) {
        if (cfg_.K % cfg_.checkpoint_every == 0) {
            maybe_checkpoint(cfg_.K, final_x, counter);
        }
        trace.final_x = final_x;
        trace.counter = counter;
        if (cfg_.output_rule == OutputRule::last_iterate || trace.output_x.empty()) {
            trace.output_x = final_x;
        }
    }

    RunTrace trace;

private:
    const SolverConfig& cfg_;
    std::function<double(const DenseVector&)> value_fn_;
    std::function<DenseVector(const DenseVector&)> grad_fn_;
    Rng out_rng_;
    std::chrono::steady_clock::time_point start_;
};

DenseVector initial_point(const SolverConfig& cfg, std::size_t d) {
    if (cfg.x0) {
        if (cfg.x0->size() != d) throw DimensionError("x0 length does not match problem dimension");
        return *cfg.x0;
    }
    return DenseVector(d, 0.0);
}

// Algorithms 2 and 4: SPIDER estimator, optional SdLBFGS direction, fixed
// step. `obj` drives the finite-sum mode, `stream` the online one.
RunTrace run_plain_spider(const SolverConfig& cfg, const Objective* obj,
                          const StreamingOracle* stream, const StepObserver& observer) {
    const std::size_t d = obj ? obj->dim() : stream->dim();
    const double eta = resolve_step(cfg, StepVariant::eta);
    const std::size_t mem_size = quasi_newton_enabled(cfg.algorithm) ? cfg.m : 0;

    RunRecorder rec(
        cfg,
        obj ? std::function<double(const DenseVector&)>(
                  [obj](const DenseVector& x) { return obj->value(x); })
            : (stream->has_population()
                   ? std::function<double(const DenseVector&)>(
                         [stream](const DenseVector& x) { return stream->population_value(x); })
                   : nullptr),
        obj ? std::function<DenseVector(const DenseVector&)>(
                  [obj](const DenseVector& x) { return full_grad_raw(*obj, x); })
            : (stream->has_population()
                   ? std::function<DenseVector(const DenseVector&)>(
                         [stream](const DenseVector& x) { return stream->population_grad(x); })
                   : nullptr));

    OracleCounter counter;
    Rng rng(cfg.seed);
    DenseVector x = initial_point(cfg, d);
    SpiderState st;
    st.q = cfg.q;
    st.batch = cfg.batch;
    st.refresh_batch = cfg.refresh_batch;
    st.v.assign(d, 0.0);
    st.prev_point = x;
    LbfgsMemory mem(mem_size, cfg.delta);

    DenseVector prev_x, prev_v;
    bool have_prev = false;
    for (std::uint64_t k = 0; k < cfg.K; ++k) {
        rec.maybe_checkpoint(k, x, counter);
        st.k = k;
        if (k % cfg.q == 0) {
            if (obj) {
                spider_refresh(st, *obj, x, counter);
            } else {
                spider_refresh_online(st, *stream, x, counter, rng);
            }
        } else {
            if (obj) {
                spider_advance(st, *obj, x, counter, rng);
            } else {
                spider_advance_online(st, *stream, x, counter, rng);
            }
        }
        if (have_prev) {
            update_memory(mem, sub(x, prev_x), sub(st.v, prev_v), norm2(x));
        }
        const DenseVector dir = two_loop_direction(mem, st.v);
        rec.trace.min_descent_inner =
            std::min(rec.trace.min_descent_inner, dot(dir, st.v));
        if (observer) observer(k, mem, st.v, dir);
        prev_x = x;
        prev_v = st.v;
        have_prev = true;
        step_in_place(x, eta, dir);
        rec.after_step(k + 1, x);
    }
    rec.trace.min_damping_margin = mem.min_damping_margin;
    rec.finish(x, counter);
    return rec.trace;
}

// Algorithms 3 and 5 plus the SpiderMED baseline: three-sequence momentum.
RunTrace run_momentum_spider(const SolverConfig& cfg, const Objective* obj,
                             const StreamingOracle* stream, const StepObserver& observer) {
    const std::size_t d = obj ? obj->dim() : stream->dim();
    const double beta = resolve_step(cfg, StepVariant::beta);
    const std::size_t mem_size = quasi_newton_enabled(cfg.algorithm) ? cfg.m : 0;
    const MomentumKind kind =
        cfg.momentum_kind ? *cfg.momentum_kind : default_momentum(cfg.algorithm);

    RunRecorder rec(
        cfg,
        obj ? std::function<double(const DenseVector&)>(
                  [obj](const DenseVector& x) { return obj->value(x); })
            : (stream->has_population()
                   ? std::function<double(const DenseVector&)>(
                         [stream](const DenseVector& x) { return stream->population_value(x); })
                   : nullptr),
        obj ? std::function<DenseVector(const DenseVector&)>(
                  [obj](const DenseVector& x) { return full_grad_raw(*obj, x); })
            : (stream->has_population()
                   ? std::function<DenseVector(const DenseVector&)>(
                         [stream](const DenseVector& x) { return stream->population_grad(x); })
                   : nullptr));

    OracleCounter counter;
    Rng rng(cfg.seed);
    ThreeSequenceState seq(initial_point(cfg, d));
    SpiderState st;
    st.q = cfg.q;
    st.batch = cfg.batch;
    st.refresh_batch = cfg.refresh_batch;
    st.v.assign(d, 0.0);
    st.prev_point = seq.x;
    LbfgsMemory mem(mem_size, cfg.delta);

    DenseVector prev_z, prev_v;
    bool have_prev = false;
    for (std::uint64_t k = 0; k < cfg.K; ++k) {
        rec.maybe_checkpoint(k, seq.x, counter);
        interpolate(seq, momentum_alpha(kind, k + 1, cfg.q));
        st.k = k;
        if (k % cfg.q == 0) {
            if (obj) {
                spider_refresh(st, *obj, seq.z, counter);
            } else {
                spider_refresh_online(st, *stream, seq.z, counter, rng);
            }
        } else {
            if (obj) {
                spider_advance(st, *obj, seq.z, counter, rng);
            } else {
                spider_advance_online(st, *stream, seq.z, counter, rng);
            }
        }
        if (have_prev) {
            update_memory(mem, sub(seq.z, prev_z), sub(st.v, prev_v), norm2(seq.z));
        }
        const DenseVector dir = two_loop_direction(mem, st.v);
        rec.trace.min_descent_inner =
            std::min(rec.trace.min_descent_inner, dot(dir, st.v));
        if (observer) observer(k, mem, st.v, dir);
        const double lambda =
            select_lambda(cfg.lambda_rule, beta, momentum_alpha(kind, k, cfg.q));
        prev_z = seq.z;
        prev_v = st.v;
        have_prev = true;
        dual_update(seq, dir, lambda, beta);
        rec.after_step(k + 1, seq.x);
    }
    rec.trace.min_damping_margin = mem.min_damping_margin;
    rec.finish(seq.x, counter);
    rec.trace.final_y = seq.y;
    rec.trace.final_z = seq.z;
    return rec.trace;
}

RunTrace run_sgd(const SolverConfig& cfg, const Objective& obj, const StepObserver& observer) {
    const double eta = resolve_step(cfg, StepVariant::eta);
    RunRecorder rec(
        cfg, [&obj](const DenseVector& x) { return obj.value(x); },
        [&obj](const DenseVector& x) { return full_grad_raw(obj, x); });

    OracleCounter counter;
    Rng rng(cfg.seed);
    DenseVector x = initial_point(cfg, obj.dim());
    LbfgsMemory dummy(0, cfg.delta);
    std::vector<std::size_t> batch(cfg.batch);
    const std::size_t n = obj.num_components();
    for (std::uint64_t k = 0; k < cfg.K; ++k) {
        rec.maybe_checkpoint(k, x, counter);
        for (auto& i : batch) i = static_cast<std::size_t>(rng.below(n));
        const DenseVector g = batch_grad(obj, batch, x, counter, SfoCharge::Full);
        if (observer) observer(k, dummy, g, g);
        step_in_place(x, eta, g);
        rec.after_step(k + 1, x);
    }
    rec.finish(x, counter);
    return rec.trace;
}

// SdLBFGS with the SVRG estimator: fixed epoch anchor with an exact full
// gradient, per-step correction toward it.
RunTrace run_sdlbfgs_vr(const SolverConfig& cfg, const Objective& obj,
                        const StepObserver& observer) {
    const double eta = resolve_step(cfg, StepVariant::eta);
    RunRecorder rec(
        cfg, [&obj](const DenseVector& x) { return obj.value(x); },
        [&obj](const DenseVector& x) { return full_grad_raw(obj, x); });

    OracleCounter counter;
    Rng rng(cfg.seed);
    DenseVector x = initial_point(cfg, obj.dim());
    LbfgsMemory mem(cfg.m, cfg.delta);
    DenseVector anchor = x;
    DenseVector mu(obj.dim(), 0.0);
    std::vector<std::size_t> batch(cfg.batch);
    const std::size_t n = obj.num_components();

    DenseVector prev_x, prev_v;
    bool have_prev = false;
    for (std::uint64_t k = 0; k < cfg.K; ++k) {
        rec.maybe_checkpoint(k, x, counter);
        DenseVector v;
        if (k % cfg.q == 0) {
            anchor = x;
            mu = full_grad(obj, x, counter);
            v = mu;
        } else {
            for (auto& i : batch) i = static_cast<std::size_t>(rng.below(n));
            v = batch_grad(obj, batch, x, counter, SfoCharge::Full);
            const DenseVector at_anchor =
                batch_grad(obj, batch, anchor, counter, SfoCharge::Recompute);
            for (std::size_t j = 0; j < v.size(); ++j) v[j] += mu[j] - at_anchor[j];
        }
        if (have_prev) {
            update_memory(mem, sub(x, prev_x), sub(v, prev_v), norm2(x));
        }
        const DenseVector dir = two_loop_direction(mem, v);
        rec.trace.min_descent_inner = std::min(rec.trace.min_descent_inner, dot(dir, v));
        if (observer) observer(k, mem, v, dir);
        prev_x = x;
        prev_v = v;
        have_prev = true;
        step_in_place(x, eta, dir);
        rec.after_step(k + 1, x);
    }
    rec.trace.min_damping_margin = mem.min_damping_margin;
    rec.finish(x, counter);
    return rec.trace;
}

}  // namespace

void SolverConfig::validate() const {
    if (q < 1) throw ConfigError("epoch length q must be >= 1");
    if (batch < 1) throw ConfigError("batch size must be >= 1");
    if (K < 1) throw ConfigError("iteration budget K must be >= 1");
    if (!(delta > 0.0)) throw ConfigError("delta must be > 0");
    if (checkpoint_every < 1) throw ConfigError("checkpoint cadence must be >= 1");
    if (step == StepRule::practical) {
        if (!(eta > 0.0) || !(beta > 0.0)) throw ConfigError("step sizes must be > 0");
    } else {
        if (!(L > 0.0)) throw ConfigError("theoretical step mode needs L > 0");
        resolve_sigma_bounds(*this);
    }
    if (mode == Mode::online && refresh_batch < 1) {
        throw ConfigError("online mode needs refresh_batch >= 1");
    }
}

Algorithm parse_algorithm(const std::string& name) {
    if (name == "spider_sqn" || name == "ssqn") return Algorithm::spider_sqn;
    if (name == "spider_sqn_m" || name == "ssqnm") return Algorithm::spider_sqn_m;
    if (name == "spider_sqn_mer" || name == "ssqnmer") return Algorithm::spider_sqn_mer;
    if (name == "spider_sqn_med" || name == "ssqnmed") return Algorithm::spider_sqn_med;
    if (name == "sgd") return Algorithm::sgd;
    if (name == "spider_boost") return Algorithm::spider_boost;
    if (name == "spider_med") return Algorithm::spider_med;
    if (name == "sdlbfgs_vr") return Algorithm::sdlbfgs_vr;
    throw ConfigError("unknown algorithm: " + name);
}

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::spider_sqn: return "spider_sqn";
        case Algorithm::spider_sqn_m: return "spider_sqn_m";
        case Algorithm::spider_sqn_mer: return "spider_sqn_mer";
        case Algorithm::spider_sqn_med: return "spider_sqn_med";
        case Algorithm::sgd: return "sgd";
        case Algorithm::spider_boost: return "spider_boost";
        case Algorithm::spider_med: return "spider_med";
        case Algorithm::sdlbfgs_vr: return "sdlbfgs_vr";
    }
    return "unknown";
}

RunTrace solve(const SolverConfig& cfg, const Objective& obj, const StepObserver& observer) {
    cfg.validate();
    if (cfg.mode != Mode::finite_sum) {
        throw ConfigError("solve() handles the finite-sum mode; use solve_online()");
    }
    switch (cfg.algorithm) {
        case Algorithm::sgd:
            return run_sgd(cfg, obj, observer);
        case Algorithm::sdlbfgs_vr:
            return run_sdlbfgs_vr(cfg, obj, observer);
        case Algorithm::spider_sqn:
        case Algorithm::spider_boost:
            return run_plain_spider(cfg, &obj, nullptr, observer);
        case Algorithm::spider_sqn_m:
        case Algorithm::spider_sqn_mer:
        case Algorithm::spider_sqn_med:
        case Algorithm::spider_med:
            return run_momentum_spider(cfg, &obj, nullptr, observer);
    }
    throw ConfigError("unknown algorithm");
}

RunTrace solve_online(const SolverConfig& cfg, const StreamingOracle& stream,
                      const StepObserver& observer) {
    cfg.validate();
    if (cfg.mode != Mode::online) {
        throw ConfigError("solve_online() requires mode = online");
    }
    switch (cfg.algorithm) {
        case Algorithm::spider_sqn:
        case Algorithm::spider_boost:
            return run_plain_spider(cfg, nullptr, &stream, observer);
        case Algorithm::spider_sqn_m:
        case Algorithm::spider_sqn_mer:
        case Algorithm::spider_sqn_med:
        case Algorithm::spider_med:
            return run_momentum_spider(cfg, nullptr, &stream, observer);
        default:
            throw ConfigError("algorithm has no online variant: " +
                              algorithm_name(cfg.algorithm));
    }
}

double theoretical_stepsize(StepVariant variant, double L, double sigma_min,
                            double sigma_max) {
    if (!(L > 0.0) || !(sigma_min > 0.0) || !(sigma_max > 0.0) || sigma_min > sigma_max) {
        throw ConfigError("theoretical step needs L > 0 and 0 < sigma_min <= sigma_max");
    }
    if (variant == StepVariant::eta) {
        return (1.0 + std::sqrt(5.0)) * sigma_min / (2.0 * L * sigma_max * sigma_max);
    }
    return sigma_min / ((3.0 + std::sqrt(15.0)) * L * sigma_max * sigma_max);
}

OnlineRecipe online_parameter_recipe(StepVariant variant, double epsilon, double sigma1,
                                     double L, double sigma_min, double sigma_max) {
    if (!(epsilon > 0.0) || !(sigma1 > 0.0)) {
        throw ConfigError("online recipe needs epsilon > 0 and sigma1 > 0");
    }
    if (!(L > 0.0) || !(sigma_min > 0.0) || sigma_min > sigma_max) {
        throw ConfigError("online recipe needs L > 0 and 0 < sigma_min <= sigma_max");
    }
    OnlineRecipe r;
    double xi0;
    if (variant == StepVariant::eta) {
        // The per-step descent margin beta* = eta sigma_min/2
        // - L eta^2 sigma_max^2/2 - eta^3 sigma_max^3 L^2/2 is positive only
        // for eta = sigma_min / (m L sigma_max^2) with m = (1+sqrt 5)/2 and
        // sigma_min < sigma_max, where it equals c^2 (m^2 - m - c)/(2 L m^3),
        // c = sigma_min/sigma_max. Use that step here.
        const double m_const = (1.0 + std::sqrt(5.0)) / 2.0;
        const double eta = sigma_min / (m_const * L * sigma_max * sigma_max);
        r.step = eta;
        const double beta_star = eta * sigma_min / 2.0 -
                                 L * eta * eta * sigma_max * sigma_max / 2.0 -
                                 eta * eta * eta * std::pow(sigma_max, 3) * L * L / 2.0;
        if (!(beta_star > 0.0)) {
            throw ConfigError("online recipe: beta* not positive (needs sigma_min < sigma_max)");
        }
        xi0 = (eta * sigma_max / beta_star + 2.0 +
               L * L * std::pow(eta, 3) * std::pow(sigma_max, 3) / beta_star) *
              2.0 * sigma1 * sigma1 / (epsilon * epsilon);
    } else {
        const double beta = theoretical_stepsize(StepVariant::beta, L, sigma_min, sigma_max);
        r.step = beta;
        const double beta_star =
            beta * (sigma_min / 2.0 - 3.0 * L * beta * sigma_max * sigma_max -
                    3.0 * L * L * beta * beta * std::pow(sigma_max, 3));
        if (!(beta_star > 0.0)) throw ConfigError("online recipe: beta* not positive");
        xi0 = 4.0 * (1.0 + beta / beta_star) * sigma1 * sigma1 / (epsilon * epsilon);
    }
    r.q = static_cast<std::size_t>(std::ceil(std::sqrt(xi0)));
    if (r.q < 1) r.q = 1;
    r.refresh_batch = r.q * r.q;  // keeps q = |xi_k| = sqrt(|xi_0|) exact
    return r;
}

}  // namespace ssqn
