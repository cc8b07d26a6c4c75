#include "ssqn/audit.hpp"

#include <cmath>
#include <cstdio>

#include "ssqn/data_io.hpp"
#include "ssqn/errors.hpp"
#include "ssqn/rng.hpp"
#include "ssqn/solvers.hpp"
#include "ssqn/spider.hpp"

namespace ssqn {

FaultInjection parse_fault(const std::string& name) {
    if (name == "none") return FaultInjection::none;
    if (name == "damping-off") return FaultInjection::damping_off;
    if (name == "gamma-floor-off") return FaultInjection::gamma_floor_off;
    if (name == "spider-batch") return FaultInjection::spider_batch_broken;
    throw ConfigError("unknown fault injection: " + name);
}

bool AuditReport::all_pass() const {
    for (const auto& c : checks) {
        if (!c.pass) return false;
    }
    return true;
}

QuadraticFamilyObjective::QuadraticFamilyObjective(std::size_t n, std::size_t d,
                                                   std::uint64_t seed)
    : d_(d) {
    Rng rng(seed);
    mats_.resize(n);
    linear_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        DenseMatrix& a = mats_[i];
        a.n = d;
        a.a.assign(d * d, 0.0);
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t c = r; c < d; ++c) {
                const double v = rng.uniform(-1.0, 1.0);
                a.at(r, c) = v;
                a.at(c, r) = v;
            }
        }
        linear_[i].resize(d);
        for (double& v : linear_[i]) v = rng.uniform(-1.0, 1.0);
        double frob = 0.0;
        for (double v : a.a) frob += v * v;
        // Frobenius norm dominates the spectral norm, so it is a valid L.
        lipschitz_ = std::max(lipschitz_, std::sqrt(frob));
    }
}

double QuadraticFamilyObjective::value_component(std::size_t i, const DenseVector& x) const {
    const DenseVector ax = mat_vec(mats_[i], x);
    return 0.5 * dot(x, ax) + dot(linear_[i], x);
}

void QuadraticFamilyObjective::component_grad_raw(std::size_t i, const DenseVector& x,
                                                  DenseVector& g) const {
    const DenseVector ax = mat_vec(mats_[i], x);
    for (std::size_t j = 0; j < d_; ++j) g[j] += ax[j] + linear_[i][j];
}

namespace {

// Randomized curvature histories checked against the dense rank-two
// recursion. Not sensitive to the fault injections on purpose: two-loop and
// oracle share the stored pairs, whatever produced them.
AuditCheck check_two_loop_dense(std::uint64_t seed) {
    AuditCheck check{.name = "two_loop_dense_equivalence"};
    Rng rng(seed);
    double worst = 0.0;
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t d = 1 + rng.below(5);
        const std::size_t m = 1 + rng.below(3);
        LbfgsMemory mem(m, 0.5 + rng.uniform01());
        const std::size_t updates = 1 + rng.below(2 * m);
        for (std::size_t u = 0; u < updates; ++u) {
            DenseVector s(d), y(d);
            for (double& v : s) v = rng.uniform(-1.0, 1.0);
            for (double& v : y) v = rng.uniform(-1.0, 1.0);
            update_memory(mem, s, y, 1.0);
        }
        const DenseMatrix h = dense_hessian_oracle(mem, d);
        DenseVector v(d);
        for (double& x : v) x = rng.uniform(-1.0, 1.0);
        const DenseVector fast = two_loop_direction(mem, v);
        const DenseVector slow = mat_vec(h, v);
        const double denom = std::max(norm2(slow), 1e-30);
        worst = std::max(worst, norm2(sub(fast, slow)) / denom);
    }
    check.margin = worst;
    check.pass = worst <= 1e-10;
    char buf[128];
    std::snprintf(buf, sizeof buf, "max rel err %.3e (limit 1e-10)", worst);
    check.detail = buf;
    return check;
}

// Adversarial pair stream, including strongly negative curvature, against the
// damping floor s'y_hat >= 0.25 gamma s's.
AuditCheck check_damping_floor(std::uint64_t seed, const LbfgsUpdateHooks& hooks) {
    AuditCheck check{.name = "damping_floor"};
    Rng rng(seed + 1);
    double min_ratio = 1e300;
    bool finite = true;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t d = 1 + rng.below(6);
        LbfgsMemory mem(3, 1.0);
        for (int u = 0; u < 4; ++u) {
            DenseVector s(d), y(d);
            for (double& v : s) v = rng.uniform(-1.0, 1.0);
            const double c = rng.uniform(-3.0, 3.0);  // curvature sign sweep
            for (std::size_t j = 0; j < d; ++j) y[j] = c * s[j] + 0.3 * rng.uniform(-1.0, 1.0);
            update_memory(mem, s, y, 1.0, hooks);
            if (!mem.pairs.empty()) {
                const CurvaturePair& pr = mem.pairs.back();
                if (!std::isfinite(pr.rho)) finite = false;
                const double floor = 0.25 * mem.gamma * dot(pr.s, pr.s);
                if (floor > 0.0) min_ratio = std::min(min_ratio, dot(pr.s, pr.y_hat) / floor);
            }
        }
    }
    check.margin = min_ratio;
    check.pass = finite && min_ratio >= 1.0 - 1e-12;
    char buf[160];
    std::snprintf(buf, sizeof buf, "min s'y_hat / (0.25 gamma s's) = %.6f (need >= 1 - 1e-12)",
                  min_ratio);
    check.detail = buf;
    return check;
}

AuditCheck check_gamma_floor(std::uint64_t seed, const LbfgsUpdateHooks& hooks) {
    AuditCheck check{.name = "gamma_floor"};
    Rng rng(seed + 2);
    const double delta = 1.0;
    double min_gamma = 1e300;
    bool healthy = true;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t d = 1 + rng.below(6);
        LbfgsMemory mem(3, delta);
        for (int u = 0; u < 4; ++u) {
            DenseVector s(d), y(d);
            for (double& v : s) v = rng.uniform(-1.0, 1.0);
            const double c = rng.uniform(-0.5, 0.5);  // tiny/negative curvature ratios
            for (std::size_t j = 0; j < d; ++j) y[j] = c * s[j] + 0.05 * rng.uniform(-1.0, 1.0);
            update_memory(mem, s, y, 1.0, hooks);
            min_gamma = std::min(min_gamma, mem.gamma);
            if (!mem.pairs.empty()) {
                const CurvaturePair& pr = mem.pairs.back();
                if (!std::isfinite(pr.rho) || pr.rho <= 0.0) healthy = false;
            }
        }
    }
    check.margin = min_gamma - delta;
    check.pass = healthy && min_gamma >= delta;
    char buf[128];
    std::snprintf(buf, sizeof buf, "min gamma - delta = %.3e (need >= 0)", min_gamma - delta);
    check.detail = buf;
    return check;
}

// The recursion must reuse one mini-batch at both evaluation points, so a
// zero move leaves the estimator bitwise unchanged.
AuditCheck check_spider_same_batch(std::uint64_t seed, bool reuse_batch) {
    AuditCheck check{.name = "spider_same_batch"};
    QuadraticFamilyObjective obj(10, 2, seed + 3);
    OracleCounter counter;
    Rng rng(seed + 4);
    DenseVector x(2, 0.5);
    SpiderState st;
    st.q = 1000;
    st.batch = 3;
    spider_refresh(st, obj, x, counter);
    double worst = 0.0;
    for (int step = 1; step <= 20; ++step) {
        st.k = step;
        const DenseVector before = st.v;
        spider_advance(st, obj, st.prev_point, counter, rng, reuse_batch);
        worst = std::max(worst, norm2(sub(st.v, before)));
    }
    check.margin = worst;
    check.pass = worst == 0.0;
    char buf[128];
    std::snprintf(buf, sizeof buf, "max |delta v| on zero moves = %.3e (need 0)", worst);
    check.detail = buf;
    return check;
}

// Monte Carlo check of the telescoped estimator-variance bound
// E||v_k - grad f(x_k)||^2 <= sum_i (L^2/|xi|) ||x_{i+1} - x_i||^2
// along a fixed path inside one epoch.
AuditCheck check_spider_variance(std::uint64_t seed, bool reuse_batch) {
    AuditCheck check{.name = "spider_variance_bound"};
    const std::size_t steps = 5;
    const std::size_t batch = 2;
    const int trials = 3000;
    QuadraticFamilyObjective obj(10, 2, seed + 5);
    const double lips = obj.lipschitz();

    std::vector<DenseVector> path(steps + 1, DenseVector(2));
    Rng path_rng(seed + 6);
    path[0] = {0.3, -0.2};
    for (std::size_t i = 1; i <= steps; ++i) {
        path[i] = path[i - 1];
        path[i][0] += 0.05 * path_rng.uniform(-1.0, 1.0);
        path[i][1] += 0.05 * path_rng.uniform(-1.0, 1.0);
    }
    std::vector<DenseVector> grads(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) grads[i] = full_grad_raw(obj, path[i]);

    std::vector<double> mse(steps + 1, 0.0);
    for (int t = 0; t < trials; ++t) {
        OracleCounter counter;
        Rng rng(seed + 100 + static_cast<std::uint64_t>(t));
        SpiderState st;
        st.q = 1000;
        st.batch = batch;
        spider_refresh(st, obj, path[0], counter);
        for (std::size_t i = 1; i <= steps; ++i) {
            st.k = i;
            spider_advance(st, obj, path[i], counter, rng, reuse_batch);
            mse[i] += sq_norm(sub(st.v, grads[i])) / trials;
        }
    }
    double bound = 0.0;
    double worst_ratio = 0.0;
    for (std::size_t i = 1; i <= steps; ++i) {
        bound += lips * lips / static_cast<double>(batch) * sq_norm(sub(path[i], path[i - 1]));
        worst_ratio = std::max(worst_ratio, mse[i] / bound);
    }
    check.margin = worst_ratio;
    check.pass = worst_ratio <= 1.05;
    char buf[128];
    std::snprintf(buf, sizeof buf, "max empirical/bound = %.4f (limit 1.05)", worst_ratio);
    check.detail = buf;
    return check;
}

// Rayleigh quotients of the implicit H during a real solver run must stay
// inside the closed-form eigenvalue bracket.
AuditCheck check_spectral_sandwich(std::uint64_t seed) {
    AuditCheck check{.name = "spectral_sandwich"};
    auto data = std::make_shared<Dataset>(generate_synthetic(200, 20, 0.2, seed + 7));
    auto obj = std::make_shared<SvmSigmoidObjective>(data, 0.001);
    const double kappa = obj->curvature_bound();
    const std::size_t m = 5;
    const double delta = 1.0;
    const auto [lower, upper] = theoretical_eig_bounds(delta, kappa, m);

    SolverConfig cfg;
    cfg.algorithm = Algorithm::spider_sqn;
    cfg.q = 20;
    cfg.batch = 16;
    cfg.m = m;
    cfg.delta = delta;
    cfg.K = 300;
    cfg.eta = 0.001;
    cfg.seed = seed + 8;
    cfg.checkpoint_every = 100;

    Rng probe_rng(seed + 9);
    double min_slack = 1e300;
    bool ok = true;
    auto observer = [&](std::uint64_t, const LbfgsMemory& mem, const DenseVector&,
                        const DenseVector&) {
        for (int p = 0; p < 10; ++p) {
            DenseVector z(obj->dim());
            for (double& v : z) v = probe_rng.uniform(-1.0, 1.0);
            const double rq = dot(z, two_loop_direction(mem, z)) / sq_norm(z);
            min_slack = std::min({min_slack, rq - (lower - 1e-8), (upper + 1e-8) - rq});
            if (rq < lower - 1e-8 || rq > upper + 1e-8) ok = false;
        }
    };
    const RunTrace trace = solve(cfg, *obj, observer);
    check.margin = min_slack;
    check.pass = ok && trace.min_descent_inner > 0.0;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "min slack to [%.3e, %.3e] = %.3e; min <d,v> = %.3e", lower, upper,
                  min_slack, trace.min_descent_inner);
    check.detail = buf;
    return check;
}

}  // namespace

AuditReport run_audit(FaultInjection inject, std::uint64_t seed) {
    LbfgsUpdateHooks hooks;
    hooks.damping = inject != FaultInjection::damping_off;
    hooks.gamma_floor = inject != FaultInjection::gamma_floor_off;
    const bool reuse_batch = inject != FaultInjection::spider_batch_broken;

    AuditReport report;
    report.checks.push_back(check_two_loop_dense(seed));
    report.checks.push_back(check_damping_floor(seed, hooks));
    report.checks.push_back(check_gamma_floor(seed, hooks));
    report.checks.push_back(check_spider_same_batch(seed, reuse_batch));
    report.checks.push_back(check_spider_variance(seed, reuse_batch));
    report.checks.push_back(check_spectral_sandwich(seed));
    return report;
}

}  // namespace ssqn
