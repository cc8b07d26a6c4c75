#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "ssqn/audit.hpp"
#include "ssqn/data_io.hpp"
#include "ssqn/objectives.hpp"
#include "ssqn/rng.hpp"
#include "ssqn/spider.hpp"

using namespace ssqn;

namespace {

// n copies of 0.5 ||x||^2: sampling-independent gradients.
class IdenticalComponents final : public Objective {
public:
    IdenticalComponents(std::size_t n, std::size_t d) : n_(n), d_(d) {}
    std::size_t dim() const override { return d_; }
    std::size_t num_components() const override { return n_; }
    double value_component(std::size_t, const DenseVector& x) const override {
        return 0.5 * sq_norm(x);
    }
    void component_grad_raw(std::size_t, const DenseVector& x,
                            DenseVector& g) const override {
        for (std::size_t j = 0; j < d_; ++j) g[j] += x[j];
    }

private:
    std::size_t n_, d_;
};

DenseVector random_point(std::size_t d, Rng& rng, double scale = 1.0) {
    DenseVector x(d);
    for (double& v : x) v = scale * rng.uniform(-1.0, 1.0);
    return x;
}

}  // namespace

TEST_CASE("refresh equals the exact full gradient") {
    auto data = std::make_shared<Dataset>(generate_synthetic(50, 8, 0.3, 4));
    SvmSigmoidObjective obj(data, 0.001);
    Rng rng(1);
    const DenseVector x = random_point(8, rng);
    SpiderState st;
    st.q = 10;
    st.batch = 4;
    OracleCounter counter;
    spider_refresh(st, obj, x, counter);
    CHECK(st.v == full_grad_raw(obj, x));
    CHECK(st.prev_point == x);
    CHECK(counter.paper_sfo == 50);
    CHECK(counter.component_grad_evals == 50);
}

TEST_CASE("refresh off an epoch boundary throws") {
    IdenticalComponents obj(10, 2);
    SpiderState st;
    st.q = 5;
    st.batch = 2;
    st.k = 3;  // not a multiple of q
    OracleCounter counter;
    CHECK_THROWS_AS(spider_refresh(st, obj, {0.0, 0.0}, counter), ContractError);
}

TEST_CASE("advance with point == prev_point leaves v unchanged exactly") {
    QuadraticFamilyObjective obj(10, 2, 77);
    SpiderState st;
    st.q = 100;
    st.batch = 3;
    OracleCounter counter;
    Rng rng(2);
    spider_refresh(st, obj, {0.4, -0.1}, counter);
    for (int step = 1; step <= 10; ++step) {
        st.k = step;
        const DenseVector before = st.v;
        spider_advance(st, obj, st.prev_point, counter, rng);
        CHECK(st.v == before);
    }
}

TEST_CASE("identical components give v = grad regardless of sampling") {
    IdenticalComponents obj(30, 3);
    SpiderState st;
    st.q = 50;
    st.batch = 2;
    OracleCounter counter;
    Rng rng(3);
    DenseVector x{0.5, -0.25, 1.0};
    spider_refresh(st, obj, x, counter);
    for (int step = 1; step <= 8; ++step) {
        st.k = step;
        x = random_point(3, rng);
        spider_advance(st, obj, x, counter, rng);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(st.v[j] == doctest::Approx(x[j]).epsilon(1e-12));
        }
    }
}

TEST_CASE("advance counters: batch charged once, evaluated twice") {
    IdenticalComponents obj(20, 2);
    SpiderState st;
    st.q = 50;
    st.batch = 6;
    OracleCounter counter;
    Rng rng(4);
    spider_refresh(st, obj, {1.0, 1.0}, counter);
    const auto sfo0 = counter.paper_sfo;
    const auto ev0 = counter.component_grad_evals;
    st.k = 1;
    spider_advance(st, obj, {0.9, 1.1}, counter, rng);
    CHECK(counter.paper_sfo - sfo0 == 6);
    CHECK(counter.component_grad_evals - ev0 == 12);
}

TEST_CASE("conditional mean of one advance is the exact correction") {
    QuadraticFamilyObjective obj(10, 2, 5);
    const DenseVector x0{0.3, -0.2}, x1{0.35, -0.12};
    const DenseVector g0 = full_grad_raw(obj, x0);
    const DenseVector g1 = full_grad_raw(obj, x1);

    const int trials = 20000;
    DenseVector mean(2, 0.0);
    double mse = 0.0;
    for (int t = 0; t < trials; ++t) {
        SpiderState st;
        st.q = 100;
        st.batch = 2;
        OracleCounter counter;
        Rng rng(1000 + t);
        spider_refresh(st, obj, x0, counter);
        st.k = 1;
        spider_advance(st, obj, x1, counter, rng);
        for (int j = 0; j < 2; ++j) mean[j] += st.v[j] / trials;
        mse += sq_norm(sub(st.v, g1)) / trials;
    }
    // E[v_1] = grad f(x_1) - grad f(x_0) + v_0 = g1 exactly.
    const double se = 3.0 / std::sqrt(static_cast<double>(trials));
    for (int j = 0; j < 2; ++j) {
        CHECK(std::fabs(mean[j] - g1[j]) <= se);
    }
    // Appendix variance bound: E||v_1 - g1||^2 <= (L^2/|xi|) ||x1 - x0||^2.
    const double lips = obj.lipschitz();
    const double bound = lips * lips / 2.0 * sq_norm(sub(x1, x0));
    CHECK(mse <= bound * 1.05);
}

TEST_CASE("per-step variance recursion over 10000 resamples") {
    QuadraticFamilyObjective obj(10, 2, 6);
    const double lips = obj.lipschitz();
    const std::size_t steps = 4, batch = 2;
    std::vector<DenseVector> path(steps + 1);
    Rng prng(7);
    path[0] = {0.25, 0.4};
    for (std::size_t i = 1; i <= steps; ++i) {
        path[i] = path[i - 1];
        axpy_inplace(0.04, random_point(2, prng), path[i]);
    }
    std::vector<DenseVector> grads(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) grads[i] = full_grad_raw(obj, path[i]);

    const int trials = 10000;
    std::vector<double> mse(steps + 1, 0.0);
    for (int t = 0; t < trials; ++t) {
        SpiderState st;
        st.q = 100;
        st.batch = batch;
        OracleCounter counter;
        Rng rng(5000 + t);
        spider_refresh(st, obj, path[0], counter);
        for (std::size_t i = 1; i <= steps; ++i) {
            st.k = i;
            spider_advance(st, obj, path[i], counter, rng);
            mse[i] += sq_norm(sub(st.v, grads[i])) / trials;
        }
    }
    for (std::size_t i = 1; i <= steps; ++i) {
        const double increment =
            lips * lips / batch * sq_norm(sub(path[i], path[i - 1]));
        CHECK(mse[i] <= (increment + mse[i - 1]) * 1.05);
    }
}

TEST_CASE("online refresh and advance") {
    LinearQuadraticStream stream(3, 0.5);
    SpiderState st;
    st.q = 10;
    st.batch = 4;
    st.refresh_batch = 64;
    OracleCounter counter;
    Rng rng(8);
    const DenseVector x0{0.2, -0.1, 0.3};

    spider_refresh_online(st, stream, x0, counter, rng);
    CHECK(counter.paper_sfo == 64);
    CHECK(counter.component_grad_evals == 64);
    // grad f_c(x) = x + c: the mean over 64 draws is x + mean(c).
    for (int j = 0; j < 3; ++j) CHECK(std::fabs(st.v[j] - x0[j]) <= 0.5);

    st.k = 1;
    const DenseVector v0 = st.v;
    const DenseVector x1{0.1, 0.0, 0.25};
    spider_advance_online(st, stream, x1, counter, rng);
    CHECK(counter.paper_sfo == 64 + 4);
    CHECK(counter.component_grad_evals == 64 + 8);
    // Each component is linear in x with unit slope, so the correction is
    // exact: v_1 = v_0 + (x1 - x0).
    for (int j = 0; j < 3; ++j) {
        CHECK(st.v[j] == doctest::Approx(v0[j] + x1[j] - x0[j]).epsilon(1e-12));
    }
}

TEST_CASE("online estimator variance matches sigma1^2 / refresh_batch") {
    const std::size_t d = 4;
    const double w = 0.5;
    LinearQuadraticStream stream(d, w);
    const double sigma1_sq = stream.sigma1() * stream.sigma1();
    const std::size_t batch0 = 32;
    const DenseVector x(d, 0.1);
    const DenseVector g = stream.population_grad(x);

    const int trials = 10000;
    double mse = 0.0;
    for (int t = 0; t < trials; ++t) {
        SpiderState st;
        st.q = 10;
        st.batch = 4;
        st.refresh_batch = batch0;
        OracleCounter counter;
        Rng rng(9000 + t);
        spider_refresh_online(st, stream, x, counter, rng);
        mse += sq_norm(sub(st.v, g)) / trials;
    }
    const double expected = sigma1_sq / batch0;
    CHECK(mse == doctest::Approx(expected).epsilon(0.10));
}
