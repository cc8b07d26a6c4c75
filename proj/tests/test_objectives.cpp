#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "ssqn/data_io.hpp"
#include "ssqn/objectives.hpp"
#include "ssqn/rng.hpp"

using namespace ssqn;

namespace {

std::shared_ptr<const Dataset> desk_data(std::size_t n = 40, std::size_t d = 8,
                                         std::uint64_t seed = 3) {
    return std::make_shared<Dataset>(generate_synthetic(n, d, 0.4, seed));
}

DenseVector random_point(std::size_t d, Rng& rng, double scale = 1.0) {
    DenseVector x(d);
    for (double& v : x) v = scale * rng.uniform(-1.0, 1.0);
    return x;
}

// f(x) = 0.5 ||x||^2 as a 1-component objective; gradient exact for the
// finite-difference sanity check.
class QuadraticObjective final : public Objective {
public:
    explicit QuadraticObjective(std::size_t d) : d_(d) {}
    std::size_t dim() const override { return d_; }
    std::size_t num_components() const override { return 1; }
    double value_component(std::size_t, const DenseVector& x) const override {
        return 0.5 * sq_norm(x);
    }
    void component_grad_raw(std::size_t, const DenseVector& x,
                            DenseVector& g) const override {
        for (std::size_t j = 0; j < d_; ++j) g[j] += x[j];
    }

private:
    std::size_t d_;
};

// Wraps an objective and corrupts coordinate 0 of every component gradient.
class CorruptedGradient final : public Objective {
public:
    explicit CorruptedGradient(std::shared_ptr<const Objective> inner)
        : inner_(std::move(inner)) {}
    std::size_t dim() const override { return inner_->dim(); }
    std::size_t num_components() const override { return inner_->num_components(); }
    double value_component(std::size_t i, const DenseVector& x) const override {
        return inner_->value_component(i, x);
    }
    void component_grad_raw(std::size_t i, const DenseVector& x,
                            DenseVector& g) const override {
        inner_->component_grad_raw(i, x, g);
        g[0] += 0.1;
    }

private:
    std::shared_ptr<const Objective> inner_;
};

}  // namespace

TEST_CASE("svm gradient at the origin is -b_i a_i") {
    auto data = desk_data();
    SvmSigmoidObjective obj(data, 0.01);
    const DenseVector zero(obj.dim(), 0.0);
    OracleCounter counter;
    for (std::size_t i = 0; i < 5; ++i) {
        const DenseVector g = component_grad(obj, i, zero, counter);
        DenseVector expected(obj.dim(), 0.0);
        sparse_axpy_inplace(-data->examples[i].label, data->examples[i], expected);
        for (std::size_t j = 0; j < obj.dim(); ++j) {
            CHECK(g[j] == doctest::Approx(expected[j]).epsilon(1e-14));
        }
    }
    CHECK(counter.component_grad_evals == 5);
    CHECK(counter.paper_sfo == 5);
}

TEST_CASE("svm value at the origin is 1 + 0 regularizer") {
    SvmSigmoidObjective obj(desk_data(), 0.01);
    CHECK(obj.value(DenseVector(obj.dim(), 0.0)) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("robust regression gradient vanishes at zero residual") {
    auto data = std::make_shared<Dataset>();
    data->d = 2;
    SparseExample ex;
    ex.indices = {0, 1};
    ex.values = {1.0, 2.0};
    ex.label = 1.0 * 0.5 + 2.0 * 0.25;  // <x, a> at x = (0.5, 0.25)
    data->examples.push_back(ex);
    RobustRegressionObjective obj(data);
    OracleCounter counter;
    const DenseVector g = component_grad(obj, 0, {0.5, 0.25}, counter);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);
    CHECK(obj.value_component(0, {0.5, 0.25}) == 0.0);
}

TEST_CASE("logistic regularizer contributes 0.5 r per unit coordinate") {
    // d/dx [x^2/(1+x^2)] = 2x/(1+x^2)^2 = 0.5 at x=1, so the penalty term adds
    // r * 0.5 to that coordinate of the gradient.
    auto data = std::make_shared<Dataset>();
    data->d = 2;
    SparseExample ex;  // no features: the loss part is label-only, grad 0
    ex.label = 1.0;
    data->examples.push_back(ex);
    const double r = 0.37;
    NonconvexLogisticObjective obj(data, r);
    OracleCounter counter;
    const DenseVector g = component_grad(obj, 0, {1.0, 0.0}, counter);
    CHECK(g[0] == doctest::Approx(0.5 * r).epsilon(1e-15));
    CHECK(g[1] == 0.0);
}

TEST_CASE("batch_grad") {
    auto data = desk_data();
    SvmSigmoidObjective obj(data, 0.001);
    Rng rng(8);
    const DenseVector x = random_point(obj.dim(), rng);
    OracleCounter counter;

    SUBCASE("all indices once equals full_grad") {
        std::vector<std::size_t> all(obj.num_components());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        const DenseVector bg = batch_grad(obj, all, x, counter);
        const DenseVector fg = full_grad_raw(obj, x);
        CHECK(bg == fg);
    }
    SUBCASE("duplicate batch {i, i} equals component i") {
        const std::vector<std::size_t> b{4, 4};
        const DenseVector bg = batch_grad(obj, b, x, counter);
        const DenseVector cg = component_grad(obj, 4, x, counter);
        for (std::size_t j = 0; j < obj.dim(); ++j) {
            CHECK(bg[j] == doctest::Approx(cg[j]).epsilon(1e-15));
        }
    }
    SUBCASE("random batch vs naive accumulation oracle") {
        std::vector<std::size_t> b;
        for (int t = 0; t < 7; ++t) b.push_back(rng.below(obj.num_components()));
        const DenseVector bg = batch_grad(obj, b, x, counter);
        DenseVector naive(obj.dim(), 0.0);
        for (std::size_t i : b) {
            const DenseVector g = component_grad(obj, i, x, counter);
            for (std::size_t j = 0; j < obj.dim(); ++j) naive[j] += g[j] / b.size();
        }
        for (std::size_t j = 0; j < obj.dim(); ++j) {
            CHECK(bg[j] == doctest::Approx(naive[j]).epsilon(1e-13));
        }
    }
}

TEST_CASE("full_grad singleton and counting") {
    auto data = std::make_shared<Dataset>(generate_synthetic(1, 5, 0.8, 2));
    SvmSigmoidObjective obj(data, 0.01);
    Rng rng(9);
    const DenseVector x = random_point(5, rng);
    OracleCounter a, b;
    const DenseVector fg = full_grad(obj, x, a);
    const DenseVector cg = component_grad(obj, 0, x, b);
    CHECK(fg == cg);
    CHECK(a.component_grad_evals == 1);
    CHECK(a.paper_sfo == 1);
    CHECK(a.full_grad_evals == 1);
}

TEST_CASE("recompute charge hits raw evals only") {
    SvmSigmoidObjective obj(desk_data(), 0.001);
    OracleCounter counter;
    component_grad(obj, 0, DenseVector(obj.dim(), 0.0), counter, SfoCharge::Recompute);
    CHECK(counter.component_grad_evals == 1);
    CHECK(counter.paper_sfo == 0);
}

TEST_CASE("grad_check: quadratic is exact to fp") {
    QuadraticObjective obj(6);
    Rng rng(10);
    const DenseVector x = random_point(6, rng);
    CHECK(grad_check(obj, x, 1e-5) <= 1e-9);
}

TEST_CASE("grad_check: all three objectives at 20 seeded points") {
    auto data = desk_data(60, 10, 12);
    const std::vector<std::shared_ptr<const Objective>> objs{
        std::make_shared<SvmSigmoidObjective>(data, 0.001),
        std::make_shared<RobustRegressionObjective>(data),
        std::make_shared<NonconvexLogisticObjective>(data, 0.001),
    };
    Rng rng(2024);
    for (const auto& obj : objs) {
        for (int p = 0; p < 20; ++p) {
            const DenseVector x = random_point(obj->dim(), rng);
            CHECK(grad_check(*obj, x, 1e-6) <= 1e-6);
        }
    }
}

TEST_CASE("grad_check detects an injected fault") {
    auto corrupted = std::make_shared<CorruptedGradient>(
        std::make_shared<SvmSigmoidObjective>(desk_data(), 0.001));
    Rng rng(14);
    const DenseVector x = random_point(corrupted->dim(), rng);
    CHECK(grad_check(*corrupted, x, 1e-6) >= 0.05);
}

TEST_CASE("svm curvature bound dominates finite-difference Hessian probes") {
    auto data = desk_data(30, 6, 7);
    SvmSigmoidObjective obj(data, 0.01);
    const double kappa = obj.curvature_bound();
    CHECK(kappa > 0.0);
    Rng rng(15);
    // ||d grad f_i|| / ||dx|| along random secants must stay below kappa.
    for (int t = 0; t < 200; ++t) {
        const std::size_t i = rng.below(obj.num_components());
        const DenseVector x = random_point(6, rng, 2.0);
        DenseVector dx = random_point(6, rng, 1e-4);
        DenseVector g0(6, 0.0), g1(6, 0.0);
        obj.component_grad_raw(i, x, g0);
        DenseVector x1 = x;
        axpy_inplace(1.0, dx, x1);
        obj.component_grad_raw(i, x1, g1);
        CHECK(norm2(sub(g1, g0)) <= kappa * norm2(dx) * (1.0 + 1e-6));
    }
}

TEST_CASE("linear-quadratic stream population oracle") {
    LinearQuadraticStream stream(4, 0.5);
    CHECK(stream.sigma1() == doctest::Approx(std::sqrt(4 * 0.25 / 3.0)).epsilon(1e-15));
    Rng rng(16);
    const DenseVector x = random_point(4, rng);
    CHECK(stream.population_grad(x) == x);
    // A drawn component's gradient is x + c with c in [-w, w]^d.
    auto comp = stream.draw(rng);
    DenseVector g(4, 0.0);
    comp->grad(x, g);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(std::fabs(g[j] - x[j]) <= 0.5);
    }
    // Same component re-evaluated elsewhere keeps its c.
    const DenseVector x2 = random_point(4, rng);
    DenseVector g2(4, 0.0);
    comp->grad(x2, g2);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(g[j] - x[j] == doctest::Approx(g2[j] - x2[j]).epsilon(1e-15));
    }
}

TEST_CASE("synthetic example stream is seed-deterministic") {
    SyntheticExampleStream s1(6, 0.5, 0.001, SyntheticExampleStream::Loss::Svm, 44, 1.0);
    SyntheticExampleStream s2(6, 0.5, 0.001, SyntheticExampleStream::Loss::Svm, 44, 1.0);
    Rng ra(3), rb(3);
    const DenseVector x{0.1, -0.2, 0.3, 0.0, 0.5, -0.1};
    for (int t = 0; t < 10; ++t) {
        auto c1 = s1.draw(ra);
        auto c2 = s2.draw(rb);
        CHECK(c1->value(x) == c2->value(x));
    }
    CHECK(s1.population_value(x) == s2.population_value(x));
}

TEST_CASE("make_objective dispatch") {
    auto data = desk_data();
    CHECK(std::dynamic_pointer_cast<const SvmSigmoidObjective>(
        make_objective(ProblemKind::Svm, data, 0.1)));
    CHECK(std::dynamic_pointer_cast<const RobustRegressionObjective>(
        make_objective(ProblemKind::Robust, data, 0.1)));
    CHECK(std::dynamic_pointer_cast<const NonconvexLogisticObjective>(
        make_objective(ProblemKind::Logistic, data, 0.1)));
}
