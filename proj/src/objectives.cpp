#include "ssqn/objectives.hpp"

#include <cmath>
#include <string>

#include "ssqn/errors.hpp"

namespace ssqn {

namespace {

void require_dim(const Objective& obj, const DenseVector& x) {
    if (x.size() != obj.dim()) {
        throw DimensionError("point length " + std::to_string(x.size()) +
                             " does not match objective dimension " +
                             std::to_string(obj.dim()));
    }
}

void require_index(const Objective& obj, std::size_t i) {
    if (i >= obj.num_components()) {
        throw OracleError("component index " + std::to_string(i) +
                          " out of range (n = " + std::to_string(obj.num_components()) + ")");
    }
}

// log(1 + e^t) without overflow.
double softplus(double t) {
    if (t > 0.0) return t + std::log1p(std::exp(-t));
    return std::log1p(std::exp(t));
}

double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

}  // namespace

double Objective::value(const DenseVector& x) const {
    double acc = 0.0;
    const std::size_t n = num_components();
    for (std::size_t i = 0; i < n; ++i) acc += value_component(i, x);
    return acc / static_cast<double>(n);
}

DenseVector component_grad(const Objective& obj, std::size_t i, const DenseVector& x,
                           OracleCounter& counter, SfoCharge charge) {
    require_dim(obj, x);
    require_index(obj, i);
    DenseVector g(obj.dim(), 0.0);
    obj.component_grad_raw(i, x, g);
    counter.component_grad_evals += 1;
    if (charge == SfoCharge::Full) counter.paper_sfo += 1;
    return g;
}

DenseVector batch_grad(const Objective& obj, std::span<const std::size_t> batch,
                       const DenseVector& x, OracleCounter& counter, SfoCharge charge) {
    require_dim(obj, x);
    if (batch.empty()) throw ConfigError("empty mini-batch");
    DenseVector acc(obj.dim(), 0.0);
    DenseVector g(obj.dim());
    for (std::size_t i : batch) {
        require_index(obj, i);
        std::fill(g.begin(), g.end(), 0.0);
        obj.component_grad_raw(i, x, g);
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += g[j];
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& v : acc) v *= inv;
    counter.component_grad_evals += batch.size();
    if (charge == SfoCharge::Full) counter.paper_sfo += batch.size();
    return acc;
}

DenseVector full_grad(const Objective& obj, const DenseVector& x, OracleCounter& counter) {
    DenseVector g = full_grad_raw(obj, x);
    const std::uint64_t n = obj.num_components();
    counter.component_grad_evals += n;
    counter.paper_sfo += n;
    counter.full_grad_evals += 1;
    return g;
}

DenseVector full_grad_raw(const Objective& obj, const DenseVector& x) {
    require_dim(obj, x);
    DenseVector acc(obj.dim(), 0.0);
    DenseVector g(obj.dim());
    const std::size_t n = obj.num_components();
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(g.begin(), g.end(), 0.0);
        obj.component_grad_raw(i, x, g);
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += g[j];
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (double& v : acc) v *= inv;
    return acc;
}

double grad_check(const Objective& obj, const DenseVector& x, double h) {
    require_dim(obj, x);
    const DenseVector g = full_grad_raw(obj, x);
    DenseVector probe = x;
    double worst = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        probe[j] = x[j] + h;
        const double fp = obj.value(probe);
        probe[j] = x[j] - h;
        const double fm = obj.value(probe);
        probe[j] = x[j];
        const double fd = (fp - fm) / (2.0 * h);
        const double err = std::fabs(fd - g[j]) / (1.0 + std::fabs(g[j]));
        worst = std::max(worst, err);
    }
    return worst;
}

// ---- nonconvex SVM with sigmoid loss ----

SvmSigmoidObjective::SvmSigmoidObjective(std::shared_ptr<const Dataset> data, double r)
    : data_(std::move(data)), r_(r) {
    if (r_ < 0.0) throw ConfigError("svm regularization must be >= 0");
}

double SvmSigmoidObjective::value_component(std::size_t i, const DenseVector& x) const {
    const SparseExample& ex = data_->examples[i];
    const double margin = ex.label * sparse_dot(ex, x);
    return 1.0 - std::tanh(margin) + r_ * sq_norm(x);
}

void SvmSigmoidObjective::component_grad_raw(std::size_t i, const DenseVector& x,
                                             DenseVector& g) const {
    const SparseExample& ex = data_->examples[i];
    const double margin = ex.label * sparse_dot(ex, x);
    const double th = std::tanh(margin);
    const double sech2 = 1.0 - th * th;
    sparse_axpy_inplace(-ex.label * sech2, ex, g);
    if (r_ > 0.0) axpy_inplace(2.0 * r_, x, g);
}

double SvmSigmoidObjective::curvature_bound() const {
    double max_sq = 0.0;
    for (const auto& ex : data_->examples) {
        double s = 0.0;
        for (double v : ex.values) s += v * v;
        max_sq = std::max(max_sq, s);
    }
    // max over u of sech^2(u) tanh(u) is 2/(3 sqrt 3), attained at tanh^2 = 1/3
    const double loss_curv = 2.0 * (2.0 / (3.0 * std::sqrt(3.0))) * max_sq;
    return loss_curv + 2.0 * r_;
}

// ---- robust linear regression ----

RobustRegressionObjective::RobustRegressionObjective(std::shared_ptr<const Dataset> data)
    : data_(std::move(data)) {}

double RobustRegressionObjective::value_component(std::size_t i, const DenseVector& x) const {
    const SparseExample& ex = data_->examples[i];
    const double resid = ex.label - sparse_dot(ex, x);
    return std::log1p(resid * resid / 2.0);
}

void RobustRegressionObjective::component_grad_raw(std::size_t i, const DenseVector& x,
                                                   DenseVector& g) const {
    const SparseExample& ex = data_->examples[i];
    const double resid = ex.label - sparse_dot(ex, x);
    const double coeff = -resid / (resid * resid / 2.0 + 1.0);
    sparse_axpy_inplace(coeff, ex, g);
}

// ---- nonconvex logistic regression ----

NonconvexLogisticObjective::NonconvexLogisticObjective(std::shared_ptr<const Dataset> data,
                                                       double r)
    : data_(std::move(data)), r_(r) {
    if (r_ < 0.0) throw ConfigError("logistic regularization must be >= 0");
    labels01_.resize(data_->n());
    for (std::size_t i = 0; i < data_->n(); ++i) {
        labels01_[i] = data_->examples[i].label > 0.0 ? 1.0 : 0.0;
    }
}

double NonconvexLogisticObjective::value_component(std::size_t i, const DenseVector& x) const {
    const SparseExample& ex = data_->examples[i];
    const double t = sparse_dot(ex, x);
    // cross-entropy in log-sum-exp form: -[b log s(t) + (1-b) log(1-s(t))]
    double v = softplus(t) - labels01_[i] * t;
    if (r_ > 0.0) {
        double reg = 0.0;
        for (double xj : x) reg += xj * xj / (1.0 + xj * xj);
        v += r_ * reg;
    }
    return v;
}

void NonconvexLogisticObjective::component_grad_raw(std::size_t i, const DenseVector& x,
                                                    DenseVector& g) const {
    const SparseExample& ex = data_->examples[i];
    const double t = sparse_dot(ex, x);
    sparse_axpy_inplace(sigmoid(t) - labels01_[i], ex, g);
    if (r_ > 0.0) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double denom = 1.0 + x[j] * x[j];
            g[j] += r_ * 2.0 * x[j] / (denom * denom);
        }
    }
}

// ---- streaming oracles ----

namespace {

class LinearQuadraticComponent final : public StreamComponent {
public:
    explicit LinearQuadraticComponent(DenseVector c) : c_(std::move(c)) {}

    double value(const DenseVector& x) const override {
        return 0.5 * sq_norm(x) + dot(c_, x);
    }
    void grad(const DenseVector& x, DenseVector& g) const override {
        for (std::size_t j = 0; j < x.size(); ++j) g[j] = x[j] + c_[j];
    }

private:
    DenseVector c_;
};

class ExampleComponent final : public StreamComponent {
public:
    ExampleComponent(SparseExample ex, std::size_t d, double r,
                     SyntheticExampleStream::Loss loss) {
        auto data = std::make_shared<Dataset>();
        data->d = d;
        data->examples.push_back(std::move(ex));
        holder_ = data;
        switch (loss) {
            case SyntheticExampleStream::Loss::Svm:
                obj_ = std::make_shared<SvmSigmoidObjective>(holder_, r);
                break;
            case SyntheticExampleStream::Loss::Robust:
                obj_ = std::make_shared<RobustRegressionObjective>(holder_);
                break;
            case SyntheticExampleStream::Loss::Logistic:
                obj_ = std::make_shared<NonconvexLogisticObjective>(holder_, r);
                break;
        }
    }

    double value(const DenseVector& x) const override { return obj_->value_component(0, x); }
    void grad(const DenseVector& x, DenseVector& g) const override {
        std::fill(g.begin(), g.end(), 0.0);
        obj_->component_grad_raw(0, x, g);
    }

private:
    std::shared_ptr<const Dataset> holder_;
    std::shared_ptr<const Objective> obj_;
};

}  // namespace

LinearQuadraticStream::LinearQuadraticStream(std::size_t d, double half_width)
    : d_(d), half_width_(half_width) {
    if (d < 1 || !(half_width >= 0.0)) {
        throw ConfigError("linear-quadratic stream needs d >= 1 and half_width >= 0");
    }
}

double LinearQuadraticStream::sigma1() const {
    return std::sqrt(static_cast<double>(d_) * half_width_ * half_width_ / 3.0);
}

std::unique_ptr<StreamComponent> LinearQuadraticStream::draw(Rng& rng) const {
    DenseVector c(d_);
    for (double& v : c) v = rng.uniform(-half_width_, half_width_);
    return std::make_unique<LinearQuadraticComponent>(std::move(c));
}

double LinearQuadraticStream::population_value(const DenseVector& x) const {
    return 0.5 * sq_norm(x);
}

DenseVector LinearQuadraticStream::population_grad(const DenseVector& x) const {
    return x;
}

SyntheticExampleStream::SyntheticExampleStream(std::size_t d, double density, double r,
                                               Loss loss, std::uint64_t seed, double sigma1,
                                               std::size_t eval_sample)
    : d_(d), density_(density), r_(r), loss_(loss), sigma1_(sigma1) {
    if (!(density > 0.0) || density > 1.0) throw ConfigError("density must lie in (0, 1]");
    if (!(sigma1 > 0.0)) throw ConfigError("sigma1 must be > 0");
    Rng rng(seed);
    hidden_u_.resize(d_);
    for (double& v : hidden_u_) v = rng.uniform(-1.0, 1.0);

    auto eval = std::make_shared<Dataset>();
    eval->d = d_;
    eval->examples.reserve(eval_sample);
    for (std::size_t i = 0; i < eval_sample; ++i) eval->examples.push_back(make_example(rng));
    eval_data_ = eval;
    switch (loss_) {
        case Loss::Svm:
            eval_objective_ = std::make_shared<SvmSigmoidObjective>(eval_data_, r_);
            break;
        case Loss::Robust:
            eval_objective_ = std::make_shared<RobustRegressionObjective>(eval_data_);
            break;
        case Loss::Logistic:
            eval_objective_ = std::make_shared<NonconvexLogisticObjective>(eval_data_, r_);
            break;
    }
}

SparseExample SyntheticExampleStream::make_example(Rng& rng) const {
    SparseExample ex;
    for (std::size_t j = 0; j < d_; ++j) {
        if (rng.uniform01() < density_) {
            ex.indices.push_back(static_cast<std::uint32_t>(j));
            ex.values.push_back(rng.uniform01());
        }
    }
    ex.label = sparse_dot(ex, hidden_u_) >= 0.0 ? 1.0 : -1.0;
    return ex;
}

std::unique_ptr<StreamComponent> SyntheticExampleStream::draw(Rng& rng) const {
    return std::make_unique<ExampleComponent>(make_example(rng), d_, r_, loss_);
}

double SyntheticExampleStream::population_value(const DenseVector& x) const {
    return eval_objective_->value(x);
}

DenseVector SyntheticExampleStream::population_grad(const DenseVector& x) const {
    return full_grad_raw(*eval_objective_, x);
}

std::shared_ptr<const Objective> make_objective(ProblemKind kind,
                                                std::shared_ptr<const Dataset> data,
                                                double r) {
    switch (kind) {
        case ProblemKind::Svm:
            return std::make_shared<SvmSigmoidObjective>(std::move(data), r);
        case ProblemKind::Robust:
            return std::make_shared<RobustRegressionObjective>(std::move(data));
        case ProblemKind::Logistic:
            return std::make_shared<NonconvexLogisticObjective>(std::move(data), r);
    }
    throw ConfigError("unknown problem kind");
}

}  // namespace ssqn
