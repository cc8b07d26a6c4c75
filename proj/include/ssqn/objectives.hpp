#pragma once

#include <memory>
#include <span>

#include "ssqn/data_io.hpp"
#include "ssqn/rng.hpp"
#include "ssqn/vector_ops.hpp"

namespace ssqn {

/// Finite-sum problem oracle: f(x) = (1/n) sum_i f_i(x). Component gradients
/// are deterministic for fixed (i, x); every counted call bumps the
/// OracleCounter owned by the run. Objectives are read-only after
/// construction and shareable across threads.
class Objective {
public:
    virtual ~Objective() = default;

    virtual std::size_t dim() const = 0;
    virtual std::size_t num_components() const = 0;

    virtual double value_component(std::size_t i, const DenseVector& x) const = 0;
    /// Writes grad f_i(x) into g (sized and zeroed by the caller's helper).
    virtual void component_grad_raw(std::size_t i, const DenseVector& x,
                                    DenseVector& g) const = 0;

    /// Mean component value; a measurement, never charged to the counter.
    double value(const DenseVector& x) const;
};

/// Whether the second evaluation point of a SPIDER/SVRG correction is being
/// charged. The paper counts a sampled component once per step even though
/// the estimator evaluates it at two points; Recompute charges the raw
/// evaluation tally only.
enum class SfoCharge { Full, Recompute };

DenseVector component_grad(const Objective& obj, std::size_t i, const DenseVector& x,
                           OracleCounter& counter, SfoCharge charge = SfoCharge::Full);

DenseVector batch_grad(const Objective& obj, std::span<const std::size_t> batch,
                       const DenseVector& x, OracleCounter& counter,
                       SfoCharge charge = SfoCharge::Full);

DenseVector full_grad(const Objective& obj, const DenseVector& x, OracleCounter& counter);

/// Uncounted exact full gradient, for checkpoints and tests.
DenseVector full_grad_raw(const Objective& obj, const DenseVector& x);

/// Central-difference check of the analytic full gradient:
/// max_j |(f(x+h e_j) - f(x-h e_j))/(2h) - g_j| / (1 + |g_j|).
double grad_check(const Objective& obj, const DenseVector& x, double h);

/// Nonconvex SVM with sigmoid loss: f_i(x) = 1 - tanh(b_i <x, a_i>) + r ||x||^2.
class SvmSigmoidObjective final : public Objective {
public:
    SvmSigmoidObjective(std::shared_ptr<const Dataset> data, double r);

    std::size_t dim() const override { return data_->d; }
    std::size_t num_components() const override { return data_->n(); }
    double value_component(std::size_t i, const DenseVector& x) const override;
    void component_grad_raw(std::size_t i, const DenseVector& x,
                            DenseVector& g) const override;

    /// Verified bound on ||hessian of f_i||: 2 max_u sech^2(u) tanh(u) = 4/(3 sqrt 3)
    /// times max_i ||a_i||^2, plus 2r from the ridge term.
    double curvature_bound() const;

private:
    std::shared_ptr<const Dataset> data_;
    double r_;
};

/// Robust regression: f_i(x) = log((b_i - <x, a_i>)^2 / 2 + 1).
class RobustRegressionObjective final : public Objective {
public:
    explicit RobustRegressionObjective(std::shared_ptr<const Dataset> data);

    std::size_t dim() const override { return data_->d; }
    std::size_t num_components() const override { return data_->n(); }
    double value_component(std::size_t i, const DenseVector& x) const override;
    void component_grad_raw(std::size_t i, const DenseVector& x,
                            DenseVector& g) const override;

private:
    std::shared_ptr<const Dataset> data_;
};

/// Nonconvex logistic regression: cross-entropy on labels mapped to {0,1}
/// plus the bounded regularizer r sum_j x_j^2 / (1 + x_j^2). Dataset labels
/// in {-1,+1} are mapped to {0,1} at construction.
class NonconvexLogisticObjective final : public Objective {
public:
    NonconvexLogisticObjective(std::shared_ptr<const Dataset> data, double r);

    std::size_t dim() const override { return data_->d; }
    std::size_t num_components() const override { return data_->n(); }
    double value_component(std::size_t i, const DenseVector& x) const override;
    void component_grad_raw(std::size_t i, const DenseVector& x,
                            DenseVector& g) const override;

private:
    std::shared_ptr<const Dataset> data_;
    std::vector<double> labels01_;
    double r_;
};

/// One component drawn from a population risk; stays evaluable at several
/// points so the SPIDER correction can reuse the same draw.
class StreamComponent {
public:
    virtual ~StreamComponent() = default;
    virtual double value(const DenseVector& x) const = 0;
    virtual void grad(const DenseVector& x, DenseVector& g) const = 0;
};

/// Population-risk oracle for the online setting: fresh i.i.d. component
/// draws from a seeded stream, never a finite index set. sigma1 is the
/// user-supplied gradient-variance proxy, not estimated.
class StreamingOracle {
public:
    virtual ~StreamingOracle() = default;

    virtual std::size_t dim() const = 0;
    virtual double sigma1() const = 0;
    virtual std::unique_ptr<StreamComponent> draw(Rng& rng) const = 0;

    /// Population f / grad f when known in closed form or via a fixed
    /// held-out sample; used for checkpoints only (uncounted).
    virtual bool has_population() const { return false; }
    virtual double population_value(const DenseVector&) const { return 0.0; }
    virtual DenseVector population_grad(const DenseVector& x) const {
        return DenseVector(x.size(), 0.0);
    }
};

/// Components f_c(x) = 0.5 ||x||^2 + <c, x> with c ~ U[-w, w]^d, so
/// grad f_c(x) = x + c, grad f(x) = x, and the per-draw gradient variance is
/// d w^2 / 3 at every x. Used by the online solver tests and Monte Carlo
/// variance checks.
class LinearQuadraticStream final : public StreamingOracle {
public:
    LinearQuadraticStream(std::size_t d, double half_width);

    std::size_t dim() const override { return d_; }
    double sigma1() const override;
    std::unique_ptr<StreamComponent> draw(Rng& rng) const override;

    bool has_population() const override { return true; }
    double population_value(const DenseVector& x) const override;
    DenseVector population_grad(const DenseVector& x) const override;

private:
    std::size_t d_;
    double half_width_;
};

/// Streams synthetic sparse examples through one of the three finite-sum
/// losses; the hidden label vector u is fixed by the stream seed. Population
/// values are approximated with a fixed held-out sample drawn once.
class SyntheticExampleStream final : public StreamingOracle {
public:
    enum class Loss { Svm, Robust, Logistic };

    SyntheticExampleStream(std::size_t d, double density, double r, Loss loss,
                           std::uint64_t seed, double sigma1,
                           std::size_t eval_sample = 2048);

    std::size_t dim() const override { return d_; }
    double sigma1() const override { return sigma1_; }
    std::unique_ptr<StreamComponent> draw(Rng& rng) const override;

    bool has_population() const override { return true; }
    double population_value(const DenseVector& x) const override;
    DenseVector population_grad(const DenseVector& x) const override;

private:
    SparseExample make_example(Rng& rng) const;

    std::size_t d_;
    double density_;
    double r_;
    Loss loss_;
    double sigma1_;
    DenseVector hidden_u_;
    std::shared_ptr<const Dataset> eval_data_;
    std::shared_ptr<const Objective> eval_objective_;
};

/// Builds the objective matching a CLI problem name over a shared dataset.
enum class ProblemKind { Svm, Robust, Logistic };

std::shared_ptr<const Objective> make_objective(ProblemKind kind,
                                                std::shared_ptr<const Dataset> data,
                                                double r);

}  // namespace ssqn
