#pragma once

#include <functional>
#include <optional>
#include <string>

#include "ssqn/momentum.hpp"
#include "ssqn/objectives.hpp"
#include "ssqn/sdlbfgs.hpp"
#include "ssqn/spider.hpp"

namespace ssqn {

enum class Algorithm {
    spider_sqn,
    spider_sqn_m,
    spider_sqn_mer,
    spider_sqn_med,
    sgd,
    spider_boost,
    spider_med,
    sdlbfgs_vr,
};

enum class Mode { finite_sum, online };
enum class StepRule { practical, theoretical };
enum class OutputRule { last_iterate, uniform_random_iterate };
enum class StepVariant { eta, beta };

Algorithm parse_algorithm(const std::string& name);
std::string algorithm_name(Algorithm a);

struct SolverConfig {
    Algorithm algorithm = Algorithm::spider_sqn;
    Mode mode = Mode::finite_sum;
    std::size_t q = 1;
    std::size_t batch = 1;
    std::size_t refresh_batch = 0;  // online only
    StepRule step = StepRule::practical;
    double eta = 0.001;
    double beta = 0.001;
    double L = 0.0;           // theoretical step mode
    double sigma_min = 0.0;   // theoretical step mode
    double sigma_max = 0.0;   // theoretical step mode
    double kappa = 0.0;       // optional surrogate for sigma bounds via eig bounds
    std::size_t m = 5;        // L-BFGS memory; 0 disables the engine (H = I)
    double delta = 1.0;
    std::uint64_t K = 1;
    std::uint64_t seed = 0;
    LambdaRule lambda_rule = LambdaRule::max;
    OutputRule output_rule = OutputRule::last_iterate;
    std::uint64_t checkpoint_every = 1;
    std::optional<MomentumKind> momentum_kind;  // overrides the algorithm default
    std::optional<DenseVector> x0;              // default: origin

    void validate() const;
};

struct Checkpoint {
    std::uint64_t k = 0;
    std::uint64_t paper_sfo = 0;
    std::uint64_t grad_evals = 0;
    double f = 0.0;
    double grad_norm = 0.0;
    double wall_ms = 0.0;
};

struct RunTrace {
    std::vector<Checkpoint> checkpoints;
    DenseVector final_x;
    DenseVector final_y;  // momentum runs only
    DenseVector final_z;  // momentum runs only
    DenseVector output_x;
    OracleCounter counter;
    double min_damping_margin = 1e300;
    double min_descent_inner = 1e300;  // min over steps of <d_k, v_k>
};

/// Per-iteration probe hook for invariant audits (spectral sandwich, damping
/// floor). Called after the direction is computed, before the step.
using StepObserver = std::function<void(std::uint64_t k, const LbfgsMemory& mem,
                                        const DenseVector& v, const DenseVector& d)>;

RunTrace solve(const SolverConfig& cfg, const Objective& obj,
               const StepObserver& observer = nullptr);

RunTrace solve_online(const SolverConfig& cfg, const StreamingOracle& stream,
                      const StepObserver& observer = nullptr);

/// Theorem-recipe fixed steps:
///   eta  = (1 + sqrt 5) sigma_min / (2 L sigma_max^2)
///   beta = sigma_min / ((3 + sqrt 15) L sigma_max^2)
double theoretical_stepsize(StepVariant variant, double L, double sigma_min,
                            double sigma_max);

/// Online batch recipe: refresh_batch = q^2 with q = |xi_k| = sqrt(|xi_0|)
/// derived from the target accuracy and the variance proxy sigma1.
struct OnlineRecipe {
    double step = 0.0;  // eta or beta, per variant
    std::size_t q = 0;
    std::size_t refresh_batch = 0;
};

OnlineRecipe online_parameter_recipe(StepVariant variant, double epsilon, double sigma1,
                                     double L, double sigma_min, double sigma_max);

}  // namespace ssqn
