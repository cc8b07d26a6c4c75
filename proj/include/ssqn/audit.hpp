#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ssqn/objectives.hpp"
#include "ssqn/sdlbfgs.hpp"

namespace ssqn {

/// Self-contained release-gate checks of the engine invariants: damping
/// floor, gamma floor, two-loop / dense-recursion equivalence, the SPIDER
/// same-batch rule, the spectral sandwich and the Monte Carlo variance
/// bound. Fault injections deliberately break one rule each so the gate can
/// be shown to catch them.
enum class FaultInjection { none, damping_off, gamma_floor_off, spider_batch_broken };

FaultInjection parse_fault(const std::string& name);

struct AuditCheck {
    std::string name;
    bool pass = false;
    double margin = 0.0;  // measured slack, check-specific units
    std::string detail;
};

struct AuditReport {
    std::vector<AuditCheck> checks;
    bool all_pass() const;
};

AuditReport run_audit(FaultInjection inject, std::uint64_t seed = 2024);

/// n random quadratics f_i(x) = 0.5 x'A_i x + b_i'x with known max curvature;
/// shared by the audit and the variance-bound tests.
class QuadraticFamilyObjective final : public Objective {
public:
    QuadraticFamilyObjective(std::size_t n, std::size_t d, std::uint64_t seed);

    std::size_t dim() const override { return d_; }
    std::size_t num_components() const override { return mats_.size(); }
    double value_component(std::size_t i, const DenseVector& x) const override;
    void component_grad_raw(std::size_t i, const DenseVector& x,
                            DenseVector& g) const override;

    /// Smoothness constant: max_i ||A_i||_2 (computed by power iteration).
    double lipschitz() const { return lipschitz_; }

private:
    std::size_t d_;
    std::vector<DenseMatrix> mats_;
    std::vector<DenseVector> linear_;
    double lipschitz_ = 0.0;
};

}  // namespace ssqn
