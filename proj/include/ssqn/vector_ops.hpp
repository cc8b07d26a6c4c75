#pragma once

#include <cstdint>
#include <vector>

#include "ssqn/errors.hpp"

namespace ssqn {

/// Iterate / gradient container. Length is the problem dimension d and is
/// fixed for the whole run. All summations are plain left-to-right so results
/// are bit-reproducible for a given seed.
using DenseVector = std::vector<double>;

/// One data point (a_i, b_i) in sparse form. Indices are 0-based and strictly
/// ascending; the LIBSVM parser converts from the 1-based on-disk convention.
struct SparseExample {
    std::vector<std::uint32_t> indices;
    std::vector<double> values;
    double label = 0.0;
};

/// Oracle-call tally, owned by one solver run.
///
/// component_grad_evals counts every single-component gradient evaluation.
/// paper_sfo charges a sampled component once even when the SPIDER update
/// evaluates it at two points, so component_grad_evals >= paper_sfo always.
struct OracleCounter {
    std::uint64_t component_grad_evals = 0;
    std::uint64_t paper_sfo = 0;
    std::uint64_t full_grad_evals = 0;
};

double dot(const DenseVector& a, const DenseVector& b);

double sparse_dot(const SparseExample& e, const DenseVector& x);

/// y + alpha * x
DenseVector axpy(double alpha, const DenseVector& x, const DenseVector& y);

/// y += alpha * x
void axpy_inplace(double alpha, const DenseVector& x, DenseVector& y);

/// e.values scattered with weight alpha into y.
void sparse_axpy_inplace(double alpha, const SparseExample& e, DenseVector& y);

double norm2(const DenseVector& v);
double sq_norm(const DenseVector& v);

DenseVector sub(const DenseVector& a, const DenseVector& b);

void scale_inplace(double alpha, DenseVector& v);

bool all_finite(const DenseVector& v);

/// Throws NumericalError naming `what` if v holds a NaN/Inf.
void require_finite(const DenseVector& v, const char* what);

/// Throws DimensionError unless indices are strictly ascending and < d.
void validate_example(const SparseExample& e, std::size_t d);

}  // namespace ssqn
