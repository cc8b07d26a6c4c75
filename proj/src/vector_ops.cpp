#include "ssqn/vector_ops.hpp"

#include <cmath>
#include <string>

namespace ssqn {

namespace {

void require_same_length(const DenseVector& a, const DenseVector& b) {
    if (a.size() != b.size()) {
        throw DimensionError("vector length mismatch: " + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()));
    }
}

}  // namespace

double dot(const DenseVector& a, const DenseVector& b) {
    require_same_length(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double sparse_dot(const SparseExample& e, const DenseVector& x) {
    double acc = 0.0;
    for (std::size_t t = 0; t < e.indices.size(); ++t) {
        const std::uint32_t j = e.indices[t];
        if (j >= x.size()) {
            throw DimensionError("sparse index " + std::to_string(j) +
                                 " out of range for dimension " + std::to_string(x.size()));
        }
        acc += e.values[t] * x[j];
    }
    return acc;
}

DenseVector axpy(double alpha, const DenseVector& x, const DenseVector& y) {
    require_same_length(x, y);
    DenseVector out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + alpha * x[i];
    return out;
}

void axpy_inplace(double alpha, const DenseVector& x, DenseVector& y) {
    require_same_length(x, y);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

void sparse_axpy_inplace(double alpha, const SparseExample& e, DenseVector& y) {
    for (std::size_t t = 0; t < e.indices.size(); ++t) {
        const std::uint32_t j = e.indices[t];
        if (j >= y.size()) {
            throw DimensionError("sparse index " + std::to_string(j) +
                                 " out of range for dimension " + std::to_string(y.size()));
        }
        y[j] += alpha * e.values[t];
    }
}

double sq_norm(const DenseVector& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return acc;
}

double norm2(const DenseVector& v) { return std::sqrt(sq_norm(v)); }

DenseVector sub(const DenseVector& a, const DenseVector& b) {
    require_same_length(a, b);
    DenseVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

void scale_inplace(double alpha, DenseVector& v) {
    for (double& x : v) x *= alpha;
}

bool all_finite(const DenseVector& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

void require_finite(const DenseVector& v, const char* what) {
    if (!all_finite(v)) {
        throw NumericalError(std::string("non-finite entries in ") + what);
    }
}

void validate_example(const SparseExample& e, std::size_t d) {
    if (e.indices.size() != e.values.size()) {
        throw DimensionError("sparse example: index/value length mismatch");
    }
    for (std::size_t t = 0; t < e.indices.size(); ++t) {
        if (e.indices[t] >= d) {
            throw DimensionError("sparse example: index " + std::to_string(e.indices[t]) +
                                 " >= dimension " + std::to_string(d));
        }
        if (t > 0 && e.indices[t] <= e.indices[t - 1]) {
            throw DimensionError("sparse example: indices not strictly ascending");
        }
    }
}

}  // namespace ssqn
