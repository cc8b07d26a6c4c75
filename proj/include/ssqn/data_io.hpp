#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ssqn/vector_ops.hpp"

namespace ssqn {

struct Dataset {
    std::vector<SparseExample> examples;
    std::size_t d = 0;

    std::size_t n() const { return examples.size(); }
};

/// Parses LIBSVM text: one "label idx:val idx:val ..." line per example with
/// 1-based ascending indices on disk, converted to 0-based here. Blank lines
/// and lines starting with '#' are skipped. d is the largest index observed
/// unless dim_override raises it. Parse failures report the line number.
Dataset parse_libsvm(std::istream& in,
                     std::optional<std::size_t> dim_override = std::nullopt);

Dataset parse_libsvm_file(const std::string& path,
                          std::optional<std::size_t> dim_override = std::nullopt);

/// Writes the 1-based on-disk form with 17 significant digits so a
/// write -> parse round trip reproduces the dataset exactly.
void write_libsvm(const Dataset& data, std::ostream& out);

/// label == positive_class -> +1, else -1. Throws ConfigError when
/// positive_class never occurs.
std::vector<double> binarize_one_vs_rest(const std::vector<double>& labels,
                                         double positive_class);

/// Applies a one-vs-rest map to the labels stored in a dataset.
void binarize_labels(Dataset& data, double positive_class);

/// Synthetic sparse data: every coordinate of each example is nonzero with
/// probability `density` with value ~ U[0,1]; a hidden u ~ U[-1,1]^d drawn
/// once per dataset sets the labels b = sign(<u, a>), with sign(0) -> +1.
/// Fully reproducible from the seed (xoshiro256** stream, u first, then per
/// example per coordinate an inclusion draw followed by a value draw).
Dataset generate_synthetic(std::size_t n, std::size_t d, double density,
                           std::uint64_t seed);

/// Per-feature max-abs scaling (optional, off by default in the CLI).
void maxabs_scale(Dataset& data);

}  // namespace ssqn
