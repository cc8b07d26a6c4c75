#include "ssqn/data_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "ssqn/errors.hpp"
#include "ssqn/rng.hpp"

namespace ssqn {

namespace {

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
    throw ParseError("libsvm parse error at line " + std::to_string(line_no) + ": " + what);
}

double parse_real(const char*& p, std::size_t line_no, const char* what) {
    char* end = nullptr;
    const double v = std::strtod(p, &end);
    if (end == p) fail(line_no, std::string("expected ") + what);
    p = end;
    return v;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> dim_override) {
    Dataset data;
    std::size_t max_index = 0;  // 1-based
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#') continue;

        const char* p = line.c_str() + start;
        SparseExample ex;
        ex.label = parse_real(p, line_no, "label");
        while (true) {
            while (*p == ' ' || *p == '\t') ++p;
            if (*p == '\0') break;
            char* end = nullptr;
            const long idx = std::strtol(p, &end, 10);
            if (end == p || *end != ':') fail(line_no, "expected index:value token");
            if (idx < 1) fail(line_no, "feature index must be >= 1");
            p = end + 1;
            const double val = parse_real(p, line_no, "feature value");
            const auto idx0 = static_cast<std::uint32_t>(idx - 1);
            if (!ex.indices.empty() && idx0 <= ex.indices.back()) {
                fail(line_no, "feature indices not ascending");
            }
            ex.indices.push_back(idx0);
            ex.values.push_back(val);
        }
        if (!ex.indices.empty()) {
            max_index = std::max(max_index, static_cast<std::size_t>(ex.indices.back()) + 1);
        }
        data.examples.push_back(std::move(ex));
    }
    if (data.examples.empty()) throw ParseError("libsvm parse error: empty input");
    data.d = max_index;
    if (dim_override) {
        if (*dim_override < max_index) {
            throw ConfigError("dimension override " + std::to_string(*dim_override) +
                              " below max observed feature index " + std::to_string(max_index));
        }
        data.d = *dim_override;
    }
    if (data.d == 0) data.d = 1;  // all-empty feature lists still need a dimension
    return data;
}

Dataset parse_libsvm_file(const std::string& path, std::optional<std::size_t> dim_override) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return parse_libsvm(in, dim_override);
}

void write_libsvm(const Dataset& data, std::ostream& out) {
    char buf[64];
    for (const auto& ex : data.examples) {
        std::snprintf(buf, sizeof buf, "%.17g", ex.label);
        out << buf;
        for (std::size_t t = 0; t < ex.indices.size(); ++t) {
            std::snprintf(buf, sizeof buf, " %u:%.17g", ex.indices[t] + 1, ex.values[t]);
            out << buf;
        }
        out << '\n';
    }
}

std::vector<double> binarize_one_vs_rest(const std::vector<double>& labels,
                                         double positive_class) {
    bool seen = false;
    std::vector<double> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == positive_class) {
            out[i] = 1.0;
            seen = true;
        } else {
            out[i] = -1.0;
        }
    }
    if (!seen) throw ConfigError("positive class does not occur in the labels");
    return out;
}

void binarize_labels(Dataset& data, double positive_class) {
    std::vector<double> labels(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) labels[i] = data.examples[i].label;
    const auto mapped = binarize_one_vs_rest(labels, positive_class);
    for (std::size_t i = 0; i < data.n(); ++i) data.examples[i].label = mapped[i];
}

Dataset generate_synthetic(std::size_t n, std::size_t d, double density,
                           std::uint64_t seed) {
    if (n < 1 || d < 1) throw ConfigError("synthetic data needs n >= 1 and d >= 1");
    if (!(density > 0.0) || density > 1.0) {
        throw ConfigError("density must lie in (0, 1]");
    }
    Rng rng(seed);
    DenseVector u(d);
    for (std::size_t j = 0; j < d; ++j) u[j] = rng.uniform(-1.0, 1.0);

    Dataset data;
    data.d = d;
    data.examples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        SparseExample& ex = data.examples[i];
        for (std::size_t j = 0; j < d; ++j) {
            if (rng.uniform01() < density) {
                ex.indices.push_back(static_cast<std::uint32_t>(j));
                ex.values.push_back(rng.uniform01());
            }
        }
        ex.label = sparse_dot(ex, u) >= 0.0 ? 1.0 : -1.0;
    }
    return data;
}

void maxabs_scale(Dataset& data) {
    DenseVector scale(data.d, 0.0);
    for (const auto& ex : data.examples) {
        for (std::size_t t = 0; t < ex.indices.size(); ++t) {
            scale[ex.indices[t]] = std::max(scale[ex.indices[t]], std::fabs(ex.values[t]));
        }
    }
    for (auto& ex : data.examples) {
        for (std::size_t t = 0; t < ex.indices.size(); ++t) {
            const double s = scale[ex.indices[t]];
            if (s > 0.0) ex.values[t] /= s;
        }
    }
}

}  // namespace ssqn
