// Copyright 2026 The reneg-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "reneg/autodiff/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "reneg/autodiff/tape.hpp"
#include "reneg/error.hpp"

namespace reneg::ad {
namespace {

using Values = std::vector<double>;

Tensor finish(Shape shape, Values values, std::initializer_list<const Tensor*> inputs, BackwardFn backward) {
    Tensor out(std::move(shape), std::move(values));
    std::vector<const Tensor*> ins(inputs);
    Tape* tape = common_tape(ins);
    if (tape == nullptr) return out;
    return tape->record(std::move(out), ins, std::move(backward));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw InvalidArgument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                              shape_string(b.shape()));
    }
}

void require_matrix(const char* op, const Tensor& a) {
    if (a.rank() != 2) throw InvalidArgument(std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
}

// Elementwise unary op: f computes the value, df the local derivative given
// (input, output).
template <class F, class DF>
Tensor unary(const Tensor& a, F f, DF df) {
    const auto& x = a.values();
    Values y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
    Tensor out(a.shape(), std::move(y));
    if (!a.requires_grad()) return out;
    Tensor xs = a.detach(), ys = out.detach();
    const Tensor* ins[] = {&a};
    return a.tape()->record(std::move(out), ins, [xs, ys, df](std::span<const double> g, GradBuffers gi) {
        auto& ga = *gi[0];
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(xs[i], ys[i]);
    });
}

// C[m,n] (+)= A[m,k] B[k,n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

// C[m,k] += G[m,n] B[k,n]^T
void gemm_nt(const double* g, const double* b, double* c, std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* gi = g + i * n;
        double* ci = c + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* bp = b + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += gi[j] * bp[j];
            ci[p] += acc;
        }
    }
}

// C[k,n] += A[m,k]^T G[m,n]
void gemm_tn(const double* a, const double* g, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        const double* gi = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            if (av == 0.0) continue;
            double* cp = c + p * n;
            for (std::size_t j = 0; j < n; ++j) cp[j] += av * gi[j];
        }
    }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape("add", a, b);
    Values y(a.numel());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] + b[i];
    return finish(a.shape(), std::move(y), {&a, &b}, [](std::span<const double> g, GradBuffers gi) {
        for (auto* buf : gi) {
            if (!buf) continue;
            for (std::size_t i = 0; i < g.size(); ++i) (*buf)[i] += g[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape("sub", a, b);
    Values y(a.numel());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] - b[i];
    return finish(a.shape(), std::move(y), {&a, &b}, [](std::span<const double> g, GradBuffers gi) {
        if (gi[0])
            for (std::size_t i = 0; i < g.size(); ++i) (*gi[0])[i] += g[i];
        if (gi[1])
            for (std::size_t i = 0; i < g.size(); ++i) (*gi[1])[i] -= g[i];
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape("mul", a, b);
    Values y(a.numel());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] * b[i];
    Tensor ca = a.detach(), cb = b.detach();
    return finish(a.shape(), std::move(y), {&a, &b}, [ca, cb](std::span<const double> g, GradBuffers gi) {
        if (gi[0])
            for (std::size_t i = 0; i < g.size(); ++i) (*gi[0])[i] += g[i] * cb[i];
        if (gi[1])
            for (std::size_t i = 0; i < g.size(); ++i) (*gi[1])[i] += g[i] * ca[i];
    });
}

Tensor div(const Tensor& a, const Tensor& b) {
    require_same_shape("div", a, b);
    Values y(a.numel());
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (b[i] == 0.0) throw InvalidArgument("div: division by zero");
        y[i] = a[i] / b[i];
    }
    Tensor ca = a.detach(), cb = b.detach();
    return finish(a.shape(), std::move(y), {&a, &b}, [ca, cb](std::span<const double> g, GradBuffers gi) {
        if (gi[0])
            for (std::size_t i = 0; i < g.size(); ++i) (*gi[0])[i] += g[i] / cb[i];
        if (gi[1])
            for (std::size_t i = 0; i < g.size(); ++i) (*gi[1])[i] -= g[i] * ca[i] / (cb[i] * cb[i]);
    });
}

Tensor scale(const Tensor& a, double factor) {
    Values y(a.numel());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] * factor;
    return finish(a.shape(), std::move(y), {&a}, [factor](std::span<const double> g, GradBuffers gi) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gi[0])[i] += g[i] * factor;
    });
}

Tensor add_scalar(const Tensor& a, double value) {
    Values y(a.numel());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] + value;
    return finish(a.shape(), std::move(y), {&a}, [](std::span<const double> g, GradBuffers gi) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gi[0])[i] += g[i];
    });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor square(const Tensor& a) {
    return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor sqrt(const Tensor& a) {
    for (double v : a.data()) {
        if (v < 0.0) throw InvalidArgument("sqrt: negative input " + std::to_string(v));
    }
    return unary(a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Tensor exp(const Tensor& a) {
    return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    for (double v : a.data()) {
        if (!(v > 0.0)) throw InvalidArgument("log: non-positive input " + std::to_string(v));
    }
    return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor tanh(const Tensor& a) {
    return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor softplus(const Tensor& a) {
    return unary(
        a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
        [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Tensor silu(const Tensor& a) {
    return unary(
        a, [](double x) { return x / (1.0 + std::exp(-x)); },
        [](double x, double) {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 + x * (1.0 - s));
        });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix("matmul", a);
    require_matrix("matmul", b);
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw InvalidArgument("matmul: inner dimensions differ " + shape_string(a.shape()) + " x " +
                              shape_string(b.shape()));
    }
    Values y(m * n, 0.0);
    gemm_nn(a.data().data(), b.data().data(), y.data(), m, k, n);
    Tensor ca = a.detach(), cb = b.detach();
    return finish({m, n}, std::move(y), {&a, &b}, [ca, cb, m, k, n](std::span<const double> g, GradBuffers gi) {
        if (gi[0]) gemm_nt(g.data(), cb.data().data(), gi[0]->data(), m, n, k);
        if (gi[1]) gemm_tn(ca.data().data(), g.data(), gi[1]->data(), m, k, n);
    });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
    require_matrix("add_row", a);
    const std::size_t m = a.dim(0), n = a.dim(1);
    if (row.numel() != n || row.rank() > 2 || (row.rank() == 2 && row.dim(0) != 1)) {
        throw InvalidArgument("add_row: row " + shape_string(row.shape()) + " does not fit " +
                              shape_string(a.shape()));
    }
    Values y(a.values());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) y[i * n + j] += row[j];
    return finish(a.shape(), std::move(y), {&a, &row}, [m, n](std::span<const double> g, GradBuffers gi) {
        if (gi[0])
            for (std::size_t i = 0; i < g.size(); ++i) (*gi[0])[i] += g[i];
        if (gi[1])
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) (*gi[1])[j] += g[i * n + j];
    });
}

Tensor broadcast_rows(const Tensor& row, std::size_t rows) {
    if (rows == 0) throw InvalidArgument("broadcast_rows: zero rows");
    const std::size_t n = row.numel();
    Values y(rows * n);
    for (std::size_t i = 0; i < rows; ++i) std::copy(row.data().begin(), row.data().end(), y.begin() + i * n);
    return finish({rows, n}, std::move(y), {&row}, [rows, n](std::span<const double> g, GradBuffers gi) {
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < n; ++j) (*gi[0])[j] += g[i * n + j];
    });
}

Tensor mul_col(const Tensor& a, const Tensor& column) {
    require_matrix("mul_col", a);
    const std::size_t m = a.dim(0), n = a.dim(1);
    if (column.numel() != m) {
        throw InvalidArgument("mul_col: column " + shape_string(column.shape()) + " does not fit " +
                              shape_string(a.shape()));
    }
    Values y(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) y[i * n + j] = a[i * n + j] * column[i];
    Tensor ca = a.detach(), cc = column.detach();
    return finish(a.shape(), std::move(y), {&a, &column}, [ca, cc, m, n](std::span<const double> g, GradBuffers gi) {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t idx = i * n + j;
                if (gi[0]) (*gi[0])[idx] += g[idx] * cc[i];
                if (gi[1]) (*gi[1])[i] += g[idx] * ca[idx];
            }
        }
    });
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    return finish({}, {s}, {&a}, [](std::span<const double> g, GradBuffers gi) {
        for (auto& v : *gi[0]) v += g[0];
    });
}

Tensor mean(const Tensor& a) {
    const double inv = 1.0 / static_cast<double>(a.numel());
    double s = 0.0;
    for (double v : a.data()) s += v;
    return finish({}, {s * inv}, {&a}, [inv](std::span<const double> g, GradBuffers gi) {
        for (auto& v : *gi[0]) v += g[0] * inv;
    });
}

Tensor sum_rows(const Tensor& a) {
    require_matrix("sum_rows", a);
    const std::size_t m = a.dim(0), n = a.dim(1);
    Values y(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) y[i] += a[i * n + j];
    return finish({m}, std::move(y), {&a}, [m, n](std::span<const double> g, GradBuffers gi) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) (*gi[0])[i * n + j] += g[i];
    });
}

Tensor logsumexp_rows(const Tensor& a) {
    require_matrix("logsumexp_rows", a);
    const std::size_t m = a.dim(0), n = a.dim(1);
    Values y(m);
    auto soft = std::make_shared<Values>(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, a[i * n + j]);
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double e = std::exp(a[i * n + j] - mx);
            (*soft)[i * n + j] = e;
            s += e;
        }
        for (std::size_t j = 0; j < n; ++j) (*soft)[i * n + j] /= s;
        y[i] = mx + std::log(s);
    }
    return finish({m}, std::move(y), {&a}, [soft, m, n](std::span<const double> g, GradBuffers gi) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) (*gi[0])[i * n + j] += g[i] * (*soft)[i * n + j];
    });
}

Tensor l2_norm(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    const double norm = std::sqrt(s);
    Tensor ca = a.detach();
    return finish({}, {norm}, {&a}, [ca, norm](std::span<const double> g, GradBuffers gi) {
        if (norm == 0.0) return;
        for (std::size_t i = 0; i < ca.numel(); ++i) (*gi[0])[i] += g[0] * ca[i] / norm;
    });
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
    if (parts.empty()) throw InvalidArgument("concat: no inputs");
    const Tensor& first = parts.front();
    const std::size_t rank = first.rank();
    if (rank == 0 || rank > 2 || axis >= rank) {
        throw InvalidArgument("concat: unsupported axis " + std::to_string(axis) + " for shape " +
                              shape_string(first.shape()));
    }
    for (const auto& p : parts) {
        if (p.rank() != rank) {
            throw InvalidArgument("concat: rank mismatch " + shape_string(first.shape()) + " vs " +
                                  shape_string(p.shape()));
        }
        for (std::size_t d = 0; d < rank; ++d) {
            if (d != axis && p.dim(d) != first.dim(d)) {
                throw InvalidArgument("concat: shape mismatch " + shape_string(first.shape()) + " vs " +
                                      shape_string(p.shape()));
            }
        }
    }

    // Treat every part as [outer, width_i] and interleave widths.
    const std::size_t outer = (rank == 2 && axis == 1) ? first.dim(0) : 1;
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const auto& p : parts) {
        widths.push_back(p.numel() / outer);
        total += widths.back();
    }
    Values y(outer * total);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        for (std::size_t r = 0; r < outer; ++r) {
            std::copy_n(parts[k].data().data() + r * widths[k], widths[k], y.data() + r * total + offset);
        }
        offset += widths[k];
    }
    Shape shape = first.shape();
    shape[axis] = 0;
    for (const auto& p : parts) shape[axis] += p.dim(axis);

    Tensor out(std::move(shape), std::move(y));
    std::vector<const Tensor*> ins;
    for (const auto& p : parts) ins.push_back(&p);
    Tape* tape = common_tape(ins);
    if (tape == nullptr) return out;
    return tape->record(std::move(out), ins, [outer, widths, total](std::span<const double> g, GradBuffers gi) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < widths.size(); ++k) {
            if (gi[k]) {
                for (std::size_t r = 0; r < outer; ++r)
                    for (std::size_t j = 0; j < widths[k]; ++j) (*gi[k])[r * widths[k] + j] += g[r * total + off + j];
            }
            off += widths[k];
        }
    });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end) {
    if (a.rank() == 0 || a.rank() > 2 || axis >= a.rank()) {
        throw InvalidArgument("slice: unsupported axis " + std::to_string(axis) + " for shape " +
                              shape_string(a.shape()));
    }
    if (begin >= end || end > a.dim(axis)) {
        throw InvalidArgument("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                              ") out of bounds for shape " + shape_string(a.shape()));
    }
    const std::size_t outer = (a.rank() == 2 && axis == 1) ? a.dim(0) : 1;
    const std::size_t width = a.numel() / outer;
    const std::size_t inner = (a.rank() == 2 && axis == 0) ? a.dim(1) : 1;
    const std::size_t lo = begin * inner, hi = end * inner, w = hi - lo;
    Values y(outer * w);
    for (std::size_t r = 0; r < outer; ++r) std::copy_n(a.data().data() + r * width + lo, w, y.data() + r * w);
    Shape shape = a.shape();
    shape[axis] = end - begin;
    return finish(std::move(shape), std::move(y), {&a}, [outer, width, lo, w](std::span<const double> g, GradBuffers gi) {
        for (std::size_t r = 0; r < outer; ++r)
            for (std::size_t j = 0; j < w; ++j) (*gi[0])[r * width + lo + j] += g[r * w + j];
    });
}

Tensor take(const Tensor& a, std::span<const std::size_t> indices) {
    if (a.rank() == 0 || a.rank() > 2) throw InvalidArgument("take: unsupported shape " + shape_string(a.shape()));
    if (indices.empty()) throw InvalidArgument("take: no indices");
    const std::size_t n = a.dim(0);
    const std::size_t inner = a.rank() == 2 ? a.dim(1) : 1;
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    Values y(idx.size() * inner);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] >= n) {
            throw InvalidArgument("take: index " + std::to_string(idx[r]) + " out of range for shape " +
                                  shape_string(a.shape()));
        }
        std::copy_n(a.data().data() + idx[r] * inner, inner, y.data() + r * inner);
    }
    Shape shape = a.shape();
    shape[0] = idx.size();
    return finish(std::move(shape), std::move(y), {&a}, [idx, inner](std::span<const double> g, GradBuffers gi) {
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t j = 0; j < inner; ++j) (*gi[0])[idx[r] * inner + j] += g[r * inner + j];
    });
}

Tensor reshape(const Tensor& a, Shape shape) {
    Tensor view = a.reshaped(shape);
    Values y(a.values());
    return finish(std::move(shape), std::move(y), {&a}, [](std::span<const double> g, GradBuffers gi) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gi[0])[i] += g[i];
    });
}

}  // namespace reneg::ad
