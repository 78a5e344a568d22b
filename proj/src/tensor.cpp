#include "graphtcn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "graphtcn/errors.hpp"
#include "graphtcn/kernels.hpp"

namespace gtcn {

namespace {

thread_local Tape* t_active_tape = nullptr;

using ImplPtr = std::shared_ptr<TensorImpl>;

bool should_record(std::initializer_list<const Tensor*> operands) {
    if (t_active_tape == nullptr) return false;
    return std::any_of(operands.begin(), operands.end(),
                       [](const Tensor* t) { return t->requires_grad(); });
}

// Attaches a backward rule to `out` and appends it to the active tape.
Tensor finish(Tensor out, std::function<void(TensorImpl&)> rule) {
    auto& impl = out.impl();
    impl.requires_grad = true;
    impl.is_leaf = false;
    impl.backward_fn = std::move(rule);
    t_active_tape->record(out.handle());
    return out;
}

// Gradient buffer of an operand, or empty when it does not take gradients.
std::span<double> grad_of(const ImplPtr& p) {
    if (!p->requires_grad) return {};
    p->ensure_grad();
    return p->grad;
}

std::size_t product(const Shape& s, std::size_t from, std::size_t to) {
    std::size_t n = 1;
    for (std::size_t i = from; i < to; ++i) n *= s[i];
    return n;
}

std::string op_shapes(const char* op, const Shape& a, const Shape& b) {
    return std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b);
}

double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

std::size_t numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
    os << ']';
    return os.str();
}

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor() : impl_(std::make_shared<TensorImpl>()) {
    impl_->shape = {1};
    impl_->data = {0.0};
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : impl_(std::make_shared<TensorImpl>()) {
    if (shape.empty()) throw DimensionError("tensor shape must have at least one axis");
    for (auto e : shape)
        if (e == 0) throw DimensionError("tensor extents must be positive: " + shape_str(shape));
    if (numel(shape) != data.size())
        throw DimensionError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
    impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
    return Tensor(shape, std::vector<double>(numel(shape), 0.0), requires_grad);
}

Tensor Tensor::full(const Shape& shape, double value, bool requires_grad) {
    return Tensor(shape, std::vector<double>(numel(shape), value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({1}, {value}, requires_grad); }

Tensor Tensor::vector(std::initializer_list<double> values, bool requires_grad) {
    return Tensor({values.size()}, std::vector<double>(values), requires_grad);
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows, bool requires_grad) {
    std::vector<double> data;
    const std::size_t cols = rows.size() ? rows.begin()->size() : 0;
    for (const auto& r : rows) {
        if (r.size() != cols) throw DimensionError("ragged matrix literal");
        data.insert(data.end(), r.begin(), r.end());
    }
    return Tensor({rows.size(), cols}, std::move(data), requires_grad);
}

std::vector<double> Tensor::grad() const {
    if (!has_grad()) return std::vector<double>(size(), 0.0);
    return impl_->grad;
}

std::span<double> Tensor::grad_mut() {
    impl_->ensure_grad();
    return impl_->grad;
}

void Tensor::zero_grad() {
    if (has_grad()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

double Tensor::item() const {
    if (size() != 1) throw ContractError("item() on a tensor of shape " + shape_str(shape()));
    return impl_->data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
    if (index.size() != rank()) throw DimensionError("index rank does not match tensor rank");
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (auto i : index) {
        if (i >= impl_->shape[axis]) throw DimensionError("index out of range");
        flat = flat * impl_->shape[axis] + i;
        ++axis;
    }
    return impl_->data[flat];
}

Tensor Tensor::detach() const { return Tensor(shape(), impl_->data, false); }

Tensor Tensor::clone() const { return Tensor(shape(), impl_->data, impl_->requires_grad); }

// ---------------------------------------------------------------------------
// Tape

bool Tape::contains(const Tensor& t) const {
    return std::any_of(nodes_.begin(), nodes_.end(),
                       [&](const ImplPtr& p) { return p == t.handle(); });
}

void Tape::backward(const Tensor& root) {
    if (root.size() != 1)
        throw ContractError("backward root must be a scalar, got shape " + shape_str(root.shape()));

    auto it = std::find(nodes_.rbegin(), nodes_.rend(), root.handle());
    if (it == nodes_.rend()) {
        if (root.impl().is_leaf) {
            // A constant root has no path to any parameter.
            if (!root.requires_grad()) return;
            auto& impl = const_cast<TensorImpl&>(root.impl());
            impl.ensure_grad();
            impl.grad[0] += 1.0;
            return;
        }
        throw ContractError("backward root was not recorded on this tape");
    }
    const auto root_index = static_cast<std::size_t>(std::distance(it, nodes_.rend())) - 1;

    for (std::size_t i = 0; i <= root_index; ++i) nodes_[i]->grad.assign(nodes_[i]->data.size(), 0.0);
    nodes_[root_index]->grad[0] = 1.0;

    for (std::size_t i = root_index + 1; i-- > 0;) {
        auto& node = *nodes_[i];
        if (node.backward_fn) node.backward_fn(node);
    }
}

TapeScope::TapeScope(Tape& tape) : previous_(t_active_tape) { t_active_tape = &tape; }
TapeScope::~TapeScope() { t_active_tape = previous_; }

Tape* active_tape() { return t_active_tape; }

void backward(const Tensor& root, Tape& tape) { tape.backward(root); }

// ---------------------------------------------------------------------------
// affine / linear

namespace {

Tensor affine_impl(const Tensor& x, const Tensor& W, const Tensor* b) {
    if (W.rank() != 2 || x.shape().back() != W.extent(0))
        throw DimensionError(op_shapes("affine", x.shape(), W.shape()));
    if (b != nullptr && (b->rank() != 1 || b->extent(0) != W.extent(1)))
        throw DimensionError(op_shapes("affine bias", W.shape(), b->shape()));

    const kernels::AffineDims d{x.size() / W.extent(0), W.extent(0), W.extent(1)};
    Shape out_shape = x.shape();
    out_shape.back() = d.out;
    std::vector<double> out(d.rows * d.out);
    kernels::affine_forward(x.data(), W.data(), b ? b->data() : std::span<const double>{}, out, d);

    Tensor result(std::move(out_shape), std::move(out));
    const bool record = b ? should_record({&x, &W, b}) : should_record({&x, &W});
    if (!record) return result;

    ImplPtr xi = x.handle(), wi = W.handle(), bi = b ? b->handle() : nullptr;
    return finish(std::move(result), [xi, wi, bi, d](TensorImpl& self) {
        if (auto gx = grad_of(xi); !gx.empty()) kernels::affine_backward_input(self.grad, wi->data, gx, d);
        if (auto gw = grad_of(wi); !gw.empty()) kernels::affine_backward_weight(xi->data, self.grad, gw, d);
        if (bi) {
            if (auto gb = grad_of(bi); !gb.empty()) {
                for (std::size_t r = 0; r < d.rows; ++r)
                    for (std::size_t j = 0; j < d.out; ++j) gb[j] += self.grad[r * d.out + j];
            }
        }
    });
}

}  // namespace

Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b) { return affine_impl(x, W, &b); }
Tensor linear(const Tensor& x, const Tensor& W) { return affine_impl(x, W, nullptr); }

// ---------------------------------------------------------------------------
// unary

Tensor unary(UnaryKind kind, const Tensor& x, double slope) {
    const auto in = x.data();
    std::vector<double> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double v = in[i];
        switch (kind) {
            case UnaryKind::leaky_relu: out[i] = v > 0.0 ? v : slope * v; break;
            case UnaryKind::tanh: out[i] = std::tanh(v); break;
            case UnaryKind::sigmoid: out[i] = sigmoid_scalar(v); break;
            case UnaryKind::exp: out[i] = std::exp(v); break;
            case UnaryKind::log:
                if (!(v > 0.0))
                    throw DomainError("log of non-positive element " + std::to_string(v) +
                                      " at index " + std::to_string(i));
                out[i] = std::log(v);
                break;
        }
    }
    Tensor result(x.shape(), std::move(out));
    if (!should_record({&x})) return result;

    ImplPtr xi = x.handle();
    return finish(std::move(result), [xi, kind, slope](TensorImpl& self) {
        auto gx = grad_of(xi);
        if (gx.empty()) return;
        const auto& xv = xi->data;
        const auto& yv = self.data;
        for (std::size_t i = 0; i < gx.size(); ++i) {
            const double g = self.grad[i];
            switch (kind) {
                case UnaryKind::leaky_relu: gx[i] += g * (xv[i] > 0.0 ? 1.0 : slope); break;
                case UnaryKind::tanh: gx[i] += g * (1.0 - yv[i] * yv[i]); break;
                case UnaryKind::sigmoid: gx[i] += g * yv[i] * (1.0 - yv[i]); break;
                case UnaryKind::exp: gx[i] += g * yv[i]; break;
                case UnaryKind::log: gx[i] += g / xv[i]; break;
            }
        }
    });
}

// ---------------------------------------------------------------------------
// binary

Tensor binary(BinaryKind kind, const Tensor& a, const Tensor& b) {
    const bool a_scalar = a.size() == 1;
    const bool b_scalar = b.size() == 1;
    if (a.shape() != b.shape() && !a_scalar && !b_scalar)
        throw DimensionError(op_shapes("elementwise", a.shape(), b.shape()));

    const Shape& out_shape = (a_scalar && !b_scalar) ? b.shape() : a.shape();
    const std::size_t n = numel(out_shape);
    const auto av = a.data();
    const auto bv = b.data();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = av[a_scalar ? 0 : i];
        const double y = bv[b_scalar ? 0 : i];
        switch (kind) {
            case BinaryKind::add: out[i] = x + y; break;
            case BinaryKind::sub: out[i] = x - y; break;
            case BinaryKind::mul: out[i] = x * y; break;
        }
    }
    Tensor result(out_shape, std::move(out));
    if (!should_record({&a, &b})) return result;

    ImplPtr ai = a.handle(), bi = b.handle();
    return finish(std::move(result), [ai, bi, kind, a_scalar, b_scalar](TensorImpl& self) {
        auto ga = grad_of(ai);
        auto gb = grad_of(bi);
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double g = self.grad[i];
            const std::size_t ia = a_scalar ? 0 : i;
            const std::size_t ib = b_scalar ? 0 : i;
            switch (kind) {
                case BinaryKind::add:
                    if (!ga.empty()) ga[ia] += g;
                    if (!gb.empty()) gb[ib] += g;
                    break;
                case BinaryKind::sub:
                    if (!ga.empty()) ga[ia] += g;
                    if (!gb.empty()) gb[ib] -= g;
                    break;
                case BinaryKind::mul:
                    if (!ga.empty()) ga[ia] += g * bi->data[ib];
                    if (!gb.empty()) gb[ib] += g * ai->data[ia];
                    break;
            }
        }
    });
}

Tensor scale(const Tensor& x, double factor) {
    std::vector<double> out(x.data().begin(), x.data().end());
    for (auto& v : out) v *= factor;
    Tensor result(x.shape(), std::move(out));
    if (!should_record({&x})) return result;
    ImplPtr xi = x.handle();
    return finish(std::move(result), [xi, factor](TensorImpl& self) {
        auto gx = grad_of(xi);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += factor * self.grad[i];
    });
}

// ---------------------------------------------------------------------------
// layout ops

Tensor concat(const std::vector<Tensor>& tensors, std::size_t axis) {
    if (tensors.empty()) throw ContractError("concat of an empty list");
    const Shape& first = tensors.front().shape();
    if (axis >= first.size()) throw DimensionError("concat axis out of range for " + shape_str(first));
    if (tensors.size() == 1) return tensors.front();

    Shape out_shape = first;
    out_shape[axis] = 0;
    for (const auto& t : tensors) {
        const Shape& s = t.shape();
        bool ok = s.size() == first.size();
        for (std::size_t d = 0; ok && d < s.size(); ++d)
            if (d != axis && s[d] != first[d]) ok = false;
        if (!ok) throw DimensionError(op_shapes("concat", first, s));
        out_shape[axis] += s[axis];
    }

    const std::size_t outer = product(first, 0, axis);
    const std::size_t inner = product(first, axis + 1, first.size());
    const std::size_t out_row = out_shape[axis] * inner;
    std::vector<double> out(outer * out_row);
    std::vector<std::size_t> offsets;
    std::size_t offset = 0;
    for (const auto& t : tensors) {
        const std::size_t chunk = t.extent(axis) * inner;
        offsets.push_back(offset);
        const auto src = t.data();
        for (std::size_t o = 0; o < outer; ++o)
            std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(o * chunk), chunk,
                        out.begin() + static_cast<std::ptrdiff_t>(o * out_row + offset));
        offset += chunk;
    }

    Tensor result(std::move(out_shape), std::move(out));
    bool any = false;
    for (const auto& t : tensors) any = any || t.requires_grad();
    if (active_tape() == nullptr || !any) return result;

    std::vector<ImplPtr> parts;
    for (const auto& t : tensors) parts.push_back(t.handle());
    return finish(std::move(result), [parts, offsets, outer, inner, out_row, axis](TensorImpl& self) {
        for (std::size_t p = 0; p < parts.size(); ++p) {
            auto g = grad_of(parts[p]);
            if (g.empty()) continue;
            const std::size_t chunk = parts[p]->shape[axis] * inner;
            for (std::size_t o = 0; o < outer; ++o)
                for (std::size_t k = 0; k < chunk; ++k) g[o * chunk + k] += self.grad[o * out_row + offsets[p] + k];
        }
    });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
    const Shape& s = x.shape();
    if (axis >= s.size() || begin >= end || end > s[axis])
        throw DimensionError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                             ") invalid on axis " + std::to_string(axis) + " of " + shape_str(s));
    const std::size_t outer = product(s, 0, axis);
    const std::size_t inner = product(s, axis + 1, s.size());
    const std::size_t in_row = s[axis] * inner;
    const std::size_t chunk = (end - begin) * inner;
    Shape out_shape = s;
    out_shape[axis] = end - begin;
    std::vector<double> out(outer * chunk);
    const auto src = x.data();
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t k = 0; k < chunk; ++k) out[o * chunk + k] = src[o * in_row + begin * inner + k];

    Tensor result(std::move(out_shape), std::move(out));
    if (!should_record({&x})) return result;
    ImplPtr xi = x.handle();
    return finish(std::move(result), [xi, outer, chunk, in_row, begin, inner](TensorImpl& self) {
        auto g = grad_of(xi);
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t k = 0; k < chunk; ++k) g[o * in_row + begin * inner + k] += self.grad[o * chunk + k];
    });
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (numel(shape) != x.size())
        throw DimensionError(op_shapes("reshape", x.shape(), shape));
    Tensor result(std::move(shape), x.values());
    if (!should_record({&x})) return result;
    ImplPtr xi = x.handle();
    return finish(std::move(result), [xi](TensorImpl& self) {
        auto g = grad_of(xi);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& order) {
    const Shape& s = x.shape();
    const std::size_t r = s.size();
    if (order.size() != r) throw DimensionError("permute order rank mismatch for " + shape_str(s));
    std::vector<bool> seen(r, false);
    for (auto o : order) {
        if (o >= r || seen[o]) throw DimensionError("permute order is not a permutation");
        seen[o] = true;
    }

    std::vector<std::size_t> in_strides(r, 1);
    for (std::size_t d = r - 1; d-- > 0;) in_strides[d] = in_strides[d + 1] * s[d + 1];
    Shape out_shape(r);
    std::vector<std::size_t> strides(r);  // input stride of each output axis
    for (std::size_t d = 0; d < r; ++d) {
        out_shape[d] = s[order[d]];
        strides[d] = in_strides[order[d]];
    }

    // Source offset for every destination element.
    const std::size_t n = x.size();
    std::vector<std::size_t> src_index(n);
    std::vector<std::size_t> idx(r, 0);
    std::size_t src = 0;
    for (std::size_t i = 0; i < n; ++i) {
        src_index[i] = src;
        for (std::size_t d = r; d-- > 0;) {
            ++idx[d];
            src += strides[d];
            if (idx[d] < out_shape[d]) break;
            src -= strides[d] * idx[d];
            idx[d] = 0;
        }
    }

    std::vector<double> out(n);
    const auto in = x.data();
    for (std::size_t i = 0; i < n; ++i) out[i] = in[src_index[i]];

    Tensor result(std::move(out_shape), std::move(out));
    if (!should_record({&x})) return result;
    ImplPtr xi = x.handle();
    return finish(std::move(result), [xi, src_index = std::move(src_index)](TensorImpl& self) {
        auto g = grad_of(xi);
        for (std::size_t i = 0; i < src_index.size(); ++i) g[src_index[i]] += self.grad[i];
    });
}

Tensor repeat(const Tensor& x, std::size_t count) {
    if (count == 0) throw DimensionError("repeat count must be positive");
    Shape out_shape;
    out_shape.push_back(count);
    out_shape.insert(out_shape.end(), x.shape().begin(), x.shape().end());
    std::vector<double> out;
    out.reserve(count * x.size());
    for (std::size_t c = 0; c < count; ++c) out.insert(out.end(), x.values().begin(), x.values().end());

    Tensor result(std::move(out_shape), std::move(out));
    if (!should_record({&x})) return result;
    ImplPtr xi = x.handle();
    return finish(std::move(result), [xi, count](TensorImpl& self) {
        auto g = grad_of(xi);
        const std::size_t n = g.size();
        for (std::size_t c = 0; c < count; ++c)
            for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[c * n + i];
    });
}

// ---------------------------------------------------------------------------
// masked softmax

Tensor masked_softmax(const Tensor& logits, const Mask& mask) {
    if (mask.shape != logits.shape() || mask.keep.size() != logits.size())
        throw DimensionError(op_shapes("masked_softmax", logits.shape(), mask.shape));
    const std::size_t cols = logits.shape().back();
    const std::size_t rows = logits.size() / cols;
    const auto in = logits.data();
    std::vector<double> out(logits.size(), 0.0);

    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t base = r * cols;
        double row_max = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (std::size_t j = 0; j < cols; ++j) {
            if (!mask.keep[base + j]) continue;
            any = true;
            row_max = std::max(row_max, in[base + j]);
        }
        if (!any) throw InvalidNeighborhoodError("masked_softmax: row " + std::to_string(r) + " has no unmasked entry");
        double total = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            if (!mask.keep[base + j]) continue;
            out[base + j] = std::exp(in[base + j] - row_max);
            total += out[base + j];
        }
        for (std::size_t j = 0; j < cols; ++j) out[base + j] /= total;
    }

    Tensor result(logits.shape(), std::move(out));
    if (!should_record({&logits})) return result;
    ImplPtr li = logits.handle();
    return finish(std::move(result), [li, rows, cols](TensorImpl& self) {
        auto g = grad_of(li);
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t base = r * cols;
            double dot = 0.0;
            for (std::size_t j = 0; j < cols; ++j) dot += self.data[base + j] * self.grad[base + j];
            // masked entries have y == 0, so they receive nothing
            for (std::size_t j = 0; j < cols; ++j)
                g[base + j] += self.data[base + j] * (self.grad[base + j] - dot);
        }
    });
}

// ---------------------------------------------------------------------------
// causal convolution

Tensor conv1d_causal(const Tensor& x, const Tensor& W, const Tensor& b, std::size_t dilation) {
    if (x.rank() != 2 && x.rank() != 3)
        throw DimensionError("conv1d_causal expects x of rank 2 or 3, got " + shape_str(x.shape()));
    if (W.rank() != 3) throw DimensionError("conv1d_causal expects W of rank 3, got " + shape_str(W.shape()));
    if (dilation == 0) throw DimensionError("conv1d_causal dilation must be positive");
    const bool batched = x.rank() == 3;
    const kernels::ConvDims d{batched ? x.extent(0) : 1,
                              x.extent(batched ? 1 : 0),
                              W.extent(0),
                              x.extent(batched ? 2 : 1),
                              W.extent(2),
                              dilation};
    if (W.extent(1) != d.c_in) throw DimensionError(op_shapes("conv1d_causal", x.shape(), W.shape()));
    if (b.rank() != 1 || b.extent(0) != d.c_out)
        throw DimensionError(op_shapes("conv1d_causal bias", W.shape(), b.shape()));

    Shape out_shape = batched ? Shape{d.batch, d.c_out, d.length} : Shape{d.c_out, d.length};
    std::vector<double> out(d.batch * d.c_out * d.length);
    kernels::conv1d_forward(x.data(), W.data(), b.data(), out, d);

    Tensor result(std::move(out_shape), std::move(out));
    if (!should_record({&x, &W, &b})) return result;
    ImplPtr xi = x.handle(), wi = W.handle(), bi = b.handle();
    return finish(std::move(result), [xi, wi, bi, d](TensorImpl& self) {
        if (auto gx = grad_of(xi); !gx.empty()) kernels::conv1d_backward_input(self.grad, wi->data, gx, d);
        if (auto gw = grad_of(wi); !gw.empty()) kernels::conv1d_backward_weight(xi->data, self.grad, gw, d);
        if (auto gb = grad_of(bi); !gb.empty()) {
            for (std::size_t bb = 0; bb < d.batch; ++bb)
                for (std::size_t c = 0; c < d.c_out; ++c)
                    for (std::size_t t = 0; t < d.length; ++t)
                        gb[c] += self.grad[(bb * d.c_out + c) * d.length + t];
        }
    });
}

// ---------------------------------------------------------------------------
// reductions

Tensor reduce(ReduceKind kind, const Tensor& x, std::optional<std::size_t> axis) {
    const Shape& s = x.shape();
    std::size_t outer = 1, extent = x.size(), inner = 1;
    Shape out_shape{1};
    if (axis) {
        if (*axis >= s.size()) throw DimensionError("reduce axis out of range for " + shape_str(s));
        outer = product(s, 0, *axis);
        extent = s[*axis];
        inner = product(s, *axis + 1, s.size());
        out_shape = s;
        out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(*axis));
        if (out_shape.empty()) out_shape = {1};
    }
    if (extent == 0) throw DimensionError("reduce over an empty axis");

    const auto in = x.data();
    std::vector<double> out(outer * inner);
    std::vector<std::size_t> arg(kind == ReduceKind::min ? out.size() : 0);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
            const std::size_t base = o * extent * inner + i;
            double acc = in[base];
            std::size_t best = 0;
            for (std::size_t e = 1; e < extent; ++e) {
                const double v = in[base + e * inner];
                if (kind == ReduceKind::min) {
                    if (v < acc) {
                        acc = v;
                        best = e;
                    }
                } else {
                    acc += v;
                }
            }
            if (kind == ReduceKind::mean) acc /= static_cast<double>(extent);
            out[o * inner + i] = acc;
            if (kind == ReduceKind::min) arg[o * inner + i] = best;
        }
    }

    Tensor result(std::move(out_shape), std::move(out));
    if (!should_record({&x})) return result;
    ImplPtr xi = x.handle();
    return finish(std::move(result), [xi, kind, outer, extent, inner, arg = std::move(arg)](TensorImpl& self) {
        auto g = grad_of(xi);
        const double norm = kind == ReduceKind::mean ? 1.0 / static_cast<double>(extent) : 1.0;
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t i = 0; i < inner; ++i) {
                const double go = self.grad[o * inner + i];
                const std::size_t base = o * extent * inner + i;
                if (kind == ReduceKind::min) {
                    g[base + arg[o * inner + i] * inner] += go;
                } else {
                    for (std::size_t e = 0; e < extent; ++e) g[base + e * inner] += go * norm;
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------
// attention helpers

Tensor outer_add(const Tensor& a, const Tensor& b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa.size() != sb.size() || !std::equal(sa.begin(), sa.end() - 1, sb.begin()))
        throw DimensionError(op_shapes("outer_add", sa, sb));
    const std::size_t n = sa.back();
    const std::size_t m = sb.back();
    const std::size_t batch = a.size() / n;
    Shape out_shape = sa;
    out_shape.push_back(m);
    std::vector<double> out(batch * n * m);
    const auto av = a.data();
    const auto bv = b.data();
    for (std::size_t bb = 0; bb < batch; ++bb)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) out[(bb * n + i) * m + j] = av[bb * n + i] + bv[bb * m + j];

    Tensor result(std::move(out_shape), std::move(out));
    if (!should_record({&a, &b})) return result;
    ImplPtr ai = a.handle(), bi = b.handle();
    return finish(std::move(result), [ai, bi, batch, n, m](TensorImpl& self) {
        auto ga = grad_of(ai);
        auto gb = grad_of(bi);
        for (std::size_t bb = 0; bb < batch; ++bb)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) {
                    const double g = self.grad[(bb * n + i) * m + j];
                    if (!ga.empty()) ga[bb * n + i] += g;
                    if (!gb.empty()) gb[bb * m + j] += g;
                }
    });
}

Tensor bmm(const Tensor& a, const Tensor& b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa.size() < 2 || sa.size() != sb.size() || !std::equal(sa.begin(), sa.end() - 2, sb.begin()) ||
        sa[sa.size() - 1] != sb[sb.size() - 2])
        throw DimensionError(op_shapes("bmm", sa, sb));
    const kernels::BmmDims d{product(sa, 0, sa.size() - 2), sa[sa.size() - 2], sa.back(), sb.back()};
    Shape out_shape = sa;
    out_shape.back() = d.f;
    std::vector<double> out(d.batch * d.n * d.f);
    kernels::bmm_forward(a.data(), b.data(), out, d);

    Tensor result(std::move(out_shape), std::move(out));
    if (!should_record({&a, &b})) return result;
    ImplPtr ai = a.handle(), bi = b.handle();
    return finish(std::move(result), [ai, bi, d](TensorImpl& self) {
        auto ga = grad_of(ai);
        auto gb = grad_of(bi);
        for (std::size_t bb = 0; bb < d.batch; ++bb) {
            for (std::size_t i = 0; i < d.n; ++i) {
                const double* gy = self.grad.data() + (bb * d.n + i) * d.f;
                for (std::size_t k = 0; k < d.k; ++k) {
                    const double* crow = bi->data.data() + (bb * d.k + k) * d.f;
                    if (!ga.empty()) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < d.f; ++j) s += gy[j] * crow[j];
                        ga[(bb * d.n + i) * d.k + k] += s;
                    }
                    if (!gb.empty()) {
                        const double av = ai->data[(bb * d.n + i) * d.k + k];
                        double* gc = gb.data() + (bb * d.k + k) * d.f;
                        for (std::size_t j = 0; j < d.f; ++j) gc[j] += av * gy[j];
                    }
                }
            }
        }
    });
}

Tensor norm_last(const Tensor& x) {
    const std::size_t dim = x.shape().back();
    const std::size_t rows = x.size() / dim;
    Shape out_shape(x.shape().begin(), x.shape().end() - 1);
    if (out_shape.empty()) out_shape = {1};
    std::vector<double> out(rows);
    const auto in = x.data();
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t k = 0; k < dim; ++k) s += in[r * dim + k] * in[r * dim + k];
        out[r] = std::sqrt(s);
    }
    Tensor result(std::move(out_shape), std::move(out));
    if (!should_record({&x})) return result;
    ImplPtr xi = x.handle();
    return finish(std::move(result), [xi, rows, dim](TensorImpl& self) {
        auto g = grad_of(xi);
        for (std::size_t r = 0; r < rows; ++r) {
            const double n = self.data[r];
            if (n == 0.0) continue;
            const double f = self.grad[r] / n;
            for (std::size_t k = 0; k < dim; ++k) g[r * dim + k] += f * xi->data[r * dim + k];
        }
    });
}

}  // namespace gtcn
