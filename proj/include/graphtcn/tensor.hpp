#pragma once

// Dense float64 tensors with tape-based reverse-mode differentiation.
//
// A Tensor is a cheap handle onto shared storage. Operations record a node on
// the thread's active Tape (see TapeScope) when any operand requires grad;
// without an active tape they run as plain forward kernels.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gtcn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
    bool is_leaf = true;
    // Propagates this node's grad into its operands.
    std::function<void(TensorImpl&)> backward_fn;

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
};

class Tensor {
   public:
    Tensor();
    Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

    static Tensor zeros(const Shape& shape, bool requires_grad = false);
    static Tensor full(const Shape& shape, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor vector(std::initializer_list<double> values, bool requires_grad = false);
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                         bool requires_grad = false);

    const Shape& shape() const { return impl_->shape; }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t extent(std::size_t axis) const { return impl_->shape.at(axis); }
    std::size_t size() const { return impl_->data.size(); }

    std::span<double> data() { return impl_->data; }
    std::span<const double> data() const { return impl_->data; }
    const std::vector<double>& values() const { return impl_->data; }

    bool has_grad() const { return impl_->grad.size() == impl_->data.size(); }
    // Zeros when no gradient has been accumulated yet.
    std::vector<double> grad() const;
    std::span<double> grad_mut();
    void zero_grad();

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool on) { impl_->requires_grad = on; }

    double item() const;
    double at(std::initializer_list<std::size_t> index) const;

    // A leaf with copied values and no history.
    Tensor detach() const;
    Tensor clone() const;

    TensorImpl& impl() { return *impl_; }
    const TensorImpl& impl() const { return *impl_; }
    const std::shared_ptr<TensorImpl>& handle() const { return impl_; }
    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

   private:
    std::shared_ptr<TensorImpl> impl_;
};

/// Ordered record of differentiable operations.
///
/// Nodes are appended in execution order, so operands always precede the
/// nodes that consume them. A Tape is single-writer.
class Tape {
   public:
    void record(std::shared_ptr<TensorImpl> node) { nodes_.push_back(std::move(node)); }
    std::size_t size() const { return nodes_.size(); }
    bool contains(const Tensor& t) const;
    void clear() { nodes_.clear(); }

    /// Accumulates d(root)/d(leaf) into every requires_grad leaf reachable from root.
    ///
    /// Intermediate gradients are reset on each call; leaf gradients accumulate
    /// across calls until explicitly zeroed.
    /// A root computed without recording (a constant) leaves every gradient untouched.
    void backward(const Tensor& root);

   private:
    std::vector<std::shared_ptr<TensorImpl>> nodes_;
};

/// Makes `tape` the active recording tape of the calling thread for the scope's lifetime.
class TapeScope {
   public:
    explicit TapeScope(Tape& tape);
    ~TapeScope();
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

   private:
    Tape* previous_;
};

Tape* active_tape();

void backward(const Tensor& root, Tape& tape);

// ---------------------------------------------------------------------------
// Operations

enum class UnaryKind { leaky_relu, tanh, sigmoid, exp, log };
enum class BinaryKind { add, sub, mul };
enum class ReduceKind { sum, mean, min };

inline constexpr double kLeakySlope = 0.2;

/// out[..., j] = sum_i x[..., i] * W[i, j] + b[j]
Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b);
/// Same as affine without a bias term.
Tensor linear(const Tensor& x, const Tensor& W);

Tensor unary(UnaryKind kind, const Tensor& x, double slope = kLeakySlope);
inline Tensor leaky_relu(const Tensor& x, double slope = kLeakySlope) {
    return unary(UnaryKind::leaky_relu, x, slope);
}
inline Tensor tanh(const Tensor& x) { return unary(UnaryKind::tanh, x); }
inline Tensor sigmoid(const Tensor& x) { return unary(UnaryKind::sigmoid, x); }
inline Tensor exp(const Tensor& x) { return unary(UnaryKind::exp, x); }
inline Tensor log(const Tensor& x) { return unary(UnaryKind::log, x); }

/// Elementwise; shapes must match unless one operand holds a single element.
Tensor binary(BinaryKind kind, const Tensor& a, const Tensor& b);
inline Tensor add(const Tensor& a, const Tensor& b) { return binary(BinaryKind::add, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return binary(BinaryKind::sub, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return binary(BinaryKind::mul, a, b); }

Tensor scale(const Tensor& x, double factor);

Tensor concat(const std::vector<Tensor>& tensors, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& order);
/// Stacks `count` copies of x along a new leading axis.
Tensor repeat(const Tensor& x, std::size_t count);

/// Boolean mask with the same shape as the logits it filters.
struct Mask {
    Shape shape;
    std::vector<std::uint8_t> keep;

    static Mask all(const Shape& shape) { return {shape, std::vector<std::uint8_t>(numel(shape), 1)}; }
};

/// Softmax over the last axis restricted to unmasked entries. Masked entries are exactly 0.
Tensor masked_softmax(const Tensor& logits, const Mask& mask);

/// Causal (left-padded) 1-D convolution.
///
/// x: [C_in, T] or [B, C_in, T]; W: [C_out, C_in, k]; b: [C_out].
/// out[c, t] = b[c] + sum_{c', tau} W[c, c', tau] * x[c', t - (k - 1 - tau) * dilation]
/// with out-of-range input treated as zero. Output length equals input length.
Tensor conv1d_causal(const Tensor& x, const Tensor& W, const Tensor& b, std::size_t dilation = 1);

/// axis = nullopt reduces over every element to a scalar of shape [1].
/// Min routes its gradient to the lowest-index minimum.
Tensor reduce(ReduceKind kind, const Tensor& x, std::optional<std::size_t> axis = std::nullopt);
inline Tensor sum(const Tensor& x, std::optional<std::size_t> axis = std::nullopt) {
    return reduce(ReduceKind::sum, x, axis);
}
inline Tensor mean(const Tensor& x, std::optional<std::size_t> axis = std::nullopt) {
    return reduce(ReduceKind::mean, x, axis);
}
inline Tensor min(const Tensor& x, std::optional<std::size_t> axis = std::nullopt) {
    return reduce(ReduceKind::min, x, axis);
}

/// a: [B, N], b: [B, M] -> out[b, i, j] = a[b, i] + b[b, j]
Tensor outer_add(const Tensor& a, const Tensor& b);
/// Batched matrix product: [B, N, K] x [B, K, F] -> [B, N, F]
Tensor bmm(const Tensor& a, const Tensor& b);
/// Euclidean norm over the last axis. The gradient at a zero vector is taken as zero.
Tensor norm_last(const Tensor& x);

}  // namespace gtcn
