#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdgan {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape mismatch between tensors (wrong channel count, resolution, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument value (bad stride, factor, count, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// API contract violation (backward on a non-scalar, layer-count mismatch).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value where a finite one is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

using Array = Eigen::ArrayXd;
using Index = Eigen::Index;

/// Dense extents, up to 4 axes in batch/channel/height/width order.
struct Shape {
  int rank = 0;
  std::array<Index, 4> dim{1, 1, 1, 1};

  static Shape scalar() { return Shape{1, {1, 1, 1, 1}}; }
  static Shape vec(Index n) { return Shape{1, {n, 1, 1, 1}}; }
  static Shape mat(Index r, Index c) { return Shape{2, {r, c, 1, 1}}; }
  static Shape nchw(Index b, Index c, Index h, Index w) { return Shape{4, {b, c, h, w}}; }

  Index numel() const { return dim[0] * dim[1] * dim[2] * dim[3]; }
  Index b() const { return dim[0]; }
  Index channels() const { return dim[1]; }
  Index height() const { return dim[2]; }
  Index width() const { return dim[3]; }

  bool operator==(const Shape& o) const { return rank == o.rank && dim == o.dim; }
  bool operator!=(const Shape& o) const { return !(*this == o); }
  std::string str() const;
};

struct TensorNode {
  Shape shape;
  Array value;
  Array grad;  // empty until a gradient is accumulated
  bool requires_grad = false;

  bool has_grad() const { return grad.size() != 0; }
  Array& grad_buffer() {
    if (grad.size() == 0) grad = Array::Zero(value.size());
    return grad;
  }
};

/// Value-semantic handle to a node in the forward graph. Copies share storage.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, Array value, bool requires_grad = false);

  static Tensor zeros(const Shape& s, bool requires_grad = false);
  static Tensor full(const Shape& s, double v, bool requires_grad = false);
  static Tensor from(const Shape& s, std::initializer_list<double> vals);
  static Tensor randn(const Shape& s, std::mt19937_64& rng, double stddev = 1.0,
                      bool requires_grad = false);

  bool valid() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  Index numel() const { return node_->value.size(); }

  const Array& value() const { return node_->value; }
  Array& value() { return node_->value; }

  bool has_grad() const { return node_->has_grad(); }
  const Array& grad() const;
  void zero_grad() { node_->grad.resize(0); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool rg) { node_->requires_grad = rg; }

  /// Value of a single-element tensor.
  double scalar() const;
  /// Flat offset of (b, c, y, x) under the BCHW layout.
  Index offset(Index b, Index c, Index y, Index x) const {
    const auto& d = node_->shape.dim;
    return ((b * d[1] + c) * d[2] + y) * d[3] + x;
  }
  double at(Index b, Index c, Index y, Index x) const { return node_->value[offset(b, c, y, x)]; }

  bool all_finite() const { return node_->value.isFinite().all(); }

  std::shared_ptr<TensorNode> node() const { return node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

/// Dynamic per-pass recording of backward steps. Constructing a Tape makes it
/// the active tape for the current thread; destruction restores the previous
/// one. Ops record onto the active tape only when an input requires gradients,
/// so a forward pass outside any Tape scope is plain inference.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  /// Reverse-mode sweep from a scalar loss. Seeds d(loss)/d(loss) = 1 and
  /// replays recorded steps in reverse; gradients accumulate, so a second
  /// backward without zeroing adds on top.
  void backward(const Tensor& loss);

  void record(std::function<void()> step) { steps_.push_back(std::move(step)); }
  std::size_t size() const { return steps_.size(); }
  void clear() { steps_.clear(); }

 private:
  std::vector<std::function<void()>> steps_;
  Tape* prev_ = nullptr;
};

// Binary tensor record, little-endian throughout:
//   magic "PDGT" | u8 rank | u32 extent per axis (rank of them) | f64 payload
// Payload length is the product of the extents.
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

inline void accumulate(TensorNode& n, const Array& g) { n.grad_buffer() += g; }

}  // namespace pdgan
