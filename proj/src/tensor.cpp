#include "pdgan/tensor.hpp"

#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

namespace pdgan {

std::string Shape::str() const {
  std::ostringstream os;
  os << '[';
  for (int i = 0; i < rank; ++i) {
    if (i) os << 'x';
    os << dim[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, Array value, bool requires_grad) {
  if (shape.numel() != value.size())
    throw DimensionError("tensor value length " + std::to_string(value.size()) +
                         " does not match shape " + shape.str());
  node_ = std::make_shared<TensorNode>();
  node_->shape = shape;
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(const Shape& s, bool requires_grad) {
  return Tensor(s, Array::Zero(s.numel()), requires_grad);
}

Tensor Tensor::full(const Shape& s, double v, bool requires_grad) {
  return Tensor(s, Array::Constant(s.numel(), v), requires_grad);
}

Tensor Tensor::from(const Shape& s, std::initializer_list<double> vals) {
  Array a(static_cast<Index>(vals.size()));
  Index i = 0;
  for (double v : vals) a[i++] = v;
  return Tensor(s, std::move(a));
}

Tensor Tensor::randn(const Shape& s, std::mt19937_64& rng, double stddev, bool requires_grad) {
  std::normal_distribution<double> dist(0.0, stddev);
  Array a(s.numel());
  for (Index i = 0; i < a.size(); ++i) a[i] = dist(rng);
  return Tensor(s, std::move(a), requires_grad);
}

const Array& Tensor::grad() const {
  if (!node_->has_grad()) throw ContractError("tensor has no accumulated gradient");
  return node_->grad;
}

double Tensor::scalar() const {
  if (numel() != 1) throw ContractError("scalar() on tensor of shape " + shape().str());
  return node_->value[0];
}

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::Tape() : prev_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() { g_active_tape = prev_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::backward(const Tensor& loss) {
  if (!loss.valid() || loss.numel() != 1)
    throw ContractError("backward requires a single-element loss");
  loss.node()->grad_buffer()[0] += 1.0;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

namespace {

template <typename T>
void write_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw ArgumentError("truncated tensor record");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

void write_tensor(std::ostream& os, const Tensor& t) {
  os.write("PDGT", 4);
  const Shape& s = t.shape();
  write_le<std::uint8_t>(os, static_cast<std::uint8_t>(s.rank));
  for (int i = 0; i < s.rank; ++i) write_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.dim[i]));
  os.write(reinterpret_cast<const char*>(t.value().data()),
           static_cast<std::streamsize>(sizeof(double)) * t.numel());
}

Tensor read_tensor(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "PDGT", 4) != 0) throw ArgumentError("bad tensor magic");
  auto rank = read_le<std::uint8_t>(is);
  if (rank < 1 || rank > 4) throw ArgumentError("tensor rank out of range");
  Shape s;
  s.rank = rank;
  for (int i = 0; i < rank; ++i) s.dim[i] = read_le<std::uint32_t>(is);
  Array a(s.numel());
  is.read(reinterpret_cast<char*>(a.data()), static_cast<std::streamsize>(sizeof(double)) * a.size());
  if (!is) throw ArgumentError("truncated tensor payload");
  return Tensor(s, std::move(a));
}

}  // namespace pdgan
