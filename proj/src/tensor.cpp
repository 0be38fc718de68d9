#include "glia/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "glia/errors.hpp"

namespace glia {

struct Tensor::Impl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  Precision precision = Precision::f64;
  bool requires_grad = false;
};

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) {
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    os << (i ? "," : "") << shape[i];
  }
  os << ']';
  return os.str();
}

void quantize(std::span<double> values, Precision precision) {
  if (precision == Precision::f32) {
    for (auto& v : values) {
      v = static_cast<double>(static_cast<float>(v));
    }
  }
}

Tensor Tensor::zeros(Shape shape, Precision precision, bool requires_grad) {
  return full(std::move(shape), 0.0, precision, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, Precision precision, bool requires_grad) {
  const auto n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, value), precision, requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, Precision precision,
                    bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("tensor shape " + shape_str(shape) + " holds " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  auto impl = std::make_shared<Impl>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  impl->precision = precision;
  impl->requires_grad = requires_grad;
  quantize(impl->data, precision);
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, Precision precision, bool requires_grad) {
  return from({1}, {value}, precision, requires_grad);
}

const Shape& Tensor::shape() const { return impl_->shape; }
std::size_t Tensor::numel() const { return impl_->data.size(); }
Precision Tensor::precision() const { return impl_->precision; }
std::span<const double> Tensor::data() const { return impl_->data; }
std::span<double> Tensor::mutable_data() { return impl_->data; }

double Tensor::item() const {
  if (numel() != 1) {
    throw DimensionError("item() on tensor of shape " + shape_str(shape()));
  }
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }
void Tensor::set_requires_grad(bool value) { impl_->requires_grad = value; }
bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }
std::span<const double> Tensor::grad() const { return impl_->grad; }

std::span<double> Tensor::mutable_grad() const {
  if (impl_->grad.empty()) {
    impl_->grad.assign(impl_->data.size(), 0.0);
  }
  return impl_->grad;
}

void Tensor::zero_grad() { impl_->grad.clear(); }

Tensor Tensor::clone() const {
  return from(shape(), impl_->data, precision(), false);
}

Tensor Tensor::to(Precision p) const { return from(shape(), impl_->data, p, false); }

namespace {
thread_local GradTape* g_active_tape = nullptr;
}

GradTape::~GradTape() {
  if (g_active_tape == this) {
    g_active_tape = nullptr;
  }
}

GradTape::Recording::Recording(GradTape& tape) : previous_(g_active_tape) {
  if (tape.consumed_) {
    throw UsageError("cannot record on a tape that has already run backward");
  }
  g_active_tape = &tape;
}

GradTape::Recording::~Recording() { g_active_tape = previous_; }

GradTape* GradTape::active() { return g_active_tape; }

void GradTape::push(const Tensor& output, BackwardFn fn) {
  entries_.push_back({output, std::move(fn)});
}

void GradTape::backward(const Tensor& loss) {
  if (consumed_) {
    throw UsageError("backward already ran on this tape; record a new forward pass first");
  }
  if (!loss.defined() || loss.numel() != 1) {
    throw UsageError("backward needs a single-element loss");
  }
  if (!loss.requires_grad()) {
    throw UsageError("loss does not depend on any tensor that requires grad");
  }
  consumed_ = true;
  Tensor seed = loss;
  seed.mutable_grad()[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (!it->output.has_grad()) {
      continue;
    }
    it->fn(it->output.grad());
  }
}

Tensor make_result(Shape shape, std::vector<double> values,
                   std::initializer_list<const Tensor*> inputs) {
  Precision p = Precision::f64;
  bool rg = false;
  for (const Tensor* t : inputs) {
    if (t->precision() == Precision::f32) {
      p = Precision::f32;
    }
    rg = rg || t->requires_grad();
  }
  rg = rg && GradTape::active() != nullptr;
  auto impl = std::make_shared<Tensor::Impl>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  impl->precision = p;
  impl->requires_grad = rg;
  quantize(impl->data, p);
  return Tensor(std::move(impl));
}

void accumulate_grad(const Tensor& t, std::span<const double> values) {
  if (!t.requires_grad()) {
    return;
  }
  auto g = t.mutable_grad();
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] += values[i];
  }
}

}  // namespace glia
