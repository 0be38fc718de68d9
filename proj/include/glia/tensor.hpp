#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace glia {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Storage is always double; an f32 tensor has every value rounded through
// float whenever it is produced, so it behaves like a 32-bit buffer.
enum class Precision : std::uint8_t { f64, f32 };

// Shared handle to a row-major buffer. Copies alias the same storage, the
// way a parameter is shared between a model and its optimizer.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, Precision precision = Precision::f64,
                      bool requires_grad = false);
  static Tensor full(Shape shape, double value, Precision precision = Precision::f64,
                     bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     Precision precision = Precision::f64, bool requires_grad = false);
  static Tensor scalar(double value, Precision precision = Precision::f64,
                       bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const { return shape().at(axis); }
  std::size_t numel() const;
  Precision precision() const;

  std::span<const double> data() const;
  // Writable view for leaves (parameter init, optimizer updates). Mutating a
  // tensor that has been recorded on a live tape invalidates that tape.
  std::span<double> mutable_data();
  double item() const;
  double operator[](std::size_t i) const { return data()[i]; }

  bool requires_grad() const;
  void set_requires_grad(bool value);

  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad() const;  // allocates a zero buffer on first use
  void zero_grad();

  // Fresh storage, no grad, same precision.
  Tensor clone() const;
  // Values converted into a new leaf of the given precision.
  Tensor to(Precision precision) const;

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl;
  explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<Impl> impl_;

  friend class GradTape;
  friend Tensor make_result(Shape shape, std::vector<double> values,
                            std::initializer_list<const Tensor*> inputs);
};

// Rounds through float when the precision asks for it.
void quantize(std::span<double> values, Precision precision);

// Reverse-mode record. Operations append to the tape that is active on the
// current thread while any of their inputs requires a gradient.
class GradTape {
 public:
  using BackwardFn = std::function<void(std::span<const double> grad_out)>;

  GradTape() = default;
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;
  ~GradTape();

  // RAII activation; restores the previously active tape on destruction.
  class Recording {
   public:
    explicit Recording(GradTape& tape);
    ~Recording();
    Recording(const Recording&) = delete;
    Recording& operator=(const Recording&) = delete;

   private:
    GradTape* previous_;
  };

  Recording record() { return Recording(*this); }

  static GradTape* active();

  void push(const Tensor& output, BackwardFn fn);

  // Seeds d(loss)/d(loss) = 1 and replays the record in reverse. The loss must
  // hold one element. A tape can be replayed once.
  void backward(const Tensor& loss);

  std::size_t size() const { return entries_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct Entry {
    Tensor output;
    BackwardFn fn;
  };
  std::vector<Entry> entries_;
  bool consumed_ = false;
};

// Builds an op result from freshly computed values. The result takes the
// narrowest precision among the inputs and requires grad when some input
// does and a tape is recording.
Tensor make_result(Shape shape, std::vector<double> values,
                   std::initializer_list<const Tensor*> inputs);

// Adds `values` into t's gradient buffer when t takes part in backward.
void accumulate_grad(const Tensor& t, std::span<const double> values);

}  // namespace glia
