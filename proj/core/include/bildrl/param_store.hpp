#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bildrl/tensor.hpp"

namespace bildrl {

// AMSGrad hyperparameters. No bias correction: the update is
//   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,  vhat <- max(vhat, v),
//   theta <- theta - alpha * m / (sqrt(vhat) + eps).
struct OptConfig {
  double alpha = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

// One named parameter with its gradient accumulator and optimizer state.
// All five tensors always share one shape.
struct Slot {
  Tensor value;
  Tensor grad;
  Tensor m;
  Tensor v;
  Tensor vhat;

  explicit Slot(Tensor init)
      : value(std::move(init)),
        grad(value.rows, value.cols),
        m(value.rows, value.cols),
        v(value.rows, value.cols),
        vhat(value.rows, value.cols) {}
};

// Registry of named parameters. std::map keeps name order deterministic for
// checksums, checkpoints, and the full-store optimizer sweep; node addresses
// are stable so long-lived Slot/Tensor pointers into the store stay valid.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor init);

  bool has(const std::string& name) const { return slots_.count(name) != 0; }
  Slot& slot(const std::string& name);
  const Slot& slot(const std::string& name) const;
  Tensor& value(const std::string& name) { return slot(name).value; }
  Tensor& grad(const std::string& name) { return slot(name).grad; }

  void zero_grads();
  std::vector<std::string> names() const;
  std::size_t total_elements() const;
  bool values_finite() const;

  // FNV-1a over (name, shape, value bytes) in name order.
  std::uint64_t checksum() const;

  std::map<std::string, Slot>& slots() { return slots_; }
  const std::map<std::string, Slot>& slots() const { return slots_; }

 private:
  std::map<std::string, Slot> slots_;
};

// One AMSGrad update of `slot.value` from an explicit gradient tensor. Does
// not touch `slot.grad` and does not zero `grad`; callers own that. This is
// the primitive the async workers call with worker-local gradient buffers.
// Raises NumericError if the gradient is non-finite.
void amsgrad_apply(Slot& slot, const Tensor& grad, const OptConfig& cfg);

// Step every slot from its accumulated `.grad`, then zero the gradients.
void amsgrad_step(ParamStore& store, const OptConfig& cfg);

// Step only the given slots (same semantics, grads zeroed afterward).
void amsgrad_step(const std::vector<Slot*>& slots, const OptConfig& cfg);

}  // namespace bildrl
