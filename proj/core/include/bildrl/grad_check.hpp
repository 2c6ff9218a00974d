#pragma once

#include <functional>
#include <string>

#include "bildrl/param_store.hpp"

namespace bildrl {

// Loss closure for gradient checking. Must be a deterministic pure function
// of the store's parameter values. When `with_grad` is true it additionally
// accumulates analytic gradients into the store's `.grad` tensors (which
// grad_check zeroes beforehand); when false it must leave gradients untouched.
using LossFn = std::function<double(ParamStore&, bool with_grad)>;

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_slot;
  int worst_index = -1;  // flat element index within worst_slot
};

// Central-difference gradient check over every element of every slot:
//   numeric = (f(th + h) - f(th - h)) / (2h)
//   rel_err = |analytic - numeric| / max(1e-8, |analytic| + |numeric|)
// Returns the max relative error over all parameters.
GradCheckReport grad_check(ParamStore& store, const LossFn& f, double h = 1e-5);

}  // namespace bildrl
