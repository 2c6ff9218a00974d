#include "bildrl/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "bildrl/error.hpp"

namespace bildrl {

GradCheckReport grad_check(ParamStore& store, const LossFn& f, double h) {
  if (!(h > 0.0)) throw ContractError("grad_check: step h must be > 0");

  store.zero_grads();
  const double base = f(store, true);
  if (!std::isfinite(base)) throw NumericError("grad_check: loss is non-finite at the base point");

  // Snapshot analytic gradients before the finite-difference sweep mutates
  // parameter values (f with with_grad=false must not touch grads, but copying
  // keeps the check independent of that).
  std::map<std::string, Tensor> analytic;
  for (const auto& name : store.names()) analytic.emplace(name, store.slot(name).grad);

  GradCheckReport rep;
  for (const auto& name : store.names()) {
    Slot& s = store.slot(name);
    const Tensor& a = analytic.at(name);
    for (std::size_t i = 0; i < s.value.size(); ++i) {
      const double saved = s.value.data[i];
      s.value.data[i] = saved + h;
      const double fp = f(store, false);
      s.value.data[i] = saved - h;
      const double fm = f(store, false);
      s.value.data[i] = saved;  // bitwise restore
      const double numeric = (fp - fm) / (2.0 * h);
      const double ai = a.data[i];
      if (!std::isfinite(numeric) || !std::isfinite(ai))
        throw NumericError("grad_check: non-finite derivative in slot '" + name + "'");
      const double err = std::fabs(ai - numeric) / std::max(1e-8, std::fabs(ai) + std::fabs(numeric));
      if (err > rep.max_rel_err) {
        rep.max_rel_err = err;
        rep.worst_slot = name;
        rep.worst_index = static_cast<int>(i);
      }
    }
  }
  return rep;
}

}  // namespace bildrl
