#include "bildrl/param_store.hpp"

#include <cmath>
#include <cstring>

#include "bildrl/error.hpp"

namespace bildrl {

void OptConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("optimizer: alpha must be finite and >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("optimizer: beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("optimizer: beta2 must be in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("optimizer: epsilon must be > 0");
}

Tensor& ParamStore::add(const std::string& name, Tensor init) {
  auto [it, inserted] = slots_.emplace(name, Slot(std::move(init)));
  if (!inserted) throw ContractError("param store: duplicate slot '" + name + "'");
  return it->second.value;
}

Slot& ParamStore::slot(const std::string& name) {
  auto it = slots_.find(name);
  if (it == slots_.end()) throw ContractError("param store: unknown slot '" + name + "'");
  return it->second;
}

const Slot& ParamStore::slot(const std::string& name) const {
  auto it = slots_.find(name);
  if (it == slots_.end()) throw ContractError("param store: unknown slot '" + name + "'");
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& [name, s] : slots_) s.grad.fill(0.0);
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(slots_.size());
  for (const auto& [name, s] : slots_) out.push_back(name);
  return out;
}

std::size_t ParamStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& [name, s] : slots_) n += s.value.size();
  return n;
}

bool ParamStore::values_finite() const {
  for (const auto& [name, s] : slots_)
    if (!s.value.all_finite()) return false;
  return true;
}

std::uint64_t ParamStore::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;  // FNV offset basis
  auto feed = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& [name, s] : slots_) {
    feed(name.data(), name.size());
    const std::int32_t shape[2] = {s.value.rows, s.value.cols};
    feed(shape, sizeof(shape));
    feed(s.value.data.data(), s.value.data.size() * sizeof(double));
  }
  return h;
}

void amsgrad_apply(Slot& slot, const Tensor& grad, const OptConfig& cfg) {
  if (!slot.value.same_shape(grad))
    throw ContractError("amsgrad: gradient shape " + shape_str(grad) + " does not match slot " +
                        shape_str(slot.value));
  const std::size_t n = slot.value.size();
  double* th = slot.value.data.data();
  double* m = slot.m.data.data();
  double* v = slot.v.data.data();
  double* vh = slot.vhat.data.data();
  const double* g = grad.data.data();
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double gi = g[i];
    if (!std::isfinite(gi)) throw NumericError("amsgrad: non-finite gradient component");
    m[i] = b1 * m[i] + (1.0 - b1) * gi;
    v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
    if (v[i] > vh[i]) vh[i] = v[i];
    th[i] -= cfg.alpha * m[i] / (std::sqrt(vh[i]) + cfg.epsilon);
  }
}

void amsgrad_step(ParamStore& store, const OptConfig& cfg) {
  for (auto& [name, s] : store.slots()) {
    try {
      amsgrad_apply(s, s.grad, cfg);
    } catch (const NumericError&) {
      throw NumericError("amsgrad: non-finite gradient in slot '" + name + "'");
    }
    s.grad.fill(0.0);
  }
}

void amsgrad_step(const std::vector<Slot*>& slots, const OptConfig& cfg) {
  for (Slot* s : slots) {
    amsgrad_apply(*s, s->grad, cfg);
    s->grad.fill(0.0);
  }
}

}  // namespace bildrl
