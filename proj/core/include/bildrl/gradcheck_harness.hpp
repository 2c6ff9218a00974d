#pragma once

#include <memory>
#include <string>

#include "bildrl/encoders.hpp"
#include "bildrl/grad_check.hpp"

namespace bildrl {

// A self-contained random instance for gradient checking: a ParamStore plus a
// deterministic loss closure over it. The same instances back the gradcheck
// CLI command and the acceptance battery.
struct GradCheckInstance {
  std::shared_ptr<ParamStore> store;
  LossFn loss;

  GradCheckReport run(double h = 1e-5) const { return grad_check(*store, loss, h); }
};

// loss: "st" (dictionary loss through the configured encoder, both
// directions, with embedding/target gradients), "sg" (skip-gram with negative
// sampling), "align" (alignment regularizer), "mlp" (paraphrase classifier
// cross-entropy). For "st" the encoder config selects the encoder; the other
// losses only use cfg.dim. All sampled structure (tokens, negatives,
// features) is frozen at construction so the closure is pure.
GradCheckInstance make_gradcheck_instance(const std::string& loss, const EncoderConfig& cfg,
                                          std::uint64_t seed);

}  // namespace bildrl
