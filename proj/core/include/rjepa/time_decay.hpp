#pragma once

#include <vector>

#include "rjepa/matrix.hpp"

namespace rjepa {

// Stack of linear recurrent layers c_l(t) = tau_l * c_l(t-1) + P^(l) * c_{l-1}(t),
// with c_0(t) = x(t). |tau_l| < 1 keeps the chain stable.
struct TimeDecayParams {
  std::vector<double> tau;  // one per layer l = 1..N+1
  std::vector<Matrix> p;    // p[l-1] maps layer l-1 -> l

  int layers() const { return static_cast<int>(tau.size()); }
  int out_dim() const { return p.back().rows(); }
  int in_dim() const { return p.front().cols(); }
  void validate() const;  // |tau| < 1, dimension chaining
};

using LayeredVecs = std::vector<Vec>;

LayeredVecs time_decay_zero_state(const TimeDecayParams& params);

// Bottom-up update within one time step: layer l consumes the already-updated
// layer l-1 value.
LayeredVecs time_decay_step(const LayeredVecs& c_prev, const Vec& x,
                            const TimeDecayParams& params);

}  // namespace rjepa
