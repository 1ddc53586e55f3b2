#include "rjepa/time_decay.hpp"

#include <cmath>
#include <string>

#include "rjepa/errors.hpp"

namespace rjepa {

void TimeDecayParams::validate() const {
  if (tau.empty() || tau.size() != p.size())
    throw ValidationError("TimeDecayParams: tau/p layer counts disagree");
  for (size_t l = 0; l < tau.size(); ++l) {
    if (!(std::fabs(tau[l]) < 1.0))
      throw ValidationError("TimeDecayParams: |tau| >= 1 at layer " + std::to_string(l + 1));
    if (l + 1 < p.size() && p[l + 1].cols() != p[l].rows())
      throw ShapeError("TimeDecayParams: layer " + std::to_string(l + 2) +
                       " input dim does not chain");
  }
}

LayeredVecs time_decay_zero_state(const TimeDecayParams& params) {
  LayeredVecs c(params.layers());
  for (int l = 0; l < params.layers(); ++l) c[l] = Vec(params.p[l].rows(), 0.0);
  return c;
}

LayeredVecs time_decay_step(const LayeredVecs& c_prev, const Vec& x,
                            const TimeDecayParams& params) {
  const int nl = params.layers();
  if (static_cast<int>(c_prev.size()) != nl)
    throw ShapeError("time_decay_step: layer count mismatch");
  if (static_cast<int>(x.size()) != params.in_dim())
    throw ShapeError("time_decay_step: input dim mismatch");
  LayeredVecs c(nl);
  const Vec* below = &x;
  for (int l = 0; l < nl; ++l) {
    c[l] = matvec(params.p[l], *below);
    vec_axpy(c[l], params.tau[l], c_prev[l]);
    below = &c[l];
  }
  return c;
}

}  // namespace rjepa
