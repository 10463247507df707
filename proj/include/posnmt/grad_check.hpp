#pragma once

#include <functional>
#include <string>

#include "posnmt/graph.hpp"

namespace posnmt {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  Index worst_index = -1;
};

// Compares analytic gradients already sitting in store[*].grad against
// central differences of loss_fn, which must rebuild the loss from the
// current store values deterministically. Relative error uses
// |a - n| / max(floor, |a| + |n|).
template <typename Scalar, typename LossFn>
GradCheckResult check_gradients(ParamStore<Scalar>& store, LossFn loss_fn,
                                Scalar h = Scalar(1e-5),
                                Scalar floor_ = Scalar(1e-8)) {
  GradCheckResult res;
  for (auto& p : store) {
    for (Index i = 0; i < p.value.size(); ++i) {
      const Scalar orig = p.value[i];
      p.value[i] = orig + h;
      const Scalar up = loss_fn();
      p.value[i] = orig - h;
      const Scalar dn = loss_fn();
      p.value[i] = orig;
      const double numeric = static_cast<double>(up - dn) / (2.0 * static_cast<double>(h));
      const double analytic = static_cast<double>(p.grad[i]);
      const double denom = std::max(static_cast<double>(floor_),
                                    std::abs(analytic) + std::abs(numeric));
      const double rel = std::abs(analytic - numeric) / denom;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_param = p.name;
        res.worst_index = i;
      }
    }
  }
  return res;
}

}  // namespace posnmt
