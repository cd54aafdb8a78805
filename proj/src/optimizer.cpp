#include "ym/optimizer.hpp"

#include <cmath>

namespace ym {

std::optional<std::size_t> adam_step(AdamState& st, span<double> params, span<const double> grad) {
  YM_CHECK(st.m.size() == params.size() && grad.size() == params.size(),
           "adam_step: layout mismatch");
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!std::isfinite(grad[i])) return i;

  st.t += 1;
  const double b1 = st.cfg.beta1, b2 = st.cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    st.m[i] = b1 * st.m[i] + (1.0 - b1) * g;
    st.v[i] = b2 * st.v[i] + (1.0 - b2) * g * g;
    const double mhat = st.m[i] / c1;
    const double vhat = st.v[i] / c2;
    params[i] -= st.lr * mhat / (std::sqrt(vhat) + st.cfg.eps);
  }
  return std::nullopt;
}

bool PlateauScheduler::step(double epoch_loss, double& lr) {
  YM_CHECK(std::isfinite(epoch_loss), "scheduler: loss must be finite");
  if (epoch_loss < best * (1.0 - cfg.rel_improve)) {
    best = epoch_loss;
    bad_epochs = 0;
    return false;
  }
  ++bad_epochs;
  if (bad_epochs >= cfg.patience) {
    bad_epochs = 0;
    const double next = std::max(cfg.min_lr, lr * cfg.factor);
    if (next < lr) {
      lr = next;
      return true;
    }
  }
  return false;
}

}  // namespace ym
