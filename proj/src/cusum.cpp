#include "adatrack/cusum.hpp"

#include <algorithm>
#include <cmath>

#include "adatrack/errors.hpp"

namespace adatrack {

void CusumParams::validate() const {
  if (!(nu >= 0) || std::isinf(nu)) throw InvalidInput("cusum: nu must be finite and >= 0");
  if (!(beta_low > 0)) throw InvalidInput("cusum: beta_low must be > 0");
  const bool bothDisabled = std::isinf(beta_low) && std::isinf(beta_high);
  if (!bothDisabled && !(beta_low < beta_high)) {
    throw InvalidInput("cusum: beta_low must be smaller than beta_high");
  }
  if (std::isnan(alpha)) throw InvalidInput("cusum: alpha must be a number");
}

const char* toString(ChangeSignal s) {
  switch (s) {
    case ChangeSignal::none:
      return "none";
    case ChangeSignal::gradual:
      return "gradual";
    case ChangeSignal::abrupt:
      return "abrupt";
  }
  return "none";
}

CusumStep cusumUpdate(const CusumState& state, const CusumParams& params, double y, int frame) {
  CusumStep step;
  CusumState next = state;
  const double prevMean = state.count == 0 ? y : state.theta_hat;
  next.g = std::max(state.g - (y - prevMean) - params.nu, 0.0);
  next.count = state.count + 1;
  next.theta_hat = state.theta_hat + (y - state.theta_hat) / static_cast<double>(next.count);
  step.statistic = next.g;

  if (state.refractory) {
    next.refractory = false;
  } else if (next.g > params.beta_high) {
    step.signal = ChangeSignal::abrupt;
  } else if (next.g > params.beta_low) {
    step.signal = ChangeSignal::gradual;
  }

  if (step.signal == ChangeSignal::abrupt) {
    next = CusumState::reset(frame);
    next.refractory = true;
  }
  step.state = next;
  return step;
}

}  // namespace adatrack
