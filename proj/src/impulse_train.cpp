#include "sonir/impulse_train.hpp"

#include <cmath>

namespace sonir {

void impulse_train_process(ImpulseTrainState& state, std::span<const double> frequency_hz,
                           double sample_rate, std::span<double> out) {
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double f = frequency_hz[k];
    const double inc = f > 0.0 ? f / sample_rate : 0.0;
    out[k] = 0.0;
    if (state.primed) {
      if (inc > 0.0) {
        out[k] = 1.0;
        state.primed = false;
        state.phase = inc;
      }
      continue;
    }
    if (state.phase >= 1.0) {
      out[k] = 1.0;
      state.phase -= std::floor(state.phase);
    }
    state.phase += inc;
  }
}

}  // namespace sonir
