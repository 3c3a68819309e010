#pragma once

#include <span>

namespace sonir {

/// Naive (non-band-limited) impulse generator. A unit sample is emitted on
/// the first active frame with positive frequency and then on every wrap of
/// the phase accumulator, so N frames at constant f yield floor or ceil of
/// f * N / sample_rate impulses.
struct ImpulseTrainState {
  double phase = 0.0;
  bool primed = true;
};

void impulse_train_process(ImpulseTrainState& state, std::span<const double> frequency_hz,
                           double sample_rate, std::span<double> out);

}  // namespace sonir
