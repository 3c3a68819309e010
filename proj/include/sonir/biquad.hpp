#pragma once

#include <complex>

namespace sonir {

/// Normalized biquad coefficients (a0 == 1).
struct BiquadCoefficients {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

/// Constant 0 dB peak-gain bandpass from the audio-EQ cookbook.
/// Requires 0 < center_hz < sample_rate / 2 and q > 0, else Error{OutOfRange}.
BiquadCoefficients bandpass_coefficients(double center_hz, double q, double sample_rate);

/// H(e^{jw}) at frequency_hz.
std::complex<double> frequency_response(const BiquadCoefficients& c, double frequency_hz,
                                        double sample_rate);

/// Transposed direct form II state.
struct BiquadState {
  double z1 = 0.0;
  double z2 = 0.0;

  double process(const BiquadCoefficients& c, double x) {
    const double y = c.b0 * x + z1;
    z1 = c.b1 * x - c.a1 * y + z2;
    z2 = c.b2 * x - c.a2 * y;
    return y;
  }
};

}  // namespace sonir
