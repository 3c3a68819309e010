#include "sonir/biquad.hpp"

#include <cmath>
#include <numbers>

#include "sonir/error.hpp"

namespace sonir {

BiquadCoefficients bandpass_coefficients(double center_hz, double q, double sample_rate) {
  if (!(center_hz > 0.0 && center_hz < sample_rate / 2.0)) {
    throw Error(ErrorCode::OutOfRange, "bandpass center frequency must lie in (0, Nyquist)");
  }
  if (!(q > 0.0) || !std::isfinite(q)) {
    throw Error(ErrorCode::OutOfRange, "bandpass Q must be positive");
  }
  const double w0 = 2.0 * std::numbers::pi * center_hz / sample_rate;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  BiquadCoefficients c;
  c.b0 = alpha / a0;
  c.b1 = 0.0;
  c.b2 = -alpha / a0;
  c.a1 = -2.0 * std::cos(w0) / a0;
  c.a2 = (1.0 - alpha) / a0;
  return c;
}

std::complex<double> frequency_response(const BiquadCoefficients& c, double frequency_hz,
                                        double sample_rate) {
  const double w = 2.0 * std::numbers::pi * frequency_hz / sample_rate;
  const std::complex<double> z1 = std::polar(1.0, -w);
  const std::complex<double> z2 = z1 * z1;
  return (c.b0 + c.b1 * z1 + c.b2 * z2) / (1.0 + c.a1 * z1 + c.a2 * z2);
}

}  // namespace sonir
