#include "sonir/audio_buffer.hpp"

#include <algorithm>
#include <cmath>

#include "sonir/error.hpp"

namespace sonir {

AudioBuffer::AudioBuffer(double sample_rate, std::size_t channels, std::size_t frames)
    : sample_rate_(sample_rate), data_(channels, std::vector<float>(frames, 0.0f)) {
  if (!(sample_rate > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
  }
  if (channels < 1 || channels > 2) {
    throw Error(ErrorCode::InvalidArgument, "audio buffers hold 1 or 2 channels");
  }
}

AudioBuffer resample_linear(const AudioBuffer& in, double target_rate) {
  if (in.sample_rate() == target_rate || in.frames() == 0) {
    if (in.frames() == 0) return AudioBuffer(target_rate, in.channels(), 0);
    return in;
  }
  const double ratio = in.sample_rate() / target_rate;
  // Duration is preserved; reads past the last source frame hold it.
  const auto out_frames =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(in.frames() / ratio)));
  AudioBuffer out(target_rate, in.channels(), out_frames);
  for (std::size_t c = 0; c < in.channels(); ++c) {
    auto src = in.channel(c);
    auto dst = out.channel(c);
    for (std::size_t k = 0; k < out_frames; ++k) {
      const double pos = k * ratio;
      const auto i = std::min(static_cast<std::size_t>(pos), src.size() - 1);
      const double frac = pos - static_cast<double>(i);
      const float a = src[i];
      const float b = i + 1 < src.size() ? src[i + 1] : a;
      dst[k] = static_cast<float>(a + frac * (b - a));
    }
  }
  return out;
}

}  // namespace sonir
