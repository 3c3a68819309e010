#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sonir {

/// Planar float audio. Channels are always equal length.
class AudioBuffer {
public:
  AudioBuffer() = default;
  AudioBuffer(double sample_rate, std::size_t channels, std::size_t frames);

  double sample_rate() const noexcept { return sample_rate_; }
  std::size_t channels() const noexcept { return data_.size(); }
  std::size_t frames() const noexcept { return data_.empty() ? 0 : data_.front().size(); }
  double duration() const noexcept { return frames() / sample_rate_; }

  std::span<float> channel(std::size_t c) { return data_.at(c); }
  std::span<const float> channel(std::size_t c) const { return data_.at(c); }

  /// Sample read with mono-to-stereo duplication: channel indices past the
  /// last channel read the last channel.
  float sample(std::size_t c, std::size_t frame) const {
    return data_[c < data_.size() ? c : data_.size() - 1][frame];
  }

  bool operator==(const AudioBuffer&) const = default;

private:
  double sample_rate_ = 44100.0;
  std::vector<std::vector<float>> data_;
};

/// Linear-interpolation sample-rate conversion. Identity when rates match.
AudioBuffer resample_linear(const AudioBuffer& in, double target_rate);

}  // namespace sonir
