#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sonir/audio_buffer.hpp"

namespace sonir {

enum class SampleFormat { Pcm16, Float32 };

struct WavSpec {
  double sample_rate = 44100.0;
  std::uint16_t channels = 2;
  SampleFormat format = SampleFormat::Pcm16;
};

/// Canonical 44-byte-header RIFF/WAVE, little-endian, interleaved. PCM16
/// clips to [-1, 1] and scales by 32767. Channel counts must match.
std::vector<std::uint8_t> encode_wav(const AudioBuffer& buffer, const WavSpec& spec);

/// Reads PCM 8/16/24/32-bit and IEEE float 32/64 mono or stereo files,
/// skipping unknown chunks. Throws Error{Format}.
AudioBuffer decode_wav(const std::vector<std::uint8_t>& bytes);

AudioBuffer load_wav(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace sonir
