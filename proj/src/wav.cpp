#include "sonir/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sonir/error.hpp"

namespace sonir {

namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

}  // namespace

std::vector<std::uint8_t> encode_wav(const AudioBuffer& buffer, const WavSpec& spec) {
  if (buffer.channels() != spec.channels) {
    throw Error(ErrorCode::InvalidArgument, "buffer has " + std::to_string(buffer.channels()) +
                                                " channels, WAV spec wants " +
                                                std::to_string(spec.channels));
  }
  const bool pcm = spec.format == SampleFormat::Pcm16;
  const std::uint16_t bytes_per_sample = pcm ? 2 : 4;
  const auto rate = static_cast<std::uint32_t>(std::lround(spec.sample_rate));
  const auto frames = buffer.frames();
  const auto data_size = static_cast<std::uint32_t>(frames * spec.channels * bytes_per_sample);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, pcm ? 1 : 3);
  put_u16(out, spec.channels);
  put_u32(out, rate);
  put_u32(out, rate * spec.channels * bytes_per_sample);
  put_u16(out, static_cast<std::uint16_t>(spec.channels * bytes_per_sample));
  put_u16(out, static_cast<std::uint16_t>(bytes_per_sample * 8));
  put_tag(out, "data");
  put_u32(out, data_size);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t c = 0; c < spec.channels; ++c) {
      const float s = buffer.channel(c)[f];
      if (pcm) {
        const float clipped = std::isnan(s) ? 0.0f : std::clamp(s, -1.0f, 1.0f);
        const auto q = static_cast<std::int16_t>(std::lround(clipped * 32767.0f));
        put_u16(out, static_cast<std::uint16_t>(q));
      } else {
        put_u32(out, std::bit_cast<std::uint32_t>(s));
      }
    }
  }
  return out;
}

AudioBuffer decode_wav(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::Format, "not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::size_t size = get_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw Error(ErrorCode::Format, "truncated fmt chunk");
      format = get_u16(chunk + 8);
      channels = get_u16(chunk + 10);
      rate = get_u32(chunk + 12);
      bits = get_u16(chunk + 22);
      if (format == 0xFFFE && avail >= 26) format = get_u16(chunk + 32);  // extensible subformat
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = avail;
    }
    pos = body + size + (size & 1);
  }
  if (!data || channels == 0 || rate == 0) throw Error(ErrorCode::Format, "WAV missing fmt or data");
  if (channels > 2) throw Error(ErrorCode::Format, "only mono and stereo WAV files are supported");
  const bool is_float = format == 3;
  if (!(format == 1 || is_float)) {
    throw Error(ErrorCode::Format, "unsupported WAV encoding " + std::to_string(format));
  }
  if ((is_float && bits != 32 && bits != 64) ||
      (!is_float && bits != 8 && bits != 16 && bits != 24 && bits != 32)) {
    throw Error(ErrorCode::Format, "unsupported bit depth " + std::to_string(bits));
  }
  const std::size_t stride = bits / 8;
  const std::size_t frames = data_size / (stride * channels);
  AudioBuffer out(rate, channels, frames);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* p = data + (f * channels + c) * stride;
      float v = 0.0f;
      if (is_float && bits == 32) {
        v = std::bit_cast<float>(get_u32(p));
      } else if (is_float) {
        std::uint64_t raw = 0;
        std::memcpy(&raw, p, 8);
        v = static_cast<float>(std::bit_cast<double>(raw));
      } else if (bits == 8) {
        v = (static_cast<int>(p[0]) - 128) / 128.0f;
      } else if (bits == 16) {
        v = static_cast<float>(static_cast<std::int16_t>(get_u16(p)) / 32768.0);
      } else if (bits == 24) {
        std::int32_t s = p[0] | p[1] << 8 | p[2] << 16;
        if (s & 0x800000) s -= 0x1000000;
        v = static_cast<float>(s / 8388608.0);
      } else {
        v = static_cast<float>(static_cast<std::int32_t>(get_u32(p)) / 2147483648.0);
      }
      out.channel(c)[f] = v;
    }
  }
  return out;
}

AudioBuffer load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open WAV file '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "failed writing '" + path + "'");
}

}  // namespace sonir
