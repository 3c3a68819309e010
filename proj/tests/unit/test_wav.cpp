#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <random>

#include "sonir/error.hpp"
#include "sonir/wav.hpp"

using namespace sonir;

namespace {

std::uint32_t u32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return b[at] | (b[at + 1] << 8) | (b[at + 2] << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}
std::uint16_t u16(const std::vector<std::uint8_t>& b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}
std::int16_t s16(const std::vector<std::uint8_t>& b, std::size_t at) {
  return static_cast<std::int16_t>(u16(b, at));
}
std::string tag(const std::vector<std::uint8_t>& b, std::size_t at) {
  return std::string(b.begin() + static_cast<long>(at), b.begin() + static_cast<long>(at) + 4);
}

}  // namespace

TEST_CASE("one second of stereo PCM16 silence") {
  const AudioBuffer silence(44100.0, 2, 44100);
  const auto bytes = encode_wav(silence, {});
  CHECK(bytes.size() == 44 + 176400);
  CHECK(tag(bytes, 0) == "RIFF");
  CHECK(u32(bytes, 4) == bytes.size() - 8);
  CHECK(tag(bytes, 8) == "WAVE");
  CHECK(tag(bytes, 12) == "fmt ");
  CHECK(u32(bytes, 16) == 16);
  CHECK(u16(bytes, 20) == 1);
  CHECK(u16(bytes, 22) == 2);
  CHECK(u32(bytes, 24) == 44100);
  CHECK(u32(bytes, 28) == 44100 * 4);
  CHECK(u16(bytes, 32) == 4);
  CHECK(u16(bytes, 34) == 16);
  CHECK(tag(bytes, 36) == "data");
  CHECK(u32(bytes, 40) == 176400);
}

TEST_CASE("PCM16 full scale, rounding and clipping") {
  AudioBuffer b(44100.0, 2, 6);
  const float left[] = {1.0f, -1.0f, 0.5f, 2.0f, -7.0f, 0.0f};
  for (std::size_t k = 0; k < 6; ++k) {
    b.channel(0)[k] = left[k];
    b.channel(1)[k] = -left[k];
  }
  const auto bytes = encode_wav(b, {});
  CHECK(s16(bytes, 44) == 32767);
  CHECK(s16(bytes, 46) == -32767);
  CHECK(s16(bytes, 48) == -32767);
  CHECK(s16(bytes, 52) == 16384);
  CHECK(s16(bytes, 56) == 32767);
  CHECK(s16(bytes, 60) == -32767);
  CHECK(s16(bytes, 62) == 32767);
}

TEST_CASE("PCM16 never wraps for random out-of-range input") {
  std::mt19937 rng(6);
  std::uniform_real_distribution<float> u(-50.0f, 50.0f);
  AudioBuffer b(44100.0, 2, 2000);
  for (std::size_t c = 0; c < 2; ++c)
    for (auto& s : b.channel(c)) s = u(rng);
  const auto bytes = encode_wav(b, {});
  for (std::size_t k = 0; k < 4000; ++k) {
    const float x = b.channel(k % 2)[k / 2];
    const auto v = s16(bytes, 44 + 2 * k);
    if (x >= 1.0f) REQUIRE(v == 32767);
    if (x <= -1.0f) REQUIRE(v == -32767);
    if (x > 0.0f) REQUIRE(v >= 0);
    if (x < 0.0f) REQUIRE(v <= 0);
  }
}

TEST_CASE("Float32 round trip is bit exact") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<float> u(-3.0f, 3.0f);
  AudioBuffer b(48000.0, 2, 1234);
  for (std::size_t c = 0; c < 2; ++c)
    for (auto& s : b.channel(c)) s = u(rng);
  const auto bytes = encode_wav(b, {48000.0, 2, SampleFormat::Float32});
  CHECK(u16(bytes, 20) == 3);
  CHECK(u16(bytes, 34) == 32);
  const auto back = decode_wav(bytes);
  CHECK(back.sample_rate() == 48000.0);
  CHECK(back == b);
}

TEST_CASE("PCM16 decode is within one quantization step") {
  AudioBuffer b(22050.0, 1, 100);
  for (std::size_t k = 0; k < 100; ++k) b.channel(0)[k] = static_cast<float>(k) / 100.0f - 0.5f;
  const auto back = decode_wav(encode_wav(b, {22050.0, 1, SampleFormat::Pcm16}));
  REQUIRE(back.channels() == 1);
  for (std::size_t k = 0; k < 100; ++k) CHECK(std::abs(back.channel(0)[k] - b.channel(0)[k]) <= 1.0 / 32767);
}

TEST_CASE("decoder handles other encodings and skips unknown chunks") {
  // 24-bit mono with a LIST chunk before data.
  std::vector<std::uint8_t> f;
  auto put = [&](std::uint32_t v, int n) {
    for (int k = 0; k < n; ++k) f.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  };
  auto str = [&](const char* s) { f.insert(f.end(), s, s + 4); };
  str("RIFF");
  put(0, 4);
  str("WAVE");
  str("fmt ");
  put(16, 4);
  put(1, 2);
  put(1, 2);
  put(8000, 4);
  put(24000, 4);
  put(3, 2);
  put(24, 2);
  str("LIST");
  put(3, 4);
  f.insert(f.end(), {'a', 'b', 'c', 0});  // odd chunk plus pad byte
  str("data");
  put(6, 4);
  put(0x400000, 3);  // +0.5
  put(0xC00000, 3);  // -0.5
  const auto b = decode_wav(f);
  CHECK(b.sample_rate() == 8000.0);
  REQUIRE(b.frames() == 2);
  CHECK(b.channel(0)[0] == 0.5f);
  CHECK(b.channel(0)[1] == -0.5f);
}

TEST_CASE("decoder rejects malformed input") {
  CHECK_THROWS_AS(decode_wav({}), Error);
  CHECK_THROWS_AS(decode_wav(std::vector<std::uint8_t>(44, 0)), Error);
  auto bytes = encode_wav(AudioBuffer(44100.0, 2, 4), {});
  bytes[20] = 2;  // ADPCM
  CHECK_THROWS_AS(decode_wav(bytes), Error);
  CHECK_THROWS_AS(load_wav("/nonexistent.wav"), Error);
  CHECK_THROWS_AS(encode_wav(AudioBuffer(44100.0, 1, 4), {}), Error);
}

TEST_CASE("fixture buffer loads") {
  const auto b = load_wav(std::string(SONIR_FIXTURES_DIR) + "/grain_source.wav");
  CHECK(b.channels() == 1);
  CHECK(b.sample_rate() == 44100.0);
  CHECK(b.frames() == 66150);
}

TEST_CASE("files are written to disk") {
  const auto path = std::filesystem::temp_directory_path() / "sonir_wav_test.wav";
  const auto bytes = encode_wav(AudioBuffer(44100.0, 2, 10), {});
  write_file(path.string(), bytes);
  CHECK(std::filesystem::file_size(path) == bytes.size());
  CHECK(load_wav(path.string()).frames() == 10);
  std::filesystem::remove(path);
}

TEST_CASE("linear resampling") {
  AudioBuffer b(22050.0, 1, 4);
  const float v[] = {0.0f, 1.0f, 0.0f, -1.0f};
  for (std::size_t k = 0; k < 4; ++k) b.channel(0)[k] = v[k];
  const auto up = resample_linear(b, 44100.0);
  CHECK(up.sample_rate() == 44100.0);
  CHECK(up.frames() == 8);
  CHECK(up.channel(0)[1] == 0.5f);
  CHECK(up.channel(0)[2] == 1.0f);
  CHECK(resample_linear(b, 22050.0) == b);
}
