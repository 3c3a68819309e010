#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "sonir/synth_model.hpp"

namespace sonir {

/// Chowning-style FM: p3 time, p4 amplitude, p5 carrier Hz, p6 modulator Hz,
/// p7/p8 start/end modulation index. Deviation is index * modulator Hz and
/// ramps from p7 to p8 across the gap to the next event.
SynthDefinition fm_definition();

/// Impulse train through three parallel bandpass formant filters.
/// Vowel tokens "0", "1", "2" select a, e, i.
SynthDefinition formant_definition();

/// One rectangular grain per update, read from a named buffer.
SynthDefinition granular_definition();

struct Formant {
  double center_hz;
  double bandwidth_hz;
  double q() const { return center_hz / bandwidth_hz; }
};

using VowelFormants = std::array<Formant, 3>;

/// Formant table entry for a vowel token, or nullopt for an unknown token.
std::optional<VowelFormants> vowel_formants(std::string_view token);

inline constexpr double kFormantOutputGain = 0.9;

}  // namespace sonir
