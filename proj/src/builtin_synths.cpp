#include "sonir/builtin_synths.hpp"

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "sonir/error.hpp"
#include "sonir/log.hpp"

namespace sonir {

namespace {

double quantity(const ValueMap& v, std::string_view name) {
  return std::get<double>(v.find(name)->second);
}

const std::string& token(const ValueMap& v, std::string_view name) {
  return std::get<std::string>(v.find(name)->second);
}

ParameterDescriptor quantitative(std::string name) {
  return {std::move(name), ParamKind::TimbralQuantitative, {}, false};
}

ParameterDescriptor temporal(std::string name) {
  return {std::move(name), ParamKind::Temporal, {}, false};
}

// Classic averaged formant measurements; one bandwidth set for all vowels.
constexpr std::array<double, 3> kBandwidths{80.0, 90.0, 120.0};
constexpr std::array<std::array<double, 3>, 3> kCenters{{
    {730.0, 1090.0, 2440.0},  // a
    {530.0, 1840.0, 2480.0},  // e
    {270.0, 2290.0, 3010.0},  // i
}};

}  // namespace

std::optional<VowelFormants> vowel_formants(std::string_view token) {
  int index = -1;
  if (token == "0") index = 0;
  if (token == "1") index = 1;
  if (token == "2") index = 2;
  if (index < 0) return std::nullopt;
  VowelFormants out{};
  for (std::size_t i = 0; i < 3; ++i) {
    out[i] = Formant{kCenters[static_cast<std::size_t>(index)][i], kBandwidths[i]};
  }
  return out;
}

SynthDefinition fm_definition() {
  SynthDefinition def;
  def.name = "fm";
  def.parameters = {temporal("p3"),     quantitative("p4"), quantitative("p5"),
                    quantitative("p6"), quantitative("p7"), quantitative("p8")};
  def.defaults = [](const BufferSet&) {
    return ValueMap{{"p3", 0.0}, {"p4", 0.5}, {"p5", 440.0},
                    {"p6", 110.0}, {"p7", 1.0}, {"p8", 1.0}};
  };
  def.build = [](BuildContext& ctx) {
    auto& g = ctx.graph;
    const NodeId modulator = g.create_node(NodeKind::SineOscillator, {{"frequency", 110.0}});
    const NodeId mod_gain = g.create_node(NodeKind::Gain, {{"gain", 110.0 * 1.0}});
    const NodeId carrier = g.create_node(NodeKind::SineOscillator, {{"frequency", 440.0}});
    const NodeId amp = g.create_node(NodeKind::Gain, {{"gain", 0.5}});
    g.connect(modulator, mod_gain);
    g.connect_to_param(mod_gain, carrier, "frequency");
    g.connect(carrier, amp);
    g.connect(amp, ctx.destination);

    AudioGraph* graph = &g;
    std::vector<UpdateBinding> bindings;
    bindings.push_back({{"p5", "p3"}, [=](const ValueMap& v, double t, double) {
                          graph->set_param(carrier, "frequency",
                                           std::max(0.0, quantity(v, "p5")), t);
                        }});
    bindings.push_back({{"p4", "p3"}, [=](const ValueMap& v, double t, double) {
                          graph->set_param(amp, "gain", std::clamp(quantity(v, "p4"), 0.0, 1.0), t);
                        }});
    bindings.push_back({{"p6", "p3"}, [=](const ValueMap& v, double t, double) {
                          graph->set_param(modulator, "frequency",
                                           std::max(0.0, quantity(v, "p6")), t);
                        }});
    bindings.push_back(
        {{"p6", "p7", "p8", "p3"}, [=](const ValueMap& v, double t, double dt) {
           const double fm = std::max(0.0, quantity(v, "p6"));
           const double i1 = std::max(0.0, quantity(v, "p7"));
           const double i2 = std::max(0.0, quantity(v, "p8"));
           graph->set_param(mod_gain, "gain", fm * i1, t);
           if (dt > 0.0) graph->ramp_param(mod_gain, "gain", fm * i2, t + dt);
         }});

    auto start = [=](double t) {
      graph->start(modulator, t);
      graph->start(carrier, t);
    };
    auto stop = [=](double t) {
      graph->stop(modulator, t);
      graph->stop(carrier, t);
    };
    return SynthInstance(std::move(bindings), start, stop);
  };
  return def;
}

SynthDefinition formant_definition() {
  SynthDefinition def;
  def.name = "formant";
  def.parameters = {quantitative("Frequency"),
                    {"Vowel", ParamKind::TimbralNominal, {"0", "1", "2"}, false},
                    temporal("Time")};
  def.defaults = [](const BufferSet&) {
    return ValueMap{{"Frequency", 110.0}, {"Vowel", std::string("0")}, {"Time", 0.0}};
  };
  def.processors = {{"impulse", NodeKind::ImpulseTrain}};
  def.build = [](BuildContext& ctx) {
    auto& g = ctx.graph;
    const NodeId impulse = g.create_processor_node("impulse", {{"frequency", 110.0}});
    const NodeId sum = g.create_node(NodeKind::Sum);
    const VowelFormants initial = *vowel_formants("0");
    std::array<NodeId, 3> filters{};
    for (std::size_t i = 0; i < 3; ++i) {
      filters[i] = g.create_node(NodeKind::BiquadBandpass, {{"center_frequency", initial[i].center_hz},
                                                            {"q", initial[i].q()}});
      g.connect(impulse, filters[i]);
      g.connect(filters[i], sum);
    }
    const NodeId out = g.create_node(NodeKind::Gain, {{"gain", kFormantOutputGain}});
    g.connect(sum, out);
    g.connect(out, ctx.destination);

    AudioGraph* graph = &g;
    std::vector<UpdateBinding> bindings;
    bindings.push_back({{"Frequency", "Time"}, [=](const ValueMap& v, double t, double) {
                          graph->set_param(impulse, "frequency",
                                           std::max(0.0, quantity(v, "Frequency")), t);
                        }});
    bindings.push_back({{"Vowel", "Time"}, [=](const ValueMap& v, double t, double) {
                          const auto& vowel = token(v, "Vowel");
                          const auto formants = vowel_formants(vowel);
                          if (!formants) {
                            throw Error(ErrorCode::UnknownVowel, "unknown vowel token '" + vowel +
                                                                     "' (expected 0, 1 or 2)");
                          }
                          for (std::size_t i = 0; i < 3; ++i) {
                            graph->set_param(filters[i], "center_frequency",
                                             (*formants)[i].center_hz, t);
                            graph->set_param(filters[i], "q", (*formants)[i].q(), t);
                          }
                        }});

    auto stopped = std::make_shared<bool>(false);
    auto start = [=](double t) { graph->start(impulse, t); };
    // Suspends the voice: the source stops and the filter tails are muted.
    auto stop = [=](double t) {
      if (*stopped) return;
      *stopped = true;
      graph->stop(impulse, t);
      graph->set_param(out, "gain", 0.0, t);
    };
    return SynthInstance(std::move(bindings), start, stop);
  };
  return def;
}

SynthDefinition granular_definition() {
  SynthDefinition def;
  def.name = "granular";
  def.parameters = {{"buffer", ParamKind::TimbralNominal, {}, true},
                    quantitative("rate"),
                    quantitative("position"),
                    quantitative("gain"),
                    quantitative("duration"),
                    temporal("time")};
  def.defaults = [](const BufferSet& buffers) {
    return ValueMap{{"buffer", buffers.empty() ? std::string{} : buffers.names().front()},
                    {"rate", 1.0},
                    {"position", 0.0},
                    {"gain", 0.8},
                    {"duration", 0.1},
                    {"time", 0.0}};
  };
  def.build = [](BuildContext& ctx) {
    if (ctx.buffers.empty()) {
      throw Error(ErrorCode::UnknownBuffer, "granular synth needs at least one loaded buffer");
    }
    struct Grain {
      NodeId source;
      double start;
    };
    auto grains = std::make_shared<std::vector<Grain>>();
    AudioGraph* graph = &ctx.graph;
    const NodeId destination = ctx.destination;
    const BufferSet buffers = ctx.buffers;

    std::vector<UpdateBinding> bindings;
    bindings.push_back(
        {{"buffer", "rate", "position", "gain", "duration", "time"},
         [=](const ValueMap& v, double t, double) {
           const auto& name = token(v, "buffer");
           auto buffer = buffers.find(name);
           if (!buffer) throw Error(ErrorCode::UnknownBuffer, "unknown buffer '" + name + "'");
           const double rate = quantity(v, "rate");
           const double duration = quantity(v, "duration");
           const double position = quantity(v, "position");
           if (!(rate > 0.0) || !(duration > 0.0) || !(position >= 0.0)) {
             log().warn("dropping grain at t={}: rate={}, duration={}, position={}", t, rate,
                        duration, position);
             return;
           }
           const NodeId source = graph->create_node(NodeKind::BufferSource, {{"playback_rate", rate}});
           graph->set_buffer(source, buffer);
           graph->set_offset(source, std::min(position, buffer->duration()));
           graph->start(source, t);
           graph->stop(source, t + duration);
           const NodeId gain = graph->create_node(NodeKind::Gain, {{"gain", quantity(v, "gain")}});
           graph->connect(source, gain);
           graph->connect(gain, destination);
           grains->push_back({source, t});
         }});

    auto stop = [=](double t) {
      for (const auto& g : *grains) {
        const auto current = graph->stop_time(g.source);
        if (!current || *current > t) graph->stop(g.source, std::max(t, g.start));
      }
    };
    return SynthInstance(std::move(bindings), [](double) {}, stop);
  };
  return def;
}

const SynthRegistry& SynthRegistry::builtin() {
  static const SynthRegistry registry = [] {
    SynthRegistry r;
    r.add(fm_definition());
    r.add(formant_definition());
    r.add(granular_definition());
    return r;
  }();
  return registry;
}

}  // namespace sonir
