#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sonir/audio_buffer.hpp"
#include "sonir/automation.hpp"

namespace sonir {

enum class NodeKind {
  SineOscillator,
  Gain,
  BiquadBandpass,
  BufferSource,
  ImpulseTrain,
  Sum,
  Destination,
};

std::string_view to_string(NodeKind kind);

struct NodeId {
  std::uint32_t value = 0;
  auto operator<=>(const NodeId&) const = default;
};

/// Automatable parameter names a node kind declares, with their defaults.
std::span<const std::pair<std::string_view, double>> declared_params(NodeKind kind);

/// True for kinds that produce sound on their own and honor start/stop.
bool is_source(NodeKind kind);

using ParamInit = std::initializer_list<std::pair<std::string_view, double>>;

/// Offline block-based DSP graph.
///
/// Nodes are created and wired up front; parameters carry automation
/// timelines plus audio-rate inputs summed into their value. Rendering is a
/// const operation: all DSP state lives in the render call, so rendering the
/// same graph twice gives bit-identical output.
///
/// Oscillator frequency, gain, playback rate and impulse frequency are
/// evaluated per sample. Bandpass center frequency and Q are evaluated once
/// per block at the block's first frame.
class AudioGraph {
public:
  static constexpr double kDefaultSampleRate = 44100.0;
  static constexpr std::size_t kDefaultBlockSize = 128;

  explicit AudioGraph(double sample_rate = kDefaultSampleRate,
                      std::size_t block_size = kDefaultBlockSize);

  double sample_rate() const noexcept { return sample_rate_; }
  std::size_t block_size() const noexcept { return block_size_; }
  NodeId destination() const noexcept { return NodeId{0}; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  NodeKind kind(NodeId id) const { return node(id).kind; }

  /// Unset params take the kind's defaults. Throws Error{UnknownParam}.
  NodeId create_node(NodeKind kind, ParamInit initial = {});
  NodeId create_node(NodeKind kind, const std::map<std::string, double>& initial);

  void connect(NodeId src, NodeId dst);
  void connect_to_param(NodeId src, NodeId dst, std::string_view param);

  void schedule_param(NodeId id, std::string_view param, const AutomationEvent& event);
  void set_param(NodeId id, std::string_view param, double value, double time) {
    schedule_param(id, param, {AutomationKind::SetValueAtTime, time, value});
  }
  void ramp_param(NodeId id, std::string_view param, double value, double end_time) {
    schedule_param(id, param, {AutomationKind::LinearRampToValueAtTime, end_time, value});
  }

  /// Automation-only value (audio-rate inputs are not included).
  double param_value_at(NodeId id, std::string_view param, double t) const;
  const Automation& automation(NodeId id, std::string_view param) const;

  // Source scheduling. Sources default to start 0 and no stop.
  void start(NodeId id, double time);
  void stop(NodeId id, double time);
  std::optional<double> stop_time(NodeId id) const { return node(id).stop_time; }

  // BufferSource configuration.
  void set_buffer(NodeId id, std::shared_ptr<const AudioBuffer> buffer);
  void set_offset(NodeId id, double offset_s);

  /// Custom processors are named node kinds a synth definition asks the
  /// engine to make available before its build step runs.
  void register_processor(std::string name, NodeKind kind);
  bool has_processor(std::string_view name) const;
  NodeId create_processor_node(std::string_view name, ParamInit initial = {});

  /// Renders ceil(duration * sample_rate) stereo frames.
  /// Throws Error{InvalidGraph} on a malformed graph.
  AudioBuffer render_offline(double duration_s) const;

private:
  struct Param {
    std::string_view name;
    Automation automation;
    std::vector<NodeId> inputs;
  };

  struct Node {
    NodeKind kind = NodeKind::Sum;
    std::vector<Param> params;
    std::vector<NodeId> inputs;
    double start_time = 0.0;
    std::optional<double> stop_time;
    std::shared_ptr<const AudioBuffer> buffer;
    double offset = 0.0;
  };

  Node& node(NodeId id);
  const Node& node(NodeId id) const;
  Param& param(NodeId id, std::string_view name);
  const Param& param(NodeId id, std::string_view name) const;
  bool reaches(NodeId from, NodeId to) const;
  void check_edge(NodeId src, NodeId dst) const;
  std::vector<NodeId> topological_order() const;

  double sample_rate_;
  std::size_t block_size_;
  std::vector<Node> nodes_;
  std::map<std::string, NodeKind, std::less<>> processors_;

  friend class GraphRenderer;
};

/// Frames covering duration_s at sample_rate: ceil, tolerant of float noise
/// so that e.g. 2.0 s at 44100 Hz is exactly 88200 frames.
std::int64_t frames_for(double duration_s, double sample_rate);

/// Nearest frame index for a time.
std::int64_t frame_at(double time_s, double sample_rate);

}  // namespace sonir
