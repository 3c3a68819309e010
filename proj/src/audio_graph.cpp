#include "sonir/audio_graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>

#include "sonir/biquad.hpp"
#include "sonir/error.hpp"
#include "sonir/impulse_train.hpp"
#include "sonir/log.hpp"

namespace sonir {

namespace {

using ParamTable = std::span<const std::pair<std::string_view, double>>;

constexpr std::array<std::pair<std::string_view, double>, 1> kSineParams{{{"frequency", 440.0}}};
constexpr std::array<std::pair<std::string_view, double>, 1> kGainParams{{{"gain", 1.0}}};
constexpr std::array<std::pair<std::string_view, double>, 2> kBiquadParams{
    {{"center_frequency", 440.0}, {"q", 1.0}}};
constexpr std::array<std::pair<std::string_view, double>, 1> kBufferParams{
    {{"playback_rate", 1.0}}};
constexpr std::array<std::pair<std::string_view, double>, 1> kImpulseParams{
    {{"frequency", 100.0}}};

}  // namespace

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::SineOscillator: return "SineOscillator";
    case NodeKind::Gain: return "Gain";
    case NodeKind::BiquadBandpass: return "BiquadBandpass";
    case NodeKind::BufferSource: return "BufferSource";
    case NodeKind::ImpulseTrain: return "ImpulseTrain";
    case NodeKind::Sum: return "Sum";
    case NodeKind::Destination: return "Destination";
  }
  return "Unknown";
}

ParamTable declared_params(NodeKind kind) {
  switch (kind) {
    case NodeKind::SineOscillator: return kSineParams;
    case NodeKind::Gain: return kGainParams;
    case NodeKind::BiquadBandpass: return kBiquadParams;
    case NodeKind::BufferSource: return kBufferParams;
    case NodeKind::ImpulseTrain: return kImpulseParams;
    case NodeKind::Sum:
    case NodeKind::Destination: return {};
  }
  return {};
}

bool is_source(NodeKind kind) {
  return kind == NodeKind::SineOscillator || kind == NodeKind::BufferSource ||
         kind == NodeKind::ImpulseTrain;
}

std::int64_t frames_for(double duration_s, double sample_rate) {
  if (!(duration_s > 0.0)) return 0;
  return static_cast<std::int64_t>(std::ceil(duration_s * sample_rate - 1e-6));
}

std::int64_t frame_at(double time_s, double sample_rate) {
  return static_cast<std::int64_t>(std::llround(time_s * sample_rate));
}

AudioGraph::AudioGraph(double sample_rate, std::size_t block_size)
    : sample_rate_(sample_rate), block_size_(block_size) {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
  }
  if (block_size == 0) {
    throw Error(ErrorCode::InvalidArgument, "block size must be positive");
  }
  Node dest;
  dest.kind = NodeKind::Destination;
  nodes_.push_back(std::move(dest));
}

AudioGraph::Node& AudioGraph::node(NodeId id) {
  if (id.value >= nodes_.size()) {
    throw Error(ErrorCode::InvalidGraph, "unknown node id " + std::to_string(id.value));
  }
  return nodes_[id.value];
}

const AudioGraph::Node& AudioGraph::node(NodeId id) const {
  if (id.value >= nodes_.size()) {
    throw Error(ErrorCode::InvalidGraph, "unknown node id " + std::to_string(id.value));
  }
  return nodes_[id.value];
}

AudioGraph::Param& AudioGraph::param(NodeId id, std::string_view name) {
  auto& n = node(id);
  for (auto& p : n.params) {
    if (p.name == name) return p;
  }
  throw Error(ErrorCode::UnknownParam, "node kind " + std::string(to_string(n.kind)) +
                                           " has no parameter '" + std::string(name) + "'");
}

const AudioGraph::Param& AudioGraph::param(NodeId id, std::string_view name) const {
  return const_cast<AudioGraph*>(this)->param(id, name);
}

NodeId AudioGraph::create_node(NodeKind kind, ParamInit initial) {
  if (kind == NodeKind::Destination) {
    throw Error(ErrorCode::InvalidGraph, "a graph has exactly one destination");
  }
  Node n;
  n.kind = kind;
  for (const auto& [name, def] : declared_params(kind)) {
    n.params.push_back(Param{name, Automation(def), {}});
  }
  for (const auto& [name, value] : initial) {
    auto it = std::find_if(n.params.begin(), n.params.end(),
                           [&](const Param& p) { return p.name == name; });
    if (it == n.params.end()) {
      throw Error(ErrorCode::UnknownParam, "node kind " + std::string(to_string(kind)) +
                                               " has no parameter '" + std::string(name) + "'");
    }
    it->automation.set_base_value(value);
  }
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

NodeId AudioGraph::create_node(NodeKind kind, const std::map<std::string, double>& initial) {
  const NodeId id = create_node(kind);
  for (const auto& [name, value] : initial) {
    try {
      param(id, name).automation.set_base_value(value);
    } catch (...) {
      nodes_.pop_back();
      throw;
    }
  }
  return id;
}

bool AudioGraph::reaches(NodeId from, NodeId to) const {
  // Edges run from a node to the nodes that consume it.
  std::vector<bool> seen(nodes_.size(), false);
  std::vector<NodeId> stack{from};
  while (!stack.empty()) {
    const NodeId cur = stack.back();
    stack.pop_back();
    if (cur == to) return true;
    if (seen[cur.value]) continue;
    seen[cur.value] = true;
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
      const auto& n = nodes_[i];
      bool feeds = std::find(n.inputs.begin(), n.inputs.end(), cur) != n.inputs.end();
      for (const auto& p : n.params) {
        if (feeds) break;
        feeds = std::find(p.inputs.begin(), p.inputs.end(), cur) != p.inputs.end();
      }
      if (feeds) stack.push_back(NodeId{i});
    }
  }
  return false;
}

void AudioGraph::check_edge(NodeId src, NodeId dst) const {
  node(src);
  node(dst);
  if (src == destination()) {
    throw Error(ErrorCode::InvalidGraph, "the destination has no output to connect");
  }
  if (src == dst || reaches(dst, src)) {
    throw Error(ErrorCode::CycleDetected, "connection " + std::to_string(src.value) + " -> " +
                                              std::to_string(dst.value) + " closes a cycle");
  }
}

void AudioGraph::connect(NodeId src, NodeId dst) {
  check_edge(src, dst);
  auto& d = node(dst);
  if (is_source(d.kind)) {
    throw Error(ErrorCode::InvalidGraph,
                std::string(to_string(d.kind)) + " nodes take no audio input");
  }
  d.inputs.push_back(src);
}

void AudioGraph::connect_to_param(NodeId src, NodeId dst, std::string_view name) {
  auto& p = param(dst, name);
  check_edge(src, dst);
  p.inputs.push_back(src);
}

void AudioGraph::schedule_param(NodeId id, std::string_view name, const AutomationEvent& event) {
  param(id, name).automation.insert(event);
}

double AudioGraph::param_value_at(NodeId id, std::string_view name, double t) const {
  return param(id, name).automation.value_at(t);
}

const Automation& AudioGraph::automation(NodeId id, std::string_view name) const {
  return param(id, name).automation;
}

void AudioGraph::start(NodeId id, double time) {
  auto& n = node(id);
  if (!is_source(n.kind)) {
    throw Error(ErrorCode::InvalidArgument, std::string(to_string(n.kind)) + " cannot be started");
  }
  if (!(time >= 0.0)) throw Error(ErrorCode::InvalidArgument, "start time must be >= 0");
  if (n.stop_time && time > *n.stop_time) {
    throw Error(ErrorCode::InvalidArgument, "start time after stop time");
  }
  n.start_time = time;
}

void AudioGraph::stop(NodeId id, double time) {
  auto& n = node(id);
  if (!is_source(n.kind)) {
    throw Error(ErrorCode::InvalidArgument, std::string(to_string(n.kind)) + " cannot be stopped");
  }
  if (!(time >= 0.0)) throw Error(ErrorCode::InvalidArgument, "stop time must be >= 0");
  if (time < n.start_time) {
    throw Error(ErrorCode::InvalidArgument, "stop time before start time");
  }
  n.stop_time = time;
}

void AudioGraph::set_buffer(NodeId id, std::shared_ptr<const AudioBuffer> buffer) {
  auto& n = node(id);
  if (n.kind != NodeKind::BufferSource) {
    throw Error(ErrorCode::InvalidArgument, "only BufferSource nodes hold a buffer");
  }
  n.buffer = std::move(buffer);
}

void AudioGraph::set_offset(NodeId id, double offset_s) {
  auto& n = node(id);
  if (n.kind != NodeKind::BufferSource) {
    throw Error(ErrorCode::InvalidArgument, "only BufferSource nodes have an offset");
  }
  if (!(offset_s >= 0.0)) throw Error(ErrorCode::InvalidArgument, "offset must be >= 0");
  n.offset = offset_s;
}

void AudioGraph::register_processor(std::string name, NodeKind kind) {
  processors_.insert_or_assign(std::move(name), kind);
}

bool AudioGraph::has_processor(std::string_view name) const {
  return processors_.find(name) != processors_.end();
}

NodeId AudioGraph::create_processor_node(std::string_view name, ParamInit initial) {
  auto it = processors_.find(name);
  if (it == processors_.end()) {
    throw Error(ErrorCode::InvalidGraph, "processor '" + std::string(name) + "' is not registered");
  }
  return create_node(it->second, initial);
}

std::vector<NodeId> AudioGraph::topological_order() const {
  const auto count = nodes_.size();
  std::vector<std::vector<std::uint32_t>> consumers(count);
  std::vector<std::size_t> indegree(count, 0);
  auto add_edge = [&](NodeId from, std::uint32_t to) {
    if (from.value >= count) {
      throw Error(ErrorCode::InvalidGraph, "connection references a missing node");
    }
    consumers[from.value].push_back(to);
    ++indegree[to];
  };
  for (std::uint32_t i = 0; i < count; ++i) {
    for (auto in : nodes_[i].inputs) add_edge(in, i);
    for (const auto& p : nodes_[i].params) {
      for (auto in : p.inputs) add_edge(in, i);
    }
  }
  // Min-heap on id keeps the order deterministic.
  std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> ready;
  for (std::uint32_t i = 0; i < count; ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<NodeId> order;
  order.reserve(count);
  while (!ready.empty()) {
    const auto cur = ready.top();
    ready.pop();
    order.push_back(NodeId{cur});
    for (auto c : consumers[cur]) {
      if (--indegree[c] == 0) ready.push(c);
    }
  }
  if (order.size() != count) throw Error(ErrorCode::InvalidGraph, "graph contains a cycle");
  return order;
}

// Per-render DSP state and scratch buffers.
class GraphRenderer {
public:
  explicit GraphRenderer(const AudioGraph& graph)
      : graph_(graph),
        order_(graph.topological_order()),
        block_(graph.block_size()),
        outputs_(graph.nodes_.size()),
        states_(graph.nodes_.size()),
        flushed_(graph.nodes_.size(), false),
        scratch_(block_),
        scratch2_(block_) {
    for (auto& o : outputs_) {
      o[0].assign(block_, 0.0);
      o[1].assign(block_, 0.0);
    }
  }

  AudioBuffer run(std::int64_t total_frames) {
    AudioBuffer out(graph_.sample_rate(), 2, static_cast<std::size_t>(total_frames));
    for (std::int64_t first = 0; first < total_frames;
         first += static_cast<std::int64_t>(block_)) {
      const auto len = static_cast<std::size_t>(
          std::min<std::int64_t>(static_cast<std::int64_t>(block_), total_frames - first));
      for (NodeId id : order_) process(id, first, len);
      const auto& dest = outputs_[graph_.destination().value];
      for (std::size_t c = 0; c < 2; ++c) {
        auto ch = out.channel(c);
        for (std::size_t k = 0; k < len; ++k) {
          ch[static_cast<std::size_t>(first) + k] = static_cast<float>(dest[c][k]);
        }
      }
    }
    return out;
  }

private:
  struct NodeState {
    double phase = 0.0;
    ImpulseTrainState impulse;
    std::array<BiquadState, 2> biquad;
    double position = 0.0;
    bool position_init = false;
  };

  using Stereo = std::array<std::vector<double>, 2>;

  // Automation plus audio-rate inputs (mono downmix), one value per frame.
  void param_values(const AudioGraph::Param& p, std::int64_t first, std::size_t len,
                    std::span<double> out) {
    p.automation.fill(out.first(len), first, graph_.sample_rate());
    for (NodeId in : p.inputs) {
      const auto& src = outputs_[in.value];
      for (std::size_t k = 0; k < len; ++k) out[k] += 0.5 * (src[0][k] + src[1][k]);
    }
  }

  void sum_inputs(const AudioGraph::Node& n, Stereo& dst, std::size_t len) {
    for (std::size_t c = 0; c < 2; ++c) std::fill_n(dst[c].begin(), len, 0.0);
    for (NodeId in : n.inputs) {
      const auto& src = outputs_[in.value];
      for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t k = 0; k < len; ++k) dst[c][k] += src[c][k];
      }
    }
  }

  void process(NodeId id, std::int64_t first, std::size_t len) {
    const auto& n = graph_.nodes_[id.value];
    auto& out = outputs_[id.value];
    auto& st = states_[id.value];
    const double sr = graph_.sample_rate();

    // Active frame window for sources, relative to this block.
    std::size_t active_begin = 0;
    std::size_t active_end = len;
    if (is_source(n.kind)) {
      const std::int64_t start = frame_at(n.start_time, sr);
      const std::int64_t stop = n.stop_time ? frame_at(*n.stop_time, sr)
                                            : std::numeric_limits<std::int64_t>::max();
      const std::int64_t last = first + static_cast<std::int64_t>(len);
      active_begin = static_cast<std::size_t>(std::clamp(start, first, last) - first);
      active_end = static_cast<std::size_t>(std::clamp(stop, first, last) - first);
      if (active_end < active_begin) active_end = active_begin;
      for (std::size_t c = 0; c < 2; ++c) std::fill_n(out[c].begin(), len, 0.0);
    }

    switch (n.kind) {
      case NodeKind::SineOscillator: {
        param_values(n.params[0], first, len, scratch_);
        for (std::size_t k = active_begin; k < active_end; ++k) {
          const double y = std::sin(2.0 * std::numbers::pi * st.phase);
          out[0][k] = y;
          out[1][k] = y;
          st.phase += scratch_[k] / sr;
          st.phase -= std::floor(st.phase);
        }
        break;
      }
      case NodeKind::ImpulseTrain: {
        param_values(n.params[0], first, len, scratch_);
        const auto span = active_end - active_begin;
        impulse_train_process(st.impulse,
                              std::span<const double>(scratch_).subspan(active_begin, span), sr,
                              std::span<double>(out[0]).subspan(active_begin, span));
        std::copy_n(out[0].begin() + static_cast<std::ptrdiff_t>(active_begin), span,
                    out[1].begin() + static_cast<std::ptrdiff_t>(active_begin));
        break;
      }
      case NodeKind::BufferSource: {
        param_values(n.params[0], first, len, scratch_);
        if (!n.buffer || n.buffer->frames() == 0) break;
        const auto& buf = *n.buffer;
        const double rate_scale = buf.sample_rate() / sr;
        const auto frames = static_cast<double>(buf.frames());
        if (!st.position_init && active_begin < active_end) {
          st.position = n.offset * buf.sample_rate();
          st.position_init = true;
        }
        for (std::size_t k = active_begin; k < active_end; ++k) {
          const double pos = st.position;
          if (pos >= 0.0 && pos < frames) {
            const auto i = static_cast<std::size_t>(pos);
            const double frac = pos - static_cast<double>(i);
            for (std::size_t c = 0; c < 2; ++c) {
              const double a = buf.sample(c, i);
              if (frac == 0.0 || i + 1 >= buf.frames()) {
                out[c][k] = a;
              } else {
                const double b = buf.sample(c, i + 1);
                out[c][k] = a + frac * (b - a);
              }
            }
          }
          st.position += scratch_[k] * rate_scale;
        }
        break;
      }
      case NodeKind::Gain: {
        param_values(n.params[0], first, len, scratch_);
        sum_inputs(n, out, len);
        for (std::size_t c = 0; c < 2; ++c) {
          for (std::size_t k = 0; k < len; ++k) out[c][k] *= scratch_[k];
        }
        break;
      }
      case NodeKind::BiquadBandpass: {
        param_values(n.params[0], first, 1, scratch_);
        param_values(n.params[1], first, 1, scratch2_);
        const double nyquist = sr / 2.0;
        double center = scratch_[0];
        double q = scratch2_[0];
        if (!(center > 0.0 && center < nyquist) || !(q > 0.0)) {
          if (!flushed_[id.value]) {
            log().warn("bandpass node {} parameters out of range (f={}, q={}); clamping",
                       id.value, center, q);
          }
          center = std::clamp(std::isfinite(center) ? center : 1.0, 1e-3, nyquist * 0.999);
          q = std::isfinite(q) && q > 0.0 ? q : 1e-3;
        }
        const auto coeffs = bandpass_coefficients(center, q, sr);
        sum_inputs(n, out, len);
        for (std::size_t c = 0; c < 2; ++c) {
          for (std::size_t k = 0; k < len; ++k) out[c][k] = st.biquad[c].process(coeffs, out[c][k]);
        }
        break;
      }
      case NodeKind::Sum:
      case NodeKind::Destination:
        sum_inputs(n, out, len);
        break;
    }

    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t k = 0; k < len; ++k) {
        if (!std::isfinite(out[c][k])) {
          out[c][k] = 0.0;
          if (!flushed_[id.value]) {
            flushed_[id.value] = true;
            log().warn("node {} ({}) produced a non-finite sample; flushing to 0", id.value,
                       to_string(n.kind));
          }
        }
      }
    }
  }

  const AudioGraph& graph_;
  std::vector<NodeId> order_;
  std::size_t block_;
  std::vector<Stereo> outputs_;
  std::vector<NodeState> states_;
  std::vector<bool> flushed_;
  std::vector<double> scratch_;
  std::vector<double> scratch2_;
};

AudioBuffer AudioGraph::render_offline(double duration_s) const {
  if (!(duration_s >= 0.0) || !std::isfinite(duration_s)) {
    throw Error(ErrorCode::InvalidArgument, "render duration must be finite and >= 0");
  }
  for (const auto& n : nodes_) {
    if (n.stop_time && *n.stop_time < n.start_time) {
      throw Error(ErrorCode::InvalidGraph, "source stops before it starts");
    }
  }
  GraphRenderer renderer(*this);
  return renderer.run(frames_for(duration_s, sample_rate_));
}

}  // namespace sonir
