#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sonir/audio_buffer.hpp"
#include "sonir/audio_graph.hpp"

namespace sonir {

enum class ParamKind { TimbralNominal, TimbralQuantitative, Temporal };

std::string_view to_string(ParamKind kind);

/// Quantity (double) for quantitative and temporal parameters, Token
/// (std::string) for nominal ones.
using ParamValue = std::variant<double, std::string>;
using ValueMap = std::map<std::string, ParamValue, std::less<>>;

std::string format_value(const ParamValue& v);

struct ParameterDescriptor {
  std::string name;
  ParamKind kind = ParamKind::TimbralQuantitative;
  /// Accepted tokens for a nominal parameter; empty means unrestricted.
  std::vector<std::string> tokens;
  /// Nominal parameter whose tokens name loaded buffers.
  bool names_buffer = false;
};

/// (values of every key member, event time, time until the next event)
using UpdateEffect = std::function<void(const ValueMap&, double, double)>;

struct UpdateBinding {
  std::vector<std::string> key;
  UpdateEffect effect;
};

/// Named sample buffers resolved before a synth is built, in load order.
class BufferSet {
public:
  void add(std::string name, std::shared_ptr<const AudioBuffer> buffer);
  std::shared_ptr<const AudioBuffer> find(std::string_view name) const;
  const std::vector<std::string>& names() const noexcept { return order_; }
  bool empty() const noexcept { return order_.empty(); }

private:
  std::vector<std::string> order_;
  std::map<std::string, std::shared_ptr<const AudioBuffer>, std::less<>> buffers_;
};

struct BuildContext {
  AudioGraph& graph;
  NodeId destination;
  const BufferSet& buffers;
};

class SynthInstance;

/// Declarative synth contract: parameters, defaults, processors the engine
/// registers before building, and the build step producing an instance.
struct SynthDefinition {
  std::string name;
  std::vector<ParameterDescriptor> parameters;
  std::function<ValueMap(const BufferSet&)> defaults;
  /// Processor name -> engine node kind, registered with the graph before build.
  std::vector<std::pair<std::string, NodeKind>> processors;
  std::function<SynthInstance(BuildContext&)> build;

  const ParameterDescriptor* find(std::string_view param) const;
  const ParameterDescriptor& temporal() const;
};

/// Throws Error{InvalidArgument} unless the definition has unique names and
/// exactly one temporal parameter.
void check_definition(const SynthDefinition& def);

ValueMap default_values(const SynthDefinition& def, const BufferSet& buffers = {});

/// A built synth bound to one graph.
class SynthInstance {
public:
  SynthInstance() = default;
  SynthInstance(std::vector<UpdateBinding> bindings, std::function<void(double)> start,
                std::function<void(double)> stop)
      : bindings_(std::move(bindings)), start_(std::move(start)), stop_(std::move(stop)) {}

  const std::vector<UpdateBinding>& bindings() const noexcept { return bindings_; }
  const ValueMap& current_values() const noexcept { return values_; }

  /// Fires every binding whose key intersects `changed` exactly once, in
  /// definition order, after merging `values` into the cache. The temporal
  /// parameter takes `event_time` and never counts as a change.
  /// Returns the number of bindings fired.
  std::size_t dispatch_update(const std::set<std::string, std::less<>>& changed,
                              const ValueMap& values, double event_time, double dt_to_next);

  void start_all(double t);
  void stop_all(double t);

  std::size_t total_invocations() const noexcept { return invocations_; }

private:
  friend SynthInstance instantiate(const SynthDefinition&, AudioGraph&, NodeId,
                                   const BufferSet&);

  std::vector<ParameterDescriptor> params_;
  std::vector<UpdateBinding> bindings_;
  std::function<void(double)> start_;
  std::function<void(double)> stop_;
  ValueMap values_;
  std::size_t invocations_ = 0;
};

/// Registers the definition's processors with the graph, builds the
/// subgraph, and seeds the value cache with defaults. Any failure inside
/// build surfaces as Error{BuildFailure} carrying the cause.
SynthInstance instantiate(const SynthDefinition& def, AudioGraph& graph, NodeId destination,
                          const BufferSet& buffers = {});

/// Registry of available synth definitions keyed by name.
class SynthRegistry {
public:
  void add(SynthDefinition def);
  const SynthDefinition* find(std::string_view name) const;
  const SynthDefinition& at(std::string_view name) const;
  std::vector<std::string> names() const;

  /// "fm", "formant", "granular".
  static const SynthRegistry& builtin();

private:
  std::map<std::string, SynthDefinition, std::less<>> defs_;
};

}  // namespace sonir
