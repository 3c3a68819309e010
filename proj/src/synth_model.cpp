#include "sonir/synth_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "sonir/error.hpp"

namespace sonir {

std::string_view to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::TimbralNominal: return "nominal";
    case ParamKind::TimbralQuantitative: return "quantitative";
    case ParamKind::Temporal: return "temporal";
  }
  return "unknown";
}

std::string format_value(const ParamValue& v) {
  if (const auto* token = std::get_if<std::string>(&v)) return *token;
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, std::get<double>(v));
  return std::string(buf, res.ptr);
}

void BufferSet::add(std::string name, std::shared_ptr<const AudioBuffer> buffer) {
  if (buffers_.find(name) == buffers_.end()) order_.push_back(name);
  buffers_.insert_or_assign(std::move(name), std::move(buffer));
}

std::shared_ptr<const AudioBuffer> BufferSet::find(std::string_view name) const {
  auto it = buffers_.find(name);
  return it == buffers_.end() ? nullptr : it->second;
}

const ParameterDescriptor* SynthDefinition::find(std::string_view param) const {
  auto it = std::find_if(parameters.begin(), parameters.end(),
                         [&](const ParameterDescriptor& d) { return d.name == param; });
  return it == parameters.end() ? nullptr : &*it;
}

const ParameterDescriptor& SynthDefinition::temporal() const {
  for (const auto& d : parameters) {
    if (d.kind == ParamKind::Temporal) return d;
  }
  throw Error(ErrorCode::InvalidArgument, "synth '" + name + "' has no temporal parameter");
}

void check_definition(const SynthDefinition& def) {
  std::set<std::string_view> names;
  int temporal = 0;
  for (const auto& d : def.parameters) {
    if (!names.insert(d.name).second) {
      throw Error(ErrorCode::InvalidArgument,
                  "synth '" + def.name + "' declares parameter '" + d.name + "' twice");
    }
    if (d.kind == ParamKind::Temporal) ++temporal;
  }
  if (temporal != 1) {
    throw Error(ErrorCode::InvalidArgument, "synth '" + def.name +
                                                "' must declare exactly one temporal parameter, found " +
                                                std::to_string(temporal));
  }
  if (!def.build) {
    throw Error(ErrorCode::InvalidArgument, "synth '" + def.name + "' has no build step");
  }
}

ValueMap default_values(const SynthDefinition& def, const BufferSet& buffers) {
  ValueMap values = def.defaults ? def.defaults(buffers) : ValueMap{};
  for (const auto& d : def.parameters) {
    if (values.find(d.name) != values.end()) continue;
    if (d.kind == ParamKind::TimbralNominal) {
      values.emplace(d.name, std::string{});
    } else {
      values.emplace(d.name, 0.0);
    }
  }
  return values;
}

namespace {

void check_kind(const ParameterDescriptor& d, const ParamValue& v) {
  const bool is_token = std::holds_alternative<std::string>(v);
  const bool wants_token = d.kind == ParamKind::TimbralNominal;
  if (is_token != wants_token) {
    throw Error(ErrorCode::KindMismatch,
                "parameter '" + d.name + "' is " + std::string(to_string(d.kind)) + " but got a " +
                    (is_token ? "token" : "quantity"));
  }
}

}  // namespace

std::size_t SynthInstance::dispatch_update(const std::set<std::string, std::less<>>& changed,
                                           const ValueMap& values, double event_time,
                                           double dt_to_next) {
  if (changed.empty()) {
    throw Error(ErrorCode::InvalidArgument, "dispatch requires at least one changed parameter");
  }
  const ParameterDescriptor* temporal = nullptr;
  for (const auto& d : params_) {
    if (d.kind == ParamKind::Temporal) temporal = &d;
  }
  // Validate everything before touching the cache.
  for (const auto& name : changed) {
    auto it = std::find_if(params_.begin(), params_.end(),
                           [&](const ParameterDescriptor& d) { return d.name == name; });
    if (it == params_.end()) {
      throw Error(ErrorCode::UnknownParameter, "unknown parameter '" + name + "'");
    }
    if (it->kind == ParamKind::Temporal) {
      throw Error(ErrorCode::InvalidArgument,
                  "temporal parameter '" + name + "' is driven by event time, not data");
    }
    auto v = values.find(name);
    if (v == values.end()) {
      throw Error(ErrorCode::InvalidArgument, "no value supplied for changed parameter '" + name + "'");
    }
    check_kind(*it, v->second);
  }

  for (const auto& name : changed) values_.insert_or_assign(name, values.find(name)->second);
  if (temporal) values_.insert_or_assign(temporal->name, event_time);

  std::size_t fired = 0;
  for (const auto& binding : bindings_) {
    const bool hit = std::any_of(binding.key.begin(), binding.key.end(),
                                 [&](const std::string& k) { return changed.contains(k); });
    if (!hit) continue;
    ValueMap args;
    for (const auto& k : binding.key) args.insert_or_assign(k, values_.at(k));
    binding.effect(args, event_time, dt_to_next);
    ++fired;
  }
  invocations_ += fired;
  return fired;
}

void SynthInstance::start_all(double t) {
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "start time must be >= 0");
  if (start_) start_(t);
}

void SynthInstance::stop_all(double t) {
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "stop time must be >= 0");
  if (stop_) stop_(t);
}

SynthInstance instantiate(const SynthDefinition& def, AudioGraph& graph, NodeId destination,
                          const BufferSet& buffers) {
  check_definition(def);
  if (destination.value >= graph.node_count()) {
    throw Error(ErrorCode::InvalidGraph, "destination node does not exist");
  }
  for (const auto& [name, kind] : def.processors) graph.register_processor(name, kind);

  SynthInstance instance;
  try {
    BuildContext ctx{graph, destination, buffers};
    instance = def.build(ctx);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::BuildFailure, "building synth '" + def.name + "' failed: " + e.what());
  }
  for (const auto& b : instance.bindings()) {
    for (const auto& k : b.key) {
      if (!def.find(k)) {
        throw Error(ErrorCode::BuildFailure, "synth '" + def.name + "' binds undeclared parameter '" +
                                                 k + "'");
      }
    }
  }
  instance.params_ = def.parameters;
  instance.values_ = default_values(def, buffers);
  return instance;
}

void SynthRegistry::add(SynthDefinition def) {
  check_definition(def);
  auto name = def.name;
  defs_.insert_or_assign(std::move(name), std::move(def));
}

const SynthDefinition* SynthRegistry::find(std::string_view name) const {
  auto it = defs_.find(name);
  return it == defs_.end() ? nullptr : &it->second;
}

const SynthDefinition& SynthRegistry::at(std::string_view name) const {
  if (const auto* d = find(name)) return *d;
  throw Error(ErrorCode::InvalidArgument, "no synth named '" + std::string(name) + "'");
}

std::vector<std::string> SynthRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : defs_) out.push_back(name);
  return out;
}

}  // namespace sonir
