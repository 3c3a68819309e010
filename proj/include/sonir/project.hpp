#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sonir/csv.hpp"
#include "sonir/mapping.hpp"
#include "sonir/synth_model.hpp"

namespace sonir {

/// One dataset column laid out over [start_s, start_s + duration_s) and
/// automating one synth parameter.
struct Region {
  std::string name;
  std::string dataset;
  std::string column;
  std::string parameter;
  double start_s = 0.0;
  double duration_s = 1.0;
  std::string mapping;  // empty: identity

  double end_s() const { return start_s + duration_s; }
  /// Name used in diagnostics: the explicit name or "column->parameter@start".
  std::string label() const;
};

/// A timeline lane driving exactly one synth.
struct Track {
  std::string id;
  std::string name;
  std::string synth;
  std::vector<Region> regions;

  std::string label() const { return name.empty() ? id : name; }
};

struct Transport {
  double duration_s = 10.0;
  double sample_rate = 44100.0;
};

struct ResourceRef {
  std::string name;
  std::string path;
};

/// The serializable unit exchanged by the CLI, the service and the UI.
/// `datasets` and `buffers` hold the resolved contents of the refs.
struct Project {
  std::string version = "1";
  Transport transport;
  std::vector<ResourceRef> dataset_refs;
  std::vector<ResourceRef> buffer_refs;
  std::vector<Track> tracks;
  std::vector<MappingSource> mappings;

  std::map<std::string, Dataset, std::less<>> datasets;
  BufferSet buffers;

  const Dataset* dataset(std::string_view name) const;
  const MappingSource* mapping(std::string_view name) const;
  const Track* track(std::string_view id) const;
};

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string track;   // track label, empty when project-wide
  std::string region;  // region label, empty when track-wide
  std::string message;

  std::string to_string() const;
};

/// All invariant violations; empty means the project is renderable.
std::vector<Diagnostic> validate(const Project& project,
                                 const SynthRegistry& registry = SynthRegistry::builtin());

/// A timestamped set of parameter changes for one track.
struct UpdateEvent {
  std::string track;
  double time_s = 0.0;
  ValueMap changes;
  double dt_to_next_s = 0.0;
};

struct TrackSchedule {
  std::string track;
  std::vector<UpdateEvent> events;
};

struct Schedule {
  std::vector<TrackSchedule> tracks;
  std::vector<Diagnostic> warnings;
};

inline constexpr double kSingleEventSpan = 0.25;

/// Compiles regions into per-track, strictly time-ordered update events.
/// Row k of an n-row region lands at start + k * duration / n; empty cells
/// and non-finite mapped values emit nothing. Simultaneous events from
/// different regions of one track merge into a single event.
/// Precondition: validate(project) is empty.
Schedule compile_schedule(const Project& project,
                          const SynthRegistry& registry = SynthRegistry::builtin());

/// "2.0" -> "2": shortest round-trip decimal text for a quantity used as a token.
std::string tokenize(double value);

struct RenderOptions {
  std::optional<std::string> solo_track;
  std::size_t block_size = AudioGraph::kDefaultBlockSize;
};

struct TrackReport {
  std::string track;
  std::size_t events = 0;
  std::size_t invocations = 0;
};

struct RenderResult {
  AudioBuffer audio;
  std::vector<TrackReport> tracks;
  std::vector<Diagnostic> warnings;
};

/// Builds one graph for the whole project, instantiates every track's synth
/// on its own bus, dispatches the compiled schedule, stops all synths at the
/// transport end and renders offline. Throws Error{Validation} when the
/// project has diagnostics.
RenderResult run_transport(const Project& project,
                           const SynthRegistry& registry = SynthRegistry::builtin(),
                           const RenderOptions& options = {});

}  // namespace sonir
