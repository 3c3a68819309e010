#include "sonir/project.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "sonir/error.hpp"
#include "sonir/log.hpp"

namespace sonir {

namespace {

std::string format_seconds(double s) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, s);
  return std::string(buf, res.ptr);
}

// One mapped cell of a region.
struct RegionValue {
  std::size_t row;
  double time;
  std::optional<ParamValue> value;  // nullopt: dropped (non-finite)
  double raw = 0.0;
};

// Evaluates a region's column through its mapping. Assumes the region's
// references resolve; callers check that first.
std::vector<RegionValue> region_values(const Project& project, const Region& region,
                                       const ParameterDescriptor& target) {
  const Dataset& data = *project.dataset(region.dataset);
  const Column& col = *data.find(region.column);
  const MappingSource* mapping = region.mapping.empty() ? nullptr : project.mapping(region.mapping);
  const bool nominal_target = target.kind == ParamKind::TimbralNominal;

  auto recode = [&](std::string token) {
    if (mapping) {
      auto it = mapping->recode.find(token);
      if (it != mapping->recode.end()) return it->second;
    }
    return token;
  };

  std::vector<RegionValue> out;
  const std::size_t n = col.cells.size();
  if (n == 0) return out;

  std::optional<dsl::Program> program;
  dsl::EvalEnv env;
  env.n = static_cast<double>(n);
  if (col.dtype == DataType::Quantitative) {
    program.emplace(mapping ? *dsl::parse(mapping->source) : *dsl::identity_mapping());
    if (col.non_empty() == 0) return out;
    const auto stats = column_stats(col);
    env.min = stats.min;
    env.max = stats.max;
  }

  for (std::size_t k = 0; k < n; ++k) {
    const auto& cell = col.cells[k];
    if (!cell) continue;
    RegionValue rv{k, region.start_s + (static_cast<double>(k) * region.duration_s) /
                                           static_cast<double>(n),
                   std::nullopt};
    if (const auto* token = std::get_if<std::string>(&*cell)) {
      rv.value = ParamValue(recode(*token));
    } else {
      env.x = std::get<double>(*cell);
      env.i = static_cast<double>(k);
      const double y = program->run(env);
      rv.raw = y;
      if (std::isfinite(y)) {
        rv.value = nominal_target ? ParamValue(recode(tokenize(y))) : ParamValue(y);
      }
    }
    out.push_back(std::move(rv));
  }
  return out;
}

}  // namespace

std::string Region::label() const {
  if (!name.empty()) return name;
  return column + "->" + parameter + "@" + format_seconds(start_s);
}

const Dataset* Project::dataset(std::string_view name) const {
  auto it = datasets.find(name);
  return it == datasets.end() ? nullptr : &it->second;
}

const MappingSource* Project::mapping(std::string_view name) const {
  auto it = std::find_if(mappings.begin(), mappings.end(),
                         [&](const MappingSource& m) { return m.name == name; });
  return it == mappings.end() ? nullptr : &*it;
}

const Track* Project::track(std::string_view id) const {
  auto it = std::find_if(tracks.begin(), tracks.end(), [&](const Track& t) { return t.id == id; });
  return it == tracks.end() ? nullptr : &*it;
}

std::string Diagnostic::to_string() const {
  std::string out = severity == Severity::Error ? "error" : "warning";
  if (!track.empty()) out += ": track '" + track + "'";
  if (!region.empty()) out += " region '" + region + "'";
  out += ": " + message;
  return out;
}

std::string tokenize(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::vector<Diagnostic> validate(const Project& project, const SynthRegistry& registry) {
  std::vector<Diagnostic> out;
  auto project_error = [&](std::string msg) {
    out.push_back({Severity::Error, {}, {}, std::move(msg)});
  };

  if (project.version != "1") project_error("unsupported project version '" + project.version + "'");
  if (!(project.transport.sample_rate > 0.0) || !std::isfinite(project.transport.sample_rate)) {
    project_error("transport sample_rate must be positive");
  }
  if (!(project.transport.duration_s >= 0.0) || !std::isfinite(project.transport.duration_s)) {
    project_error("transport duration_s must be finite and >= 0");
  }

  std::set<std::string> mapping_names;
  for (const auto& m : project.mappings) {
    if (!mapping_names.insert(m.name).second) project_error("mapping '" + m.name + "' defined twice");
    try {
      dsl::parse(m.source);
    } catch (const dsl::ParseError& e) {
      project_error("mapping '" + m.name + "' does not parse: " + e.what());
    }
  }

  std::set<std::string> track_ids;
  for (const auto& track : project.tracks) {
    const auto tlabel = track.label();
    auto track_error = [&](std::string msg) {
      out.push_back({Severity::Error, tlabel, {}, std::move(msg)});
    };
    if (!track_ids.insert(track.id).second) track_error("duplicate track id '" + track.id + "'");

    const SynthDefinition* def = registry.find(track.synth);
    if (!def) {
      track_error("unknown synth '" + track.synth + "'");
      continue;
    }
    if (def->name == "granular" || std::any_of(def->parameters.begin(), def->parameters.end(),
                                               [](const auto& d) { return d.names_buffer; })) {
      if (project.buffers.empty()) track_error("synth '" + def->name + "' needs at least one buffer");
    }

    for (std::size_t r = 0; r < track.regions.size(); ++r) {
      const auto& region = track.regions[r];
      const auto rlabel = region.label();
      auto region_error = [&](std::string msg) {
        out.push_back({Severity::Error, tlabel, rlabel, std::move(msg)});
      };
      bool ok = true;
      if (!(region.duration_s > 0.0) || !std::isfinite(region.duration_s)) {
        region_error("duration_s must be > 0");
        ok = false;
      }
      if (!(region.start_s >= 0.0) || !std::isfinite(region.start_s)) {
        region_error("start_s must be >= 0");
        ok = false;
      }
      if (ok && region.end_s() > project.transport.duration_s + 1e-9) {
        region_error("ends at " + format_seconds(region.end_s()) + " s, after the transport end (" +
                     format_seconds(project.transport.duration_s) + " s)");
      }

      const Dataset* data = project.dataset(region.dataset);
      const Column* col = nullptr;
      if (!data) {
        region_error("unknown dataset '" + region.dataset + "'");
        ok = false;
      } else if (col = data->find(region.column); !col) {
        region_error("unknown column '" + region.column + "' in dataset '" + region.dataset + "'");
        ok = false;
      }

      const ParameterDescriptor* target = def->find(region.parameter);
      if (!target) {
        region_error("synth '" + def->name + "' has no parameter '" + region.parameter + "'");
        ok = false;
      } else if (target->kind == ParamKind::Temporal) {
        region_error("parameter '" + region.parameter +
                     "' is temporal and follows the timeline; it cannot be mapped");
        ok = false;
      } else if (col && col->dtype == DataType::Nominal &&
                 target->kind != ParamKind::TimbralNominal) {
        region_error("nominal column '" + region.column + "' cannot drive quantitative parameter '" +
                     region.parameter + "'");
        ok = false;
      }

      if (!region.mapping.empty()) {
        const MappingSource* m = project.mapping(region.mapping);
        if (!m) {
          region_error("unknown mapping '" + region.mapping + "'");
          ok = false;
        } else {
          try {
            dsl::parse(m->source);
          } catch (const dsl::ParseError&) {
            region_error("mapping '" + region.mapping + "' does not parse");
            ok = false;
          }
        }
      }

      for (std::size_t other = 0; other < r; ++other) {
        const auto& o = track.regions[other];
        if (o.parameter != region.parameter) continue;
        if (region.start_s < o.end_s() && o.start_s < region.end_s()) {
          region_error("overlaps region '" + o.label() + "' on parameter '" + region.parameter + "'");
        }
      }

      if (!ok || target->kind != ParamKind::TimbralNominal) continue;
      // Token domain for nominal targets.
      std::set<std::string> bad;
      for (const auto& rv : region_values(project, region, *target)) {
        if (!rv.value) continue;
        const auto& tok = std::get<std::string>(*rv.value);
        const bool allowed =
            target->names_buffer
                ? project.buffers.find(tok) != nullptr
                : target->tokens.empty() ||
                      std::find(target->tokens.begin(), target->tokens.end(), tok) !=
                          target->tokens.end();
        if (!allowed) bad.insert(tok);
      }
      for (const auto& tok : bad) {
        region_error("value '" + tok + "' is not a valid " +
                     (target->names_buffer ? std::string("buffer name") : "token") +
                     " for parameter '" + region.parameter + "'");
      }
    }
  }
  return out;
}

Schedule compile_schedule(const Project& project, const SynthRegistry& registry) {
  Schedule schedule;
  for (const auto& track : project.tracks) {
    const SynthDefinition& def = registry.at(track.synth);
    struct Change {
      double time;
      std::size_t order;
      std::string param;
      ParamValue value;
    };
    std::vector<Change> changes;
    for (const auto& region : track.regions) {
      const ParameterDescriptor& target = *def.find(region.parameter);
      for (auto& rv : region_values(project, region, target)) {
        if (!rv.value) {
          schedule.warnings.push_back(
              {Severity::Warning, track.label(), region.label(),
               "row " + std::to_string(rv.row) + " mapped to non-finite value " +
                   format_seconds(rv.raw) + "; event dropped"});
          continue;
        }
        changes.push_back({rv.time, changes.size(), region.parameter, std::move(*rv.value)});
      }
    }
    std::stable_sort(changes.begin(), changes.end(),
                     [](const Change& a, const Change& b) { return a.time < b.time; });

    TrackSchedule ts{track.id, {}};
    constexpr double kMergeTolerance = 1e-9;
    for (auto& c : changes) {
      if (ts.events.empty() || c.time - ts.events.back().time_s > kMergeTolerance) {
        ts.events.push_back(UpdateEvent{track.id, c.time, {}, 0.0});
      }
      ts.events.back().changes.insert_or_assign(c.param, std::move(c.value));
    }
    for (std::size_t k = 0; k < ts.events.size(); ++k) {
      if (k + 1 < ts.events.size()) {
        ts.events[k].dt_to_next_s = ts.events[k + 1].time_s - ts.events[k].time_s;
      } else if (k > 0) {
        ts.events[k].dt_to_next_s = ts.events[k].time_s - ts.events[k - 1].time_s;
      } else {
        ts.events[k].dt_to_next_s = kSingleEventSpan;
      }
    }
    schedule.tracks.push_back(std::move(ts));
  }
  for (const auto& w : schedule.warnings) log().warn("{}", w.to_string());
  return schedule;
}

RenderResult run_transport(const Project& project, const SynthRegistry& registry,
                           const RenderOptions& options) {
  const auto diagnostics = validate(project, registry);
  if (!diagnostics.empty()) {
    std::string msg = "project has " + std::to_string(diagnostics.size()) + " diagnostic(s)";
    for (const auto& d : diagnostics) msg += "\n  " + d.to_string();
    throw Error(ErrorCode::Validation, msg);
  }
  if (options.solo_track && !project.track(*options.solo_track)) {
    throw Error(ErrorCode::InvalidArgument, "no track with id '" + *options.solo_track + "'");
  }

  const Schedule schedule = compile_schedule(project, registry);
  AudioGraph graph(project.transport.sample_rate, options.block_size);
  RenderResult result;
  result.warnings = schedule.warnings;

  for (std::size_t t = 0; t < project.tracks.size(); ++t) {
    const auto& track = project.tracks[t];
    if (options.solo_track && *options.solo_track != track.id) continue;
    const NodeId bus = graph.create_node(NodeKind::Sum);
    graph.connect(bus, graph.destination());
    SynthInstance instance =
        instantiate(registry.at(track.synth), graph, bus, project.buffers);
    instance.start_all(0.0);
    const auto& events = schedule.tracks[t].events;
    for (const auto& ev : events) {
      std::set<std::string, std::less<>> changed;
      for (const auto& [name, _] : ev.changes) changed.insert(name);
      instance.dispatch_update(changed, ev.changes, ev.time_s, ev.dt_to_next_s);
    }
    instance.stop_all(project.transport.duration_s);
    result.tracks.push_back({track.id, events.size(), instance.total_invocations()});
  }

  result.audio = graph.render_offline(project.transport.duration_s);
  return result;
}

}  // namespace sonir
