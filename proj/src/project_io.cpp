#include "sonir/project_io.hpp"

#include <fstream>
#include <sstream>

#include "sonir/error.hpp"
#include "sonir/wav.hpp"

namespace sonir {

namespace {

[[noreturn]] void format_error(const std::string& what) {
  throw Error(ErrorCode::Format, "project: " + what);
}

template <typename T>
T get_or(const Json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    format_error(std::string("field '") + key + "' has the wrong type");
  }
}

std::vector<ResourceRef> refs_from(const Json& node, const char* what) {
  std::vector<ResourceRef> out;
  if (node.is_null()) return out;
  if (node.is_object()) {
    for (const auto& [name, path] : node.items()) {
      if (!path.is_string()) format_error(std::string(what) + " '" + name + "' path must be a string");
      out.push_back({name, path.get<std::string>()});
    }
    return out;
  }
  if (!node.is_array()) format_error(std::string(what) + " must be an array or object");
  for (const auto& item : node) {
    if (item.is_string()) {
      const auto path = item.get<std::string>();
      out.push_back({std::filesystem::path(path).filename().string(), path});
    } else if (item.is_object() && item.contains("path")) {
      const auto path = get_or<std::string>(item, "path", "");
      auto name = get_or<std::string>(item, "name", "");
      if (name.empty()) name = std::filesystem::path(path).filename().string();
      out.push_back({name, path});
    } else {
      format_error(std::string(what) + " entries need a path");
    }
  }
  return out;
}

}  // namespace

Project project_from_json(const Json& doc) {
  if (!doc.is_object()) format_error("document must be a JSON object");
  Project p;
  auto version = doc.find("version");
  if (version == doc.end()) format_error("missing 'version'");
  if (version->is_string()) {
    p.version = version->get<std::string>();
  } else if (version->is_number_integer()) {
    p.version = std::to_string(version->get<long long>());
  } else {
    format_error("'version' must be a string");
  }

  if (auto t = doc.find("transport"); t != doc.end()) {
    if (!t->is_object()) format_error("'transport' must be an object");
    p.transport.duration_s = get_or<double>(*t, "duration_s", p.transport.duration_s);
    p.transport.sample_rate = get_or<double>(*t, "sample_rate", p.transport.sample_rate);
  }
  p.dataset_refs = refs_from(doc.value("datasets", Json()), "dataset");
  p.buffer_refs = refs_from(doc.value("buffers", Json()), "buffer");

  std::map<std::string, std::string> synths;
  if (auto s = doc.find("synths"); s != doc.end() && !s->is_null()) {
    if (!s->is_object()) format_error("'synths' must map track ids to synth names");
    for (const auto& [id, name] : s->items()) {
      if (!name.is_string()) format_error("synth for track '" + id + "' must be a string");
      synths[id] = name.get<std::string>();
    }
  }

  if (auto m = doc.find("mappings"); m != doc.end() && !m->is_null()) {
    if (!m->is_array()) format_error("'mappings' must be an array");
    for (const auto& item : *m) {
      if (!item.is_object()) format_error("mapping entries must be objects");
      MappingSource ms;
      ms.name = get_or<std::string>(item, "name", "");
      ms.source = get_or<std::string>(item, "source", "x");
      if (auto r = item.find("recode"); r != item.end() && !r->is_null()) {
        if (!r->is_object()) format_error("mapping '" + ms.name + "' recode must be an object");
        for (const auto& [from, to] : r->items()) {
          if (!to.is_string()) format_error("recode values must be strings");
          ms.recode[from] = to.get<std::string>();
        }
      }
      if (ms.name.empty()) format_error("mapping without a name");
      p.mappings.push_back(std::move(ms));
    }
  }

  if (auto tracks = doc.find("tracks"); tracks != doc.end() && !tracks->is_null()) {
    if (!tracks->is_array()) format_error("'tracks' must be an array");
    for (const auto& item : *tracks) {
      if (!item.is_object()) format_error("track entries must be objects");
      Track t;
      t.id = get_or<std::string>(item, "id", "");
      if (t.id.empty()) format_error("track without an id");
      t.name = get_or<std::string>(item, "name", t.id);
      t.synth = get_or<std::string>(item, "synth", "");
      if (auto s = synths.find(t.id); s != synths.end()) {
        if (!t.synth.empty() && t.synth != s->second) {
          format_error("track '" + t.id + "' names synth '" + t.synth + "' but 'synths' says '" +
                       s->second + "'");
        }
        t.synth = s->second;
      }
      if (auto regions = item.find("regions"); regions != item.end() && !regions->is_null()) {
        if (!regions->is_array()) format_error("track '" + t.id + "' regions must be an array");
        for (const auto& r : *regions) {
          if (!r.is_object()) format_error("region entries must be objects");
          Region region;
          region.name = get_or<std::string>(r, "name", "");
          region.dataset = get_or<std::string>(r, "dataset", "");
          region.column = get_or<std::string>(r, "column", "");
          region.parameter = get_or<std::string>(r, "parameter", "");
          region.start_s = get_or<double>(r, "start_s", 0.0);
          region.duration_s = get_or<double>(r, "duration_s", 1.0);
          region.mapping = get_or<std::string>(r, "mapping", "");
          t.regions.push_back(std::move(region));
        }
      }
      p.tracks.push_back(std::move(t));
    }
  }
  return p;
}

Json project_to_json(const Project& p) {
  Json doc;
  doc["version"] = p.version;
  doc["transport"] = {{"duration_s", p.transport.duration_s},
                      {"sample_rate", p.transport.sample_rate}};
  Json datasets = Json::array();
  for (const auto& d : p.dataset_refs) datasets.push_back({{"name", d.name}, {"path", d.path}});
  doc["datasets"] = datasets;
  Json buffers = Json::object();
  for (const auto& b : p.buffer_refs) buffers[b.name] = b.path;
  doc["buffers"] = buffers;
  Json synths = Json::object();
  for (const auto& t : p.tracks) synths[t.id] = t.synth;
  doc["synths"] = synths;
  Json tracks = Json::array();
  for (const auto& t : p.tracks) {
    Json regions = Json::array();
    for (const auto& r : t.regions) {
      Json jr;
      if (!r.name.empty()) jr["name"] = r.name;
      jr["dataset"] = r.dataset;
      jr["column"] = r.column;
      jr["parameter"] = r.parameter;
      jr["start_s"] = r.start_s;
      jr["duration_s"] = r.duration_s;
      if (!r.mapping.empty()) jr["mapping"] = r.mapping;
      regions.push_back(std::move(jr));
    }
    tracks.push_back({{"id", t.id}, {"name", t.name}, {"regions", regions}});
  }
  doc["tracks"] = tracks;
  Json mappings = Json::array();
  for (const auto& m : p.mappings) {
    Json jm{{"name", m.name}, {"source", m.source}};
    if (!m.recode.empty()) {
      Json recode = Json::object();
      for (const auto& [from, to] : m.recode) recode[from] = to;
      jm["recode"] = recode;
    }
    mappings.push_back(std::move(jm));
  }
  doc["mappings"] = mappings;
  return doc;
}

void load_resources(Project& project, const std::filesystem::path& base_dir) {
  project.datasets.clear();
  project.buffers = BufferSet{};
  for (const auto& ref : project.dataset_refs) {
    const auto path = (base_dir / ref.path).string();
    Dataset d = parse_csv(read_text_file(path), ref.name);
    project.datasets.insert_or_assign(ref.name, std::move(d));
  }
  const double rate = project.transport.sample_rate > 0.0 ? project.transport.sample_rate : 44100.0;
  for (const auto& ref : project.buffer_refs) {
    auto buffer = load_wav((base_dir / ref.path).string());
    project.buffers.add(ref.name,
                        std::make_shared<const AudioBuffer>(resample_linear(buffer, rate)));
  }
}

Project parse_project(std::string_view text, const std::filesystem::path& base_dir) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    format_error(std::string("invalid JSON: ") + e.what());
  }
  Project p = project_from_json(doc);
  load_resources(p, base_dir);
  return p;
}

Project load_project(const std::filesystem::path& path) {
  return parse_project(read_text_file(path), path.parent_path());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sonir
