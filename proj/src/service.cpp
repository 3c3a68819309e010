#include "sonir/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <regex>

#include <httplib.h>

#include "sonir/error.hpp"
#include "sonir/log.hpp"
#include "sonir/mapping.hpp"
#include "sonir/project_io.hpp"

namespace sonir {

namespace {

void durable_write(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw Error(ErrorCode::Io, "cannot write '" + tmp + "'");
  std::size_t written = 0;
  while (written < text.size()) {
    const auto n = ::write(fd, text.data() + written, text.size() - written);
    if (n <= 0) {
      ::close(fd);
      throw Error(ErrorCode::Io, "short write to '" + tmp + "'");
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    throw Error(ErrorCode::Io, "fsync failed for '" + tmp + "'");
  }
  ::close(fd);
  std::filesystem::rename(tmp, path);
}

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, Json{{"error", message}});
}

Json diagnostics_json(const std::vector<Diagnostic>& diags) {
  Json out = Json::array();
  for (const auto& d : diags) {
    out.push_back({{"severity", d.severity == Severity::Error ? "error" : "warning"},
                   {"track", d.track},
                   {"region", d.region},
                   {"message", d.message}});
  }
  return out;
}

Json dataset_json(const Dataset& d) {
  Json cols = Json::array();
  for (const auto& c : d.columns) {
    cols.push_back({{"name", c.name}, {"dtype", std::string(1, flag(c.dtype))}});
  }
  return Json{{"name", d.name}, {"rows", d.rows()}, {"columns", cols}};
}

Json synths_json(const SynthRegistry& registry) {
  Json out = Json::array();
  for (const auto& name : registry.names()) {
    const auto& def = registry.at(name);
    Json params = Json::array();
    for (const auto& p : def.parameters) {
      Json jp{{"name", p.name}, {"kind", std::string(to_string(p.kind))}};
      if (!p.tokens.empty()) jp["tokens"] = p.tokens;
      if (p.names_buffer) jp["names_buffer"] = true;
      params.push_back(std::move(jp));
    }
    out.push_back({{"name", name}, {"parameters", params}});
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> render_wav(const Project& project, SampleFormat format,
                                     const SynthRegistry& registry) {
  const auto result = run_transport(project, registry);
  return encode_wav(result.audio, WavSpec{project.transport.sample_rate, 2, format});
}

ProjectStore::ProjectStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

bool ProjectStore::valid_name(const std::string& name) {
  static const std::regex re("[A-Za-z0-9_][A-Za-z0-9_.-]{0,127}");
  return std::regex_match(name, re) && name.find("..") == std::string::npos;
}

std::filesystem::path ProjectStore::path_for(const std::string& name) const {
  return dir_ / (name + ".json");
}

std::vector<std::pair<std::string, std::uint64_t>> ProjectStore::list() {
  std::lock_guard lock(mutex_);
  std::vector<std::pair<std::string, std::uint64_t>> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    const auto name = entry.path().stem().string();
    auto it = cache_.find(name);
    out.emplace_back(name, it == cache_.end() ? 1 : it->second.revision);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<ProjectStore::Snapshot> ProjectStore::get(const std::string& name) {
  std::lock_guard lock(mutex_);
  if (auto it = cache_.find(name); it != cache_.end()) return it->second;
  const auto path = path_for(name);
  if (!std::filesystem::is_regular_file(path)) return std::nullopt;
  Snapshot snap{read_text_file(path), 1};
  cache_.emplace(name, snap);
  return snap;
}

std::uint64_t ProjectStore::put(const std::string& name, const std::string& text,
                                std::optional<std::uint64_t> expected_revision) {
  std::lock_guard lock(mutex_);
  std::uint64_t current = 0;
  if (auto it = cache_.find(name); it != cache_.end()) {
    current = it->second.revision;
  } else if (std::filesystem::is_regular_file(path_for(name))) {
    current = 1;
  }
  if (expected_revision && *expected_revision != current) throw Conflict(current);
  durable_write(path_for(name), text);
  const auto revision = current + 1;
  cache_.insert_or_assign(name, Snapshot{text, revision});
  return revision;
}

Service::Service(ServiceOptions options)
    : options_(std::move(options)),
      store_(options_.project_dir),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

Service::~Service() { stop(); }

void Service::install_routes() {
  auto& srv = *server_;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Methods", "GET, PUT, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers",
                            "Content-Type, If-Match, X-Project-Revision"},
                           {"Access-Control-Expose-Headers", "X-Render-Revision, X-Project-Revision"}});
  srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                               std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      if (ep) std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    log().error("request failed: {}", what);
    send_error(res, 500, what);
  });

  srv.Get("/api/synths", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, synths_json(SynthRegistry::builtin()));
  });

  srv.Get("/api/projects", [this](const httplib::Request&, httplib::Response& res) {
    Json out = Json::array();
    for (const auto& [name, rev] : store_.list()) out.push_back({{"name", name}, {"revision", rev}});
    send_json(res, 200, out);
  });

  srv.Get(R"(/api/projects/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string name = req.matches[1];
    if (!ProjectStore::valid_name(name)) return send_error(res, 404, "unknown project");
    const auto snap = store_.get(name);
    if (!snap) return send_error(res, 404, "unknown project '" + name + "'");
    Json doc;
    try {
      doc = Json::parse(snap->text);
    } catch (const Json::parse_error&) {
      return send_error(res, 500, "stored project '" + name + "' is not valid JSON");
    }
    res.set_header("X-Project-Revision", std::to_string(snap->revision));
    send_json(res, 200, Json{{"name", name}, {"revision", snap->revision}, {"project", doc}});
  });

  srv.Put(R"(/api/projects/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string name = req.matches[1];
    if (!ProjectStore::valid_name(name)) return send_error(res, 404, "invalid project name");
    std::optional<std::uint64_t> expected;
    for (const char* header : {"X-Project-Revision", "If-Match"}) {
      if (!req.has_header(header)) continue;
      auto value = req.get_header_value(header);
      value.erase(std::remove(value.begin(), value.end(), '"'), value.end());
      try {
        expected = std::stoull(value);
      } catch (const std::exception&) {
        return send_error(res, 422, std::string("malformed ") + header + " header");
      }
    }
    std::vector<Diagnostic> diags;
    try {
      const Project p = parse_project(req.body, store_.dir());
      diags = validate(p);
    } catch (const Error& e) {
      diags.push_back({Severity::Error, {}, {}, e.what()});
    }
    if (!diags.empty()) {
      return send_json(res, 422, Json{{"error", "validation failed"},
                                      {"diagnostics", diagnostics_json(diags)}});
    }
    try {
      const auto revision = store_.put(name, req.body, expected);
      res.set_header("X-Project-Revision", std::to_string(revision));
      send_json(res, 200, Json{{"name", name}, {"revision", revision}});
    } catch (const ProjectStore::Conflict& c) {
      send_json(res, 409, Json{{"error", "revision conflict"}, {"revision", c.current_revision}});
    }
  });

  srv.Get("/api/datasets", [this](const httplib::Request&, httplib::Response& res) {
    Json out = Json::array();
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(store_.dir())) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      try {
        out.push_back(dataset_json(load_csv(f.string())));
      } catch (const Error& e) {
        out.push_back({{"name", f.filename().string()}, {"error", e.what()}});
      }
    }
    send_json(res, 200, out);
  });

  srv.Get(R"(/api/datasets/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string name = req.matches[1];
    const auto path = store_.dir() / name;
    if (!ProjectStore::valid_name(name) || !std::filesystem::is_regular_file(path)) {
      return send_error(res, 404, "unknown dataset '" + name + "'");
    }
    try {
      send_json(res, 200, dataset_json(load_csv(path.string())));
    } catch (const Error& e) {
      send_error(res, 422, e.what());
    }
  });

  srv.Post("/api/datasets", [this](const httplib::Request& req, httplib::Response& res) {
    if (!req.is_multipart_form_data() || !req.has_file("file")) {
      return send_error(res, 422, "expected multipart form data with a 'file' part");
    }
    const auto file = req.get_file_value("file");
    std::string name = std::filesystem::path(file.filename).filename().string();
    if (name.empty()) name = "upload.csv";
    if (!ProjectStore::valid_name(name)) return send_error(res, 422, "invalid dataset file name");
    try {
      const Dataset d = parse_csv(file.content, name);
      durable_write(store_.dir() / name, file.content);
      send_json(res, 201, dataset_json(d));
    } catch (const Error& e) {
      send_error(res, 422, e.what());
    }
  });

  srv.Post("/api/mappings/check", [](const httplib::Request& req, httplib::Response& res) {
    Json body;
    try {
      body = Json::parse(req.body);
    } catch (const Json::parse_error&) {
      return send_error(res, 422, "body must be JSON with a 'source' string");
    }
    if (!body.is_object() || !body.contains("source") || !body["source"].is_string()) {
      return send_error(res, 422, "body must be JSON with a 'source' string");
    }
    try {
      const auto expr = dsl::parse(body["source"].get<std::string>());
      send_json(res, 200, Json{{"ok", true}, {"canonical", dsl::print(*expr)}});
    } catch (const dsl::ParseError& e) {
      send_json(res, 200, Json{{"ok", false},
                               {"error", e.detail()},
                               {"line", e.line()},
                               {"column", e.column()}});
    }
  });

  srv.Post("/api/render", [this](const httplib::Request& req, httplib::Response& res) {
    std::string name;
    try {
      const auto body = Json::parse(req.body);
      if (body.is_string()) name = body.get<std::string>();
      else name = body.at("project").get<std::string>();
    } catch (const Json::exception&) {
      return send_error(res, 422, "body must be JSON {\"project\": name}");
    }
    if (!ProjectStore::valid_name(name)) return send_error(res, 404, "unknown project");
    const auto snap = store_.get(name);
    if (!snap) return send_error(res, 404, "unknown project '" + name + "'");
    Project project;
    try {
      project = parse_project(snap->text, store_.dir());
    } catch (const Error& e) {
      return send_json(res, 422, Json{{"error", "validation failed"},
                                      {"diagnostics", diagnostics_json({{Severity::Error, {}, {},
                                                                         e.what()}})}});
    }
    const auto diags = validate(project);
    if (!diags.empty()) {
      return send_json(res, 422, Json{{"error", "validation failed"},
                                      {"diagnostics", diagnostics_json(diags)}});
    }
    const auto bytes = render_wav(project, SampleFormat::Pcm16);
    res.set_header("X-Render-Revision", std::to_string(snap->revision));
    res.status = 200;
    res.set_content(std::string(bytes.begin(), bytes.end()), "audio/wav");
  });

  if (options_.static_dir && std::filesystem::is_directory(*options_.static_dir)) {
    srv.set_mount_point("/", options_.static_dir->string());
  }
}

bool Service::listen(const std::string& host, int port) { return server_->listen(host, port); }

int Service::bind_any(const std::string& host) { return server_->bind_to_any_port(host); }

bool Service::run() { return server_->listen_after_bind(); }

void Service::stop() {
  if (server_) server_->stop();
}

void Service::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace sonir
