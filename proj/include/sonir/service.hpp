#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sonir/project.hpp"
#include "sonir/wav.hpp"

namespace httplib {
class Server;
}

namespace sonir {

/// Render a loaded project straight to WAV bytes (stereo, transport rate).
/// Shared by the CLI and the service so both produce identical files.
std::vector<std::uint8_t> render_wav(const Project& project,
                                     SampleFormat format = SampleFormat::Pcm16,
                                     const SynthRegistry& registry = SynthRegistry::builtin());

/// Project files in one directory, with per-project revisions.
///
/// Writes are serialized. A write lands on disk (fsync + rename) before the
/// revision is bumped, and every accepted write bumps it exactly once.
class ProjectStore {
public:
  explicit ProjectStore(std::filesystem::path dir);

  struct Snapshot {
    std::string text;
    std::uint64_t revision;
  };

  class Conflict : public std::runtime_error {
  public:
    Conflict(std::uint64_t current)
        : std::runtime_error("revision conflict"), current_revision(current) {}
    std::uint64_t current_revision;
  };

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::vector<std::pair<std::string, std::uint64_t>> list();
  std::optional<Snapshot> get(const std::string& name);

  /// Throws Conflict when expected_revision is given and stale.
  std::uint64_t put(const std::string& name, const std::string& text,
                    std::optional<std::uint64_t> expected_revision);

  static bool valid_name(const std::string& name);

private:
  std::filesystem::path path_for(const std::string& name) const;

  std::filesystem::path dir_;
  std::mutex mutex_;
  std::map<std::string, Snapshot> cache_;
};

struct ServiceOptions {
  std::filesystem::path project_dir;
  std::optional<std::filesystem::path> static_dir;
};

/// HTTP front end over a ProjectStore. All endpoints live under /api.
class Service {
public:
  explicit Service(ServiceOptions options);
  ~Service();

  /// Binds and serves until stop(). Returns false if the port is unavailable.
  bool listen(const std::string& host, int port);
  /// Binds to a free port and returns it; call run() to serve.
  int bind_any(const std::string& host);
  bool run();
  void stop();
  void wait_until_ready() const;

  ProjectStore& store() noexcept { return store_; }

private:
  void install_routes();

  ServiceOptions options_;
  ProjectStore store_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace sonir
