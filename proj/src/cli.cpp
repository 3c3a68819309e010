#include "sonir/cli.hpp"

#include <csignal>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sonir/error.hpp"
#include "sonir/log.hpp"
#include "sonir/mapping.hpp"
#include "sonir/project_io.hpp"
#include "sonir/service.hpp"

namespace sonir {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitInternal = 3;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Io:
    case ErrorCode::Format:
    case ErrorCode::EmptyInput:
    case ErrorCode::RaggedRow:
    case ErrorCode::DuplicateHeader:
      return kExitIo;
    case ErrorCode::Validation:
    case ErrorCode::ParseError:
      return kExitValidation;
    default:
      return kExitInternal;
  }
}

Project load_for_cli(const std::string& path, std::optional<double> sample_rate) {
  const std::filesystem::path p(path);
  Json doc;
  try {
    doc = Json::parse(read_text_file(p));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::Format, "project: invalid JSON: " + std::string(e.what()));
  }
  Project project = project_from_json(doc);
  if (sample_rate) project.transport.sample_rate = *sample_rate;
  load_resources(project, p.parent_path());
  return project;
}

bool report(const std::vector<Diagnostic>& diags, std::ostream& err) {
  for (const auto& d : diags) err << d.to_string() << '\n';
  return std::none_of(diags.begin(), diags.end(),
                      [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

Service* g_service = nullptr;

extern "C" void handle_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  configure_logging();

  CLI::App app{"sonir: parameter-mapping sonification engine"};
  app.require_subcommand(1);

  std::string project_path;
  std::string output_path;
  bool float32 = false;
  std::optional<double> sample_rate;
  auto* render = app.add_subcommand("render", "Render a project to a WAV file");
  render->add_option("project", project_path, "Project JSON file")->required();
  render->add_option("-o,--output", output_path, "Output WAV path")->required();
  render->add_flag("--float32", float32, "Write 32-bit float samples instead of PCM16");
  render->add_option("--sample-rate", sample_rate, "Override the transport sample rate")
      ->check(CLI::PositiveNumber);

  auto* validate_cmd = app.add_subcommand("validate", "Check a project for errors");
  validate_cmd->add_option("project", project_path, "Project JSON file")->required();

  std::string csv_path;
  auto* inspect = app.add_subcommand("inspect", "List the columns of a CSV file with N/Q flags");
  inspect->add_option("csv", csv_path, "CSV file")->required();

  std::string expression;
  auto* check = app.add_subcommand("check-mapping", "Parse a mapping expression");
  check->add_option("expr", expression, "Mapping expression")->required();

  auto* synths = app.add_subcommand("synths", "List built-in synths and their parameters");

  int port = 8080;
  std::string project_dir = ".";
  std::string static_dir;
  std::string host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  serve->add_option("--port", port, "Port to listen on")->check(CLI::Range(0, 65535));
  serve->add_option("--project-dir", project_dir, "Directory holding projects and datasets");
  serve->add_option("--static-dir", static_dir, "Directory of UI assets served at /");
  serve->add_option("--host", host, "Interface to bind");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }

  try {
    if (*render) {
      const Project project = load_for_cli(project_path, sample_rate);
      if (!report(validate(project), err)) return kExitValidation;
      const auto bytes = render_wav(project, float32 ? SampleFormat::Float32 : SampleFormat::Pcm16);
      write_file(output_path, bytes);
      out << "wrote " << output_path << " (" << frames_for(project.transport.duration_s,
                                                          project.transport.sample_rate)
          << " frames)\n";
      return kExitOk;
    }
    if (*validate_cmd) {
      const Project project = load_for_cli(project_path, std::nullopt);
      if (!report(validate(project), err)) return kExitValidation;
      out << "ok\n";
      return kExitOk;
    }
    if (*inspect) {
      const Dataset d = load_csv(csv_path);
      out << d.name << ": " << d.rows() << " rows, " << d.columns.size() << " columns\n";
      for (const auto& c : d.columns) out << flag(c.dtype) << "  " << c.name << '\n';
      return kExitOk;
    }
    if (*check) {
      try {
        out << dsl::print(*dsl::parse(expression)) << '\n';
        return kExitOk;
      } catch (const dsl::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
      }
    }
    if (*synths) {
      const auto& registry = SynthRegistry::builtin();
      for (const auto& name : registry.names()) {
        out << name << '\n';
        for (const auto& p : registry.at(name).parameters) {
          out << "  " << p.name << "  " << to_string(p.kind);
          if (!p.tokens.empty()) {
            out << "  {";
            for (std::size_t i = 0; i < p.tokens.size(); ++i) out << (i ? "," : "") << p.tokens[i];
            out << '}';
          }
          if (p.names_buffer) out << "  (buffer name)";
          out << '\n';
        }
      }
      return kExitOk;
    }
    if (*serve) {
      ServiceOptions opts{project_dir, std::nullopt};
      if (!static_dir.empty()) opts.static_dir = static_dir;
      Service service(opts);
      g_service = &service;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      out << "serving " << project_dir << " on http://" << host << ':' << port << std::endl;
      const bool ok = service.listen(host, port);
      g_service = nullptr;
      if (!ok) {
        err << "error: cannot listen on " << host << ':' << port << '\n';
        return kExitIo;
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace sonir
