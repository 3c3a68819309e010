// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "dsl_cases.hpp"
#include "oracles.hpp"
#include "spectrum.hpp"
#include "sonir/builtin_synths.hpp"
#include "sonir/log.hpp"
#include "sonir/project_io.hpp"
#include "sonir/service.hpp"
#include "sonir/wav.hpp"

using namespace sonir;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = SONIR_FIXTURES_DIR;
constexpr double kSr = 44100.0;

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail.clear();
    pass = false;
    detail += (detail.empty() ? "" : "; ") + why;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

AudioBuffer render_fm(double p4, double p5, double p6, double index, double seconds) {
  AudioGraph g(kSr);
  auto inst = instantiate(fm_definition(), g, g.destination());
  inst.start_all(0.0);
  inst.dispatch_update({"p4", "p5", "p6", "p7", "p8"},
                       {{"p4", p4}, {"p5", p5}, {"p6", p6}, {"p7", index}, {"p8", index}}, 0.0,
                       seconds);
  inst.stop_all(seconds);
  return g.render_offline(seconds);
}

// 1: sideband placement and Bessel magnitude ratios for I = 2.
Outcome fm_bessel() {
  Outcome o;
  const auto t0 = Clock::now();
  const double fc = 440.0, fm = 110.0, index = 2.0;
  const auto audio = render_fm(0.8, fc, fm, index, 2.0);
  const auto mag = test::magnitude_spectrum(audio.channel(0), test::Window::Hann);
  const std::size_t n = audio.frames();
  const double bin = test::bin_hz(n, kSr);

  // Peaks: local maxima above -40 dB of the strongest component.
  double top = 0.0;
  for (double v : mag) top = std::max(top, v);
  std::size_t peaks = 0;
  for (std::size_t b = 1; b + 1 < mag.size(); ++b) {
    if (mag[b] < 0.01 * top || mag[b] < mag[b - 1] || mag[b] < mag[b + 1]) continue;
    ++peaks;
    const double hz = static_cast<double>(b) * bin;
    const double k = std::round((hz - fc) / fm);
    if (std::abs(hz - (fc + k * fm)) > bin) o.fail("stray peak at " + fmt(hz) + " Hz");
  }

  const double carrier = test::peak_near(mag, test::bin_of(fc, n, kSr), 1);
  const double j0 = std::abs(test::bessel_j(0, index));
  double worst = 0.0;
  for (int k = 1; k <= 3; ++k) {
    const double want = std::abs(test::bessel_j(k, index)) / j0;
    for (int side : {-1, 1}) {
      const double hz = fc + side * k * fm;
      const double got = test::peak_near(mag, test::bin_of(hz, n, kSr), 1) / carrier;
      worst = std::max(worst, std::abs(got - want));
      if (std::abs(got - want) > 0.1) {
        o.fail("k=" + std::to_string(side * k) + " ratio " + fmt(got) + " vs " + fmt(want));
      }
    }
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= 5.0) o.fail("runtime " + fmt(elapsed) + " s");
  if (o.pass) {
    o.detail = std::to_string(peaks) + " peaks on the 440+k*110 grid, worst |ratio error| " +
               fmt(worst, 3) + ", " + fmt(elapsed, 3) + " s";
  }
  return o;
}

// 2: zero index is a pure carrier.
Outcome fm_purity() {
  Outcome o;
  const auto audio = render_fm(0.8, 440.0, 110.0, 0.0, 2.0);
  const auto mag = test::magnitude_spectrum(audio.channel(0), test::Window::Hann);
  const double frac =
      test::energy_fraction_near(mag, test::bin_of(440.0, audio.frames(), kSr), 1);
  if (frac <= 0.99) o.fail("energy fraction " + fmt(frac, 6));
  else o.detail = "energy within +-1 bin of 440 Hz: " + fmt(frac * 100.0, 6) + "%";
  return o;
}

// 3: formant peaks near each vowel's centers, and they move with the vowel.
Outcome formant_vowels() {
  Outcome o;
  const auto t0 = Clock::now();
  std::vector<std::vector<double>> matched;
  std::string detail;
  for (const char* vowel : {"0", "1", "2"}) {
    AudioGraph g(kSr);
    auto inst = instantiate(formant_definition(), g, g.destination());
    inst.start_all(0.0);
    inst.dispatch_update({"Frequency", "Vowel"},
                         {{"Frequency", 110.0}, {"Vowel", std::string(vowel)}}, 0.0, 1.0);
    inst.stop_all(1.0);
    const auto audio = g.render_offline(1.0);
    const auto mag = test::magnitude_spectrum(audio.channel(0), test::Window::Hann);
    const auto peaks = test::harmonic_envelope_peaks(mag, audio.frames(), kSr, 110.0, 4000.0);
    std::vector<double> found;
    for (const auto& f : *vowel_formants(vowel)) {
      double best = -1.0;
      for (double p : peaks) {
        if (std::abs(p - f.center_hz) <= 60.0 &&
            (best < 0.0 || std::abs(p - f.center_hz) < std::abs(best - f.center_hz))) {
          best = p;
        }
      }
      if (best < 0.0) {
        o.fail(std::string("vowel ") + vowel + ": no maximum near " + fmt(f.center_hz) + " Hz");
      } else {
        found.push_back(best);
      }
    }
    detail += std::string(detail.empty() ? "" : ", ") + vowel + ":";
    for (double f : found) detail += " " + fmt(f, 4);
    matched.push_back(found);
  }
  if (matched[0] == matched[1] || matched[1] == matched[2] || matched[0] == matched[2]) {
    o.fail("maxima do not differ across vowels");
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= 5.0) o.fail("runtime " + fmt(elapsed) + " s");
  if (o.pass) o.detail = "maxima (Hz) " + detail + ", " + fmt(elapsed, 3) + " s";
  return o;
}

struct GrainArgs {
  double time, position, duration, rate, gain;
};

AudioBuffer render_grains(const std::shared_ptr<const AudioBuffer>& source,
                          const std::vector<GrainArgs>& grains, double seconds) {
  AudioGraph g(kSr);
  BufferSet buffers;
  buffers.add("src", source);
  auto inst = instantiate(granular_definition(), g, g.destination(), buffers);
  inst.start_all(0.0);
  for (const auto& gr : grains) {
    inst.dispatch_update({"buffer", "rate", "position", "gain", "duration"},
                         {{"buffer", std::string("src")},
                          {"rate", gr.rate},
                          {"position", gr.position},
                          {"gain", gr.gain},
                          {"duration", gr.duration}},
                         gr.time, 0.0);
  }
  inst.stop_all(seconds);
  return g.render_offline(seconds);
}

// 4: sample-exact single grain; linear overlap.
Outcome granular() {
  Outcome o;
  const auto source = std::make_shared<const AudioBuffer>(
      resample_linear(load_wav((kFixtures / "grain_source.wav").string()), kSr));
  const auto src = source->channel(0);

  const double time = 0.3, position = 0.5, duration = 0.2;
  const auto one = render_grains(source, {{time, position, duration, 1.0, 1.0}}, 1.0);
  const auto start = static_cast<std::size_t>(frame_at(time, kSr));
  const auto len = static_cast<std::size_t>(frame_at(duration, kSr));
  const auto pos = static_cast<std::size_t>(frame_at(position, kSr));
  std::size_t mismatches = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t k = 0; k < one.frames(); ++k) {
      const float want = (k >= start && k < start + len) ? src[pos + k - start] : 0.0f;
      mismatches += one.channel(c)[k] != want;
    }
  }
  if (mismatches) o.fail(std::to_string(mismatches) + " samples differ from the source slice");

  const GrainArgs a{0.1, 0.2, 0.4, 1.0, 0.6}, b{0.3, 0.7, 0.4, 1.25, 0.5};
  const auto both = render_grains(source, {a, b}, 1.0);
  const auto only_a = render_grains(source, {a}, 1.0);
  const auto only_b = render_grains(source, {b}, 1.0);
  double worst = 0.0;
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t k = 0; k < both.frames(); ++k)
      worst = std::max(worst, std::abs(static_cast<double>(both.channel(c)[k]) -
                                       (static_cast<double>(only_a.channel(c)[k]) + only_b.channel(c)[k])));
  if (worst > 1e-6) o.fail("overlap error " + fmt(worst));
  if (o.pass) {
    o.detail = std::to_string(len) + "-frame grain exact, overlap max error " + fmt(worst, 3);
  }
  return o;
}

// 5: two regions changing two parameters of one binding fire it once per timestamp.
Outcome coalescing() {
  Outcome o;
  Project p;
  p.transport.duration_s = 8.0;
  p.dataset_refs.push_back({"coral_data.csv", "coral_data.csv"});
  load_resources(p, kFixtures);
  Region r7{"index start", "coral_data.csv", "temperature_c", "p7", 0.0, 8.0, ""};
  Region r8{"index end", "coral_data.csv", "depth_m", "p8", 0.0, 8.0, ""};
  p.tracks.push_back({"t", "FM", "fm", {r7, r8}});

  const auto schedule = compile_schedule(p);
  std::size_t shared = 0;
  for (const auto& ev : schedule.tracks[0].events) shared += ev.changes.size() == 2;

  // Replay the schedule through a fresh instance: only one binding reads p7 or p8.
  AudioGraph g(kSr);
  auto inst = instantiate(fm_definition(), g, g.destination());
  std::size_t per_event_bad = 0, fired = 0;
  for (const auto& ev : schedule.tracks[0].events) {
    std::set<std::string, std::less<>> changed;
    for (const auto& [name, _] : ev.changes) changed.insert(name);
    const auto n = inst.dispatch_update(changed, ev.changes, ev.time_s, ev.dt_to_next_s);
    fired += n;
    per_event_bad += n != 1;
  }
  const auto events = schedule.tracks[0].events.size();
  const auto report = run_transport(p);
  if (per_event_bad) o.fail(std::to_string(per_event_bad) + " timestamps fired the binding != 1 times");
  if (shared != events) o.fail("only " + std::to_string(shared) + " of " + std::to_string(events) + " events merged");
  if (report.tracks[0].invocations != events) {
    o.fail("transport reported " + std::to_string(report.tracks[0].invocations) + " invocations");
  }
  if (o.pass) {
    o.detail = std::to_string(events) + " timestamps, " + std::to_string(fired) +
               " invocations of the shared binding";
  }
  return o;
}

// 6: four rows over [0, 2).
Outcome spacing() {
  Outcome o;
  Project p;
  p.transport.duration_s = 2.0;
  p.dataset_refs.push_back({"d", "d.csv"});
  p.datasets.emplace("d", parse_csv("v\n1\n2\n3\n4\n", "d"));
  p.tracks.push_back({"t", "", "fm", {Region{"r", "d", "v", "p5", 0.0, 2.0, ""}}});
  std::vector<double> times;
  for (const auto& ev : compile_schedule(p).tracks[0].events) times.push_back(ev.time_s);
  const std::vector<double> want{0.0, 0.5, 1.0, 1.5};
  std::string text;
  for (double t : times) text += (text.empty() ? "" : ", ") + fmt(t, 17);
  if (times != want) o.fail("times " + text);
  else o.detail = "events at " + text;
  return o;
}

// 7: rendered gain automation against the analytic piecewise-linear value.
Outcome automation() {
  Outcome o;
  std::mt19937_64 rng(0xA11CE);
  std::uniform_real_distribution<double> time(0.0, 0.045), value(-1.0, 1.0);
  const double seconds = 0.05;
  const auto frames = static_cast<std::size_t>(frames_for(seconds, kSr));
  auto dc = std::make_shared<AudioBuffer>(kSr, 1, frames);
  for (auto& s : dc->channel(0)) s = 1.0f;
  double worst = 0.0;
  std::size_t total_events = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    AudioGraph g(kSr);
    const auto src = g.create_node(NodeKind::BufferSource);
    g.set_buffer(src, dc);
    const double base = value(rng);
    const auto gain = g.create_node(NodeKind::Gain, {{"gain", base}});
    g.connect(src, gain);
    g.connect(gain, g.destination());
    std::vector<AutomationEvent> inserted;
    const int count = 1 + static_cast<int>(rng() % 10);
    for (int k = 0; k < count; ++k) {
      const AutomationEvent e{rng() % 2 ? AutomationKind::LinearRampToValueAtTime
                                        : AutomationKind::SetValueAtTime,
                              time(rng), value(rng)};
      try {
        g.schedule_param(gain, "gain", e);
        inserted.push_back(e);
      } catch (const Error&) {
      }
    }
    total_events += inserted.size();
    const auto out = g.render_offline(seconds);
    for (std::size_t k = 0; k < frames; ++k) {
      const double want = test::automation_oracle(base, inserted, static_cast<double>(k) / kSr);
      worst = std::max(worst, std::abs(out.channel(0)[k] - want));
    }
  }
  if (worst > 1e-6) o.fail("max error " + fmt(worst));
  else o.detail = "1000 lists (" + std::to_string(total_events) + " events), max error " + fmt(worst, 3);
  return o;
}

// 8: byte-identical renders; multi-track equals the sum of solos.
Outcome determinism() {
  Outcome o;
  const auto fm = load_project(kFixtures / "fm_demo.json");
  const auto a = render_wav(fm), b = render_wav(fm);
  if (a != b) o.fail("repeated renders differ");

  const auto project = load_project(kFixtures / "granular_demo.json");
  if (project.tracks.size() < 2) o.fail("fixture needs two tracks");
  const auto full = run_transport(project).audio;
  std::vector<AudioBuffer> solos;
  for (const auto& t : project.tracks) {
    RenderOptions opt;
    opt.solo_track = t.id;
    solos.push_back(run_transport(project, SynthRegistry::builtin(), opt).audio);
  }
  double worst = 0.0;
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t k = 0; k < full.frames(); ++k) {
      double sum = 0.0;
      for (const auto& s : solos) sum += s.channel(c)[k];
      worst = std::max(worst, std::abs(full.channel(c)[k] - sum));
    }
  }
  if (worst > 1e-6) o.fail("additivity error " + fmt(worst));
  if (o.pass) {
    o.detail = std::to_string(a.size()) + " identical bytes; " + std::to_string(solos.size()) +
               "-track sum error " + fmt(worst, 3);
  }
  return o;
}

bool within_one_ulp(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  if (a == b) return true;
  return std::nextafter(std::min(a, b), INFINITY) >= std::max(a, b);
}

// 9: golden suite, stack machine against tree walk, print/parse fixpoint.
Outcome dsl_suite() {
  Outcome o;
  const auto env = test::golden_env();
  const auto cases = test::golden_dsl_cases();
  std::size_t errors = 0;
  for (const auto& c : cases) {
    try {
      const auto e = dsl::parse(c.source);
      if (!c.value) {
        o.fail("'" + c.source + "' parsed but should fail");
        continue;
      }
      const double got = dsl::eval(*e, env);
      const bool ok = std::isinf(*c.value) ? got == *c.value
                                           : std::abs(got - *c.value) <= 1e-12 * std::max(1.0, std::abs(*c.value));
      if (!ok) o.fail("'" + c.source + "' = " + fmt(got, 17));
      if (!(*dsl::parse(dsl::print(*e)) == *e)) o.fail("'" + c.source + "' is not a print/parse fixpoint");
    } catch (const dsl::ParseError& err) {
      ++errors;
      if (c.value) o.fail("'" + c.source + "' failed: " + err.what());
      else if (err.column() != c.error_column) o.fail("'" + c.source + "' error column " + std::to_string(err.column()));
    }
  }
  if (cases.size() < 30) o.fail("golden suite too small");

  std::mt19937_64 rng(0xD51);
  std::size_t ulp_bad = 0, fix_bad = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto e = test::random_expr(rng, 6);
    const auto env_k = test::random_env(rng);
    if (!within_one_ulp(dsl::Program(*e).run(env_k), test::tree_walk(*e, env_k))) ++ulp_bad;
    const auto text = dsl::print(*e);
    const auto again = dsl::parse(text);
    if (!(*again == *e) || dsl::print(*again) != text) ++fix_bad;
  }
  if (ulp_bad) o.fail(std::to_string(ulp_bad) + " random expressions disagree with the tree walk");
  if (fix_bad) o.fail(std::to_string(fix_bad) + " random expressions are not fixpoints");
  if (o.pass) {
    o.detail = std::to_string(cases.size()) + " golden cases (" + std::to_string(errors) +
               " errors), 1000 random expressions within 1 ulp and fixpoint";
  }
  return o;
}

struct Proc {
  int code;
  std::string out;
};

Proc run_cli(const std::string& args) {
  const std::string cmd = std::string(SONIR_CLI_PATH) + " " + args + " 2>&1";
  Proc p{-1, {}};
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return p;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) p.out += buf.data();
  const int status = pclose(pipe);
  p.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return p;
}

// 10: inspect flags, exact render length, seeded defects.
Outcome pipeline() {
  Outcome o;
  const auto inspect = run_cli("inspect " + (kFixtures / "coral_data.csv").string());
  const std::string want_inspect =
      "coral_data.csv: 24 rows, 7 columns\n"
      "Q  year\nN  site\nQ  depth_m\nQ  temperature_c\nQ  cover_pct\nN  bleaching\nQ  zone\n";
  if (inspect.code != 0 || inspect.out != want_inspect) o.fail("inspect output: " + inspect.out);

  const auto wav = fs::temp_directory_path() / "sonir_acceptance.wav";
  fs::remove(wav);
  const auto project = kFixtures / "fm_demo.json";
  const auto render = run_cli("render " + project.string() + " -o " + wav.string());
  std::size_t frames = 0;
  double expected = 0.0;
  if (render.code != 0) {
    o.fail("render exit " + std::to_string(render.code) + ": " + render.out);
  } else {
    const auto doc = Json::parse(read_text_file(project));
    expected = doc["transport"]["duration_s"].get<double>() * doc["transport"]["sample_rate"].get<double>();
    frames = load_wav(wav.string()).frames();
    if (static_cast<double>(frames) != expected) {
      o.fail("rendered " + std::to_string(frames) + " frames, expected " + fmt(expected, 10));
    }
  }
  fs::remove(wav);

  const std::pair<const char*, const char*> defects[] = {
      {"unknown_column.json", "unknown column"},
      {"kind_mismatch.json", "cannot drive quantitative"},
      {"overlapping_regions.json", "overlaps"},
  };
  for (const auto& [file, text] : defects) {
    const auto r = run_cli("validate " + (kFixtures / "defects" / file).string());
    if (r.code != 1 || r.out.find(text) == std::string::npos || r.out.find("error: track '") == std::string::npos) {
      o.fail(std::string(file) + " not caught (exit " + std::to_string(r.code) + ")");
    }
  }
  if (o.pass) {
    o.detail = "flags QNQQQNQ, " + std::to_string(frames) + " frames rendered, 3/3 defects caught";
  }
  return o;
}

}  // namespace

int main() {
  configure_logging();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"FM Bessel sidebands", fm_bessel},
      {"FM zero-index purity", fm_purity},
      {"Formant vowel maxima", formant_vowels},
      {"Granular reconstruction", granular},
      {"Update coalescing", coalescing},
      {"Scheduler spacing", spacing},
      {"Automation correctness", automation},
      {"Determinism and additivity", determinism},
      {"Mapping DSL", dsl_suite},
      {"Pipeline end-to-end", pipeline},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (k + 1) << ". " << criteria[k].first
              << ": " << o.detail << "\n";
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
            << " criteria passed\n";
  return failures == 0 ? 0 : 1;
}
