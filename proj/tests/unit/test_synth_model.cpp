#include <doctest.h>

#include <random>

#include "sonir/builtin_synths.hpp"
#include "sonir/error.hpp"
#include "sonir/synth_model.hpp"

using namespace sonir;

namespace {

using Names = std::set<std::string, std::less<>>;

struct Recorder {
  std::vector<std::pair<std::size_t, ValueMap>> calls;
};

// A toy definition: a, b quantitative, c nominal, t temporal.
// Bindings: [a,t], [a,b,t], [c,t].
SynthDefinition toy(std::shared_ptr<Recorder> rec) {
  SynthDefinition def;
  def.name = "toy";
  def.parameters = {{"a", ParamKind::TimbralQuantitative, {}, false},
                    {"b", ParamKind::TimbralQuantitative, {}, false},
                    {"c", ParamKind::TimbralNominal, {}, false},
                    {"t", ParamKind::Temporal, {}, false}};
  def.defaults = [](const BufferSet&) {
    return ValueMap{{"a", 1.0}, {"b", 2.0}, {"c", std::string("x")}, {"t", 0.0}};
  };
  def.build = [rec](BuildContext&) {
    std::vector<UpdateBinding> bindings;
    const std::vector<std::vector<std::string>> keys{{"a", "t"}, {"a", "b", "t"}, {"c", "t"}};
    for (std::size_t k = 0; k < keys.size(); ++k) {
      bindings.push_back({keys[k], [rec, k](const ValueMap& v, double, double) {
                            rec->calls.emplace_back(k, v);
                          }});
    }
    return SynthInstance(std::move(bindings), [](double) {}, [](double) {});
  };
  return def;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("definitions need exactly one temporal parameter and unique names") {
  auto rec = std::make_shared<Recorder>();
  auto def = toy(rec);
  CHECK_NOTHROW(check_definition(def));

  auto none = def;
  none.parameters.pop_back();
  CHECK(code_of([&] { check_definition(none); }) == ErrorCode::InvalidArgument);

  auto two = def;
  two.parameters.push_back({"t2", ParamKind::Temporal, {}, false});
  CHECK(code_of([&] { check_definition(two); }) == ErrorCode::InvalidArgument);

  auto dup = def;
  dup.parameters.push_back({"a", ParamKind::TimbralQuantitative, {}, false});
  CHECK(code_of([&] { check_definition(dup); }) == ErrorCode::InvalidArgument);

  SynthRegistry reg;
  CHECK_THROWS_AS(reg.add(two), Error);
  reg.add(def);
  CHECK(reg.find("toy") != nullptr);
  CHECK(reg.find("nope") == nullptr);
}

TEST_CASE("built-in definitions pass registration") {
  for (const auto& def : {fm_definition(), formant_definition(), granular_definition()}) {
    CHECK_NOTHROW(check_definition(def));
  }
  CHECK(SynthRegistry::builtin().names() == std::vector<std::string>{"fm", "formant", "granular"});
}

TEST_CASE("a binding fires once per dispatch however many key members change") {
  auto rec = std::make_shared<Recorder>();
  AudioGraph g;
  auto inst = instantiate(toy(rec), g, g.destination());
  CHECK(inst.dispatch_update({"a", "b"}, {{"a", 5.0}, {"b", 6.0}}, 1.0, 0.5) == 2);
  REQUIRE(rec->calls.size() == 2);
  CHECK(rec->calls[0].first == 0);
  CHECK(rec->calls[1].first == 1);
  CHECK(std::get<double>(rec->calls[1].second.at("b")) == 6.0);
  CHECK(std::get<double>(rec->calls[1].second.at("t")) == 1.0);
  CHECK(inst.dispatch_update({"b"}, {{"b", 7.0}}, 2.0, 0.5) == 1);
  CHECK(inst.total_invocations() == 3);
}

TEST_CASE("bindings see the most recent value of every other key member") {
  auto rec = std::make_shared<Recorder>();
  AudioGraph g;
  auto inst = instantiate(toy(rec), g, g.destination());
  inst.dispatch_update({"b"}, {{"b", 9.0}}, 0.0, 1.0);
  // a was never set: its default reaches the binding.
  CHECK(std::get<double>(rec->calls.back().second.at("a")) == 1.0);
  inst.dispatch_update({"a"}, {{"a", 4.0}}, 1.0, 1.0);
  CHECK(std::get<double>(rec->calls.back().second.at("b")) == 9.0);
  CHECK(std::get<double>(inst.current_values().at("a")) == 4.0);
  CHECK(inst.current_values().size() == 4);
}

TEST_CASE("coalescing holds for random changed sets") {
  std::mt19937 rng(11);
  const std::vector<std::vector<std::string>> keys{{"a", "t"}, {"a", "b", "t"}, {"c", "t"}};
  for (int trial = 0; trial < 300; ++trial) {
    auto rec = std::make_shared<Recorder>();
    AudioGraph g;
    auto inst = instantiate(toy(rec), g, g.destination());
    Names changed;
    ValueMap values;
    if (rng() & 1) changed.insert("a"), values["a"] = 1.5;
    if (rng() & 1) changed.insert("b"), values["b"] = 2.5;
    if (rng() & 1) changed.insert("c"), values["c"] = std::string("y");
    if (changed.empty()) continue;
    const auto fired = inst.dispatch_update(changed, values, 0.0, 0.1);
    std::vector<std::size_t> expected;
    for (std::size_t k = 0; k < keys.size(); ++k) {
      for (const auto& name : keys[k]) {
        if (changed.contains(name)) {
          expected.push_back(k);
          break;
        }
      }
    }
    REQUIRE(fired == expected.size());
    REQUIRE(rec->calls.size() == expected.size());
    for (std::size_t j = 0; j < expected.size(); ++j) REQUIRE(rec->calls[j].first == expected[j]);
  }
}

TEST_CASE("dispatch rejects bad input before any effect runs") {
  auto rec = std::make_shared<Recorder>();
  AudioGraph g;
  auto inst = instantiate(toy(rec), g, g.destination());
  CHECK(code_of([&] { inst.dispatch_update({}, {}, 0.0, 0.0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { inst.dispatch_update({"zzz"}, {{"zzz", 1.0}}, 0.0, 0.0); }) ==
        ErrorCode::UnknownParameter);
  CHECK(code_of([&] { inst.dispatch_update({"a"}, {{"a", std::string("tok")}}, 0.0, 0.0); }) ==
        ErrorCode::KindMismatch);
  CHECK(code_of([&] { inst.dispatch_update({"c"}, {{"c", 3.0}}, 0.0, 0.0); }) == ErrorCode::KindMismatch);
  CHECK(code_of([&] { inst.dispatch_update({"t"}, {{"t", 3.0}}, 0.0, 0.0); }) ==
        ErrorCode::InvalidArgument);
  // A kind error on one member leaves the cache untouched for the others.
  CHECK_THROWS(inst.dispatch_update({"a", "c"}, {{"a", 8.0}, {"c", 1.0}}, 0.0, 0.0));
  CHECK(std::get<double>(inst.current_values().at("a")) == 1.0);
  CHECK(rec->calls.empty());
}

TEST_CASE("kind safety for random value variants") {
  std::mt19937 rng(5);
  auto rec = std::make_shared<Recorder>();
  AudioGraph g;
  auto inst = instantiate(toy(rec), g, g.destination());
  for (int trial = 0; trial < 200; ++trial) {
    const std::string name = (rng() & 1) ? "a" : "c";
    const bool token = rng() & 1;
    const ParamValue v = token ? ParamValue{std::string("q")} : ParamValue{1.0};
    const bool ok = token == (name == "c");
    const auto before = rec->calls.size();
    if (ok) {
      CHECK_NOTHROW(inst.dispatch_update({name}, {{name, v}}, 0.0, 0.0));
    } else {
      CHECK(code_of([&] { inst.dispatch_update({name}, {{name, v}}, 0.0, 0.0); }) == ErrorCode::KindMismatch);
      CHECK(rec->calls.size() == before);
    }
  }
}

TEST_CASE("build errors surface as BuildFailure") {
  SynthDefinition def = toy(std::make_shared<Recorder>());
  def.build = [](BuildContext&) -> SynthInstance { throw Error(ErrorCode::UnknownBuffer, "missing"); };
  AudioGraph g;
  CHECK(code_of([&] { instantiate(def, g, g.destination()); }) == ErrorCode::BuildFailure);

  AudioGraph g2;
  CHECK(code_of([&] { instantiate(granular_definition(), g2, g2.destination()); }) ==
        ErrorCode::BuildFailure);
}

TEST_CASE("processors are registered before build") {
  AudioGraph g;
  CHECK_FALSE(g.has_processor("impulse"));
  instantiate(formant_definition(), g, g.destination());
  CHECK(g.has_processor("impulse"));
}

TEST_CASE("parameter value formatting") {
  CHECK(format_value(ParamValue{2.0}) == "2");
  CHECK(format_value(ParamValue{0.25}) == "0.25");
  CHECK(format_value(ParamValue{std::string("a")}) == "a");
  CHECK(to_string(ParamKind::TimbralNominal) == "nominal");
  CHECK(to_string(ParamKind::Temporal) == "temporal");
}
