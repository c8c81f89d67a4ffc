#include <cmath>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "dmac/config.hpp"
#include "dmac/errors.hpp"
#include "dmac/run_io.hpp"

using namespace dmac;

namespace {

std::string error_of(const std::string& text) {
  try {
    (void)parse_config(text, "test.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_SUITE("config_io") {
  TEST_CASE("presets carry their nominal experiment values") {
    const auto mck = preset("mck");
    const auto& p = std::get<MckParams>(mck.plant);
    CHECK(p.m == 1.0);
    CHECK(p.c == 0.5);
    CHECK(p.k == 2.0);
    CHECK(mck.sample_time == 0.1);
    CHECK(mck.dmac.forgetting == 0.995);
    CHECK(mck.dmac.regularization_scale == 100.0);
    CHECK(mck.dmac.state_weight_scale == 1.0);
    CHECK(mck.dmac.input_weight_scale == 1.0);

    const auto tm = preset("three_mass");
    CHECK(std::get<ThreeMassParams>(tm.plant).m == 1.0);
    CHECK(std::get<ThreeMassParams>(tm.plant).k == 2.0);
    CHECK(tm.dmac.forgetting == 0.999);

    const auto vdp = preset("van_der_pol");
    CHECK(std::get<VanDerPolParams>(vdp.plant).mu == 1.0);

    const auto b = preset("burgers");
    const auto& bp = std::get<BurgersParams>(b.plant);
    CHECK(bp.nodes == 100);
    CHECK(bp.viscosity == 0.1);
    CHECK(bp.actuator_node == 55);
    CHECK(bp.output_node == 61);
    CHECK(bp.sensor_nodes == std::vector<int>{1, 16, 31, 46, 61, 76, 91});
    CHECK(b.sample_time == 0.01);
    CHECK(b.dmac.forgetting == 0.9995);
    CHECK(b.dmac.regularization_scale == 100.0);
    CHECK(b.dmac.state_weight_scale == 10.0);
    CHECK(b.dmac.input_weight_scale == 0.1);
    // R_Theta acts on the 7 sensed nodes plus one input.
    const auto plant = build_plant(b.plant);
    CHECK(make_controller_config(plant, b.dmac, 0).estimator.regularization.rows() == 8);

    for (const auto& name : preset_names()) CHECK_NOTHROW(validate(preset(name)));
    CHECK_THROWS_AS(preset("nope"), ConfigError);
  }

  TEST_CASE("config file parsing") {
    const auto doc = parse_config(R"(# three-mass study
lambda = 0.99   # tighter memory
preset = three_mass
name = tm_test
reference = 0:1, 5:-0.5
seed = 7
sweep.axis = k
sweep.values = 0.2, 2, 20
sweep.seed_policy = per_value
)");
    CHECK(doc.spec.name == "tm_test");
    CHECK(doc.spec.dmac.forgetting == 0.99);
    CHECK(doc.spec.seed == 7);
    CHECK(doc.spec.sample_time == 0.1);
    CHECK(doc.spec.reference.at(6.0)(0) == -0.5);
    REQUIRE(doc.sweep.has_value());
    CHECK(doc.sweep->axis == "k");
    CHECK(doc.sweep->values == std::vector<double>{0.2, 2, 20});
    CHECK(doc.sweep->seed_policy == SeedPolicy::PerValue);
  }

  TEST_CASE("diagnostics name the key and line") {
    const auto unknown = error_of("preset = mck\n\nbogus = 3\n");
    CHECK(contains(unknown, "test.cfg:3"));
    CHECK(contains(unknown, "bogus"));

    const auto dup = error_of("preset = mck\nlambda = 0.9\nlambda = 0.8\n");
    CHECK(contains(dup, "test.cfg:3"));
    CHECK(contains(dup, "lambda"));

    CHECK(contains(error_of("preset = mck\nlambda 0.9\n"), "test.cfg:2"));
    CHECK(contains(error_of("preset = mck\nlambda = abc\n"), "test.cfg:2"));
    CHECK(contains(error_of("preset = mck\nmu = 1\n"), "mu"));
    CHECK(contains(error_of("preset = mck\nsensors = 1, 2\n"), "burgers"));
    CHECK(contains(error_of("preset = mck\nsweep.axis = k\n"), "sweep"));
    CHECK(error_of("plant = van_der_pol\nmu = 3\n").empty());
  }

  TEST_CASE("invalid values are rejected before running") {
    auto doc = parse_config("preset = mck\nr2 = 0\n");
    CHECK_THROWS_AS(validate(doc.spec), ConfigError);

    doc = parse_config("preset = burgers\nsensors = 1, 16, 101\n");
    CHECK_THROWS_AS(validate(doc.spec), ConfigError);

    doc = parse_config("preset = mck\nlambda = 1.5\n");
    CHECK_THROWS_AS(validate(doc.spec), ConfigError);

    doc = parse_config("preset = mck\nr_theta = -1\n");
    CHECK_THROWS_AS(validate(doc.spec), ConfigError);
  }

  TEST_CASE("overrides") {
    auto doc = parse_config("preset = mck\n");
    apply_override(doc, "seed=7");
    CHECK(doc.spec.seed == 7);
    apply_override(doc, " lambda = 0.9 ");
    CHECK(doc.spec.dmac.forgetting == 0.9);
    CHECK_THROWS_AS(apply_override(doc, "preset=burgers"), ConfigError);
    CHECK_THROWS_AS(apply_override(doc, "lambda"), ConfigError);
    CHECK_THROWS_AS(apply_override(doc, "nope=1"), ConfigError);

    const auto base = run_experiment([] { auto s = preset("mck"); s.duration = 5; return s; }());
    auto seven = preset("mck");
    seven.duration = 5;
    seven.seed = 7;
    const auto other = run_experiment(seven);
    CHECK(base.records.back().u != other.records.back().u);
    CHECK(run_experiment(seven).records.back().u == other.records.back().u);
  }

  TEST_CASE("rendered configuration parses back to the same document") {
    for (const auto& name : preset_names()) {
      ConfigDocument doc{preset(name), std::nullopt};
      if (name == "burgers") apply_override(doc, "sensors=1, 31, 61, 91");
      apply_override(doc, "reference=0:1, 2.5:3");
      const auto text = to_config_text(doc);
      const auto again = parse_config(text);
      CHECK(to_config_text(again) == text);
      CHECK(plant_kind(again.spec.plant) == plant_kind(doc.spec.plant));
    }
  }

  TEST_CASE("CSV round trip keeps every digit") {
    auto spec = preset("van_der_pol");
    spec.duration = 3.0;
    const auto log = run_experiment(spec);
    std::stringstream buf;
    write_run_csv(buf, log);
    const std::string text = buf.str();
    CHECK(text.rfind("k,t,y_0,r_0,z_0,u_0,xi_0,xi_1,theta_0,", 0) == 0);

    std::istringstream in(text);
    const auto back = read_run_csv(in);
    REQUIRE(back.records.size() == log.records.size());
    for (std::size_t i = 0; i < log.records.size(); ++i) {
      const auto& a = log.records[i];
      const auto& b = back.records[i];
      CHECK(a.k == b.k);
      CHECK(a.t == b.t);
      CHECK(a.y == b.y);
      CHECK(a.z == b.z);
      CHECK(a.u == b.u);
      CHECK(a.xi == b.xi);
      CHECK(a.theta == b.theta);
      CHECK(a.status == b.status);
      CHECK((a.spectral_radius == b.spectral_radius ||
             (std::isnan(a.spectral_radius) && std::isnan(b.spectral_radius))));
    }
    std::stringstream again;
    write_run_csv(again, back);
    CHECK(again.str() == text);

    std::istringstream bad("a,b\n1,2\n");
    CHECK_THROWS_AS(read_run_csv(bad), Error);
  }

  TEST_CASE("summary JSON") {
    auto spec = preset("mck");
    spec.duration = 30;
    const auto log = run_experiment(spec);
    const auto s = summarize(log, spec.resolved_convergence_threshold());
    const auto j = nlohmann::json::parse(summary_json(spec, log, s));
    CHECK(j["experiment"] == "mck");
    CHECK(j["plant"] == "mck");
    CHECK(j["records"] == 300);
    CHECK(j["converged"] == s.converged);
    CHECK(j["threshold"].get<double>() == doctest::Approx(0.05));
    CHECK(j["divergence_step"].is_null());
  }

  TEST_CASE("file naming") {
    CHECK(run_file_stem("mck", "lambda", format_axis_value(0.995), 3) == "mck_lambda_0.995_3");
    CHECK(format_axis_value(10000.0) == "10000");
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  }
}
