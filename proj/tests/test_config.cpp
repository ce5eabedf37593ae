#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "ratesync/config.hpp"

using namespace ratesync;

namespace {

const char* kFullConfig = R"(# example scenario
[session]
per_user_budget = 2.5e7
delay_bound = 3
segment_duration = 10
storage_cost_per_bit = 1

[channel]
bandwidth_hz = 2e6
tx_power = 1
power_cost_rate = 1
mean_gain = 1

[qoe]
alpha1 = 0.802
alpha2 = 419.6
alpha3 = 1

[users]
num_users = 2
requested_sizes = 2.4288e7

[run]
scheme = proposed-adaptive
num_segments = 30
seed = 42
)";

ResolvedScenario parse_text(const std::string& text) {
  std::istringstream in(text);
  return resolve_scenario(ConfigFile::parse(in));
}

}  // namespace

TEST_CASE("a full scenario file resolves") {
  const ResolvedScenario r = parse_text(kFullConfig);
  CHECK(r.scenario.session.per_user_budget == Catch::Approx(2.5e7));
  CHECK(r.scenario.session.qoe.alpha2 == Catch::Approx(419.6));
  CHECK(r.scenario.num_users == 2);
  CHECK(r.scenario.seed == 42);
  CHECK(r.scenario.scheme == Scheme::kProposedAdaptive);
  CHECK(r.has_budget);
  CHECK(r.scenario.requested_bits == std::vector<double>{2.4288e7});
  r.scenario.validate();
}

TEST_CASE("defaults fill in the standard experiment constants") {
  const ResolvedScenario r = parse_text(
      "[users]\nnum_users = 3\nrequested_sizes = crew\n[session]\nper_user_budget = 1e7\n");
  CHECK(r.scenario.session.channel.bandwidth_hz == Catch::Approx(2e6));
  CHECK(r.scenario.session.segment_duration == Catch::Approx(10.0));
  CHECK(r.scenario.session.delay_bound == Catch::Approx(3.0));
  CHECK(r.scenario.session.storage_cost_per_bit == Catch::Approx(1.0));
  CHECK(r.scenario.num_segments == 30);
  // the profile supplies both the request and the quality model
  CHECK(r.profile_name == "crew");
  CHECK(r.scenario.requested_bits == std::vector<double>{2.4288e7});
  CHECK(r.scenario.session.qoe.alpha1 == Catch::Approx(0.802));
}

TEST_CASE("unknown keys and sections fail fast") {
  CHECK_THROWS_WITH(parse_text("[users]\nnum_users = 1\nrequested_sizes = 1e6\nbogus_key = 3\n"),
                    Catch::Matchers::ContainsSubstring("bogus_key"));
  CHECK_THROWS_WITH(parse_text("[nosuch]\nx = 1\n"),
                    Catch::Matchers::ContainsSubstring("unknown section"));
  CHECK_THROWS_WITH(parse_text("[users]\nnum_users = 1\nnum_users = 2\n"),
                    Catch::Matchers::ContainsSubstring("duplicate"));
  CHECK_THROWS_AS(parse_text("[users]\nrequested_sizes = 1e6\n"), ConfigError);
  CHECK_THROWS_WITH(parse_text("[users]\nnum_users = two\nrequested_sizes = 1e6\n"),
                    Catch::Matchers::ContainsSubstring("not a number"));
}

TEST_CASE("missing qoe section requires a profile") {
  CHECK_THROWS_WITH(parse_text("[users]\nnum_users = 1\nrequested_sizes = 1e6\n"),
                    Catch::Matchers::ContainsSubstring("qoe"));
}

TEST_CASE("per-user lists are validated") {
  const std::string base =
      "[users]\nnum_users = 2\nrequested_sizes = duck\ngain_to_noise = 0.5, 1.5\n"
      "prior_residual_delay = 0, 11\n";
  const ResolvedScenario r = parse_text(base);
  CHECK(r.fixed_gains == std::vector<double>{0.5, 1.5});
  CHECK(r.prior_delays == std::vector<double>{0.0, 11.0});
  CHECK_THROWS_WITH(
      parse_text("[users]\nnum_users = 3\nrequested_sizes = duck\ngain_to_noise = 0.5, 1.5\n"),
      Catch::Matchers::ContainsSubstring("gain_to_noise"));
}

TEST_CASE("run options parse as lists") {
  const ResolvedScenario r = parse_text(
      "[users]\nnum_users = 2\nrequested_sizes = ice\n"
      "[run]\nbudgets = 1e6, 2e6, 4e6\ntrials = 7\ndiscretize = 0.2, 0.4, 0.6, 0.8, 1.0\n");
  CHECK(r.budgets == std::vector<double>{1e6, 2e6, 4e6});
  CHECK(r.trials == 7);
  CHECK(r.scenario.ladder.size() == 5);
}

TEST_CASE("digests are stable and sensitive") {
  const ResolvedScenario a = parse_text(kFullConfig);
  const ResolvedScenario b = parse_text(kFullConfig);
  CHECK(a.digest == b.digest);
  std::string changed = kFullConfig;
  const auto pos = changed.find("seed = 42");
  changed.replace(pos, 9, "seed = 43");
  CHECK(parse_text(changed).digest != a.digest);
}
