// Reruns each builtin scenario and compares the JSON report with the stored
// one: integers, strings and booleans exactly, reals within 10% relative
// (absolute floor 1e-9, so round-off-level values compare as equal).

#include "offhol/report.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

using namespace offhol;
using nlohmann::json;

#ifndef OFFHOL_GOLDEN_DIR
#error "OFFHOL_GOLDEN_DIR must be defined"
#endif

namespace {

void compare(const json& want, const json& got, const std::string& path, std::vector<std::string>& diffs) {
  if (want.is_number_float() || got.is_number_float()) {
    if (!want.is_number() || !got.is_number()) {
      diffs.push_back(path + ": type");
      return;
    }
    const double a = want.get<double>(), b = got.get<double>();
    if (std::abs(a - b) > std::max(1e-9, 0.1 * std::abs(a))) diffs.push_back(path + ": " + want.dump() + " vs " + got.dump());
    return;
  }
  // signed vs unsigned storage depends on how the value was produced
  if (want.is_number_integer() && got.is_number_integer()) {
    if (want.get<long long>() != got.get<long long>()) diffs.push_back(path + ": " + want.dump() + " vs " + got.dump());
    return;
  }
  if (want.type() != got.type()) {
    diffs.push_back(path + ": type " + want.type_name() + " vs " + got.type_name());
    return;
  }
  if (want.is_object()) {
    for (const auto& [k, v] : want.items()) {
      if (!got.contains(k))
        diffs.push_back(path + "/" + k + ": missing");
      else
        compare(v, got[k], path + "/" + k, diffs);
    }
    for (const auto& [k, v] : got.items())
      if (!want.contains(k)) diffs.push_back(path + "/" + k + ": unexpected");
    return;
  }
  if (want.is_array()) {
    if (want.size() != got.size()) {
      diffs.push_back(path + ": length " + std::to_string(want.size()) + " vs " + std::to_string(got.size()));
      return;
    }
    for (std::size_t i = 0; i < want.size(); ++i) compare(want[i], got[i], path + "/" + std::to_string(i), diffs);
    return;
  }
  if (want != got) diffs.push_back(path + ": " + want.dump() + " vs " + got.dump());
}

class Golden : public ::testing::TestWithParam<std::string> {};

}  // namespace

TEST_P(Golden, ReportMatches) {
  const std::string name = GetParam();
  std::ifstream in(std::string(OFFHOL_GOLDEN_DIR) + "/" + name + ".json");
  ASSERT_TRUE(in) << "missing golden file for " << name;
  const json want = json::parse(in);
  const auto cfg = scenario_config(name);
  const json got = report_json(run_experiment(cfg, {}, format_config(cfg)));
  std::vector<std::string> diffs;
  compare(want, got, "", diffs);
  for (std::size_t i = 0; i < std::min<std::size_t>(diffs.size(), 20); ++i) ADD_FAILURE() << diffs[i];
  EXPECT_TRUE(diffs.empty()) << diffs.size() << " differences";
}

INSTANTIATE_TEST_SUITE_P(Scenarios, Golden, ::testing::Values("t3", "lc-baseline", "s2xt2", "s2xt2-perturbed"),
                         [](const auto& info) {
                           std::string s = info.param;
                           for (char& c : s)
                             if (c == '-') c = '_';
                           return s;
                         });
