#pragma once

// Built-in property suites backing `sedic selftest`.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace sedic::selftest {

struct SuiteResult {
  std::string name;
  std::size_t checks = 0;
  bool passed = true;
  std::string first_failure;  // property name and detail
};

struct Options {
  std::optional<std::string> suite;  // run only this suite
  // Test hook: name of a suite whose checks get a deliberately broken
  // property appended.
  std::optional<std::string> inject_fault;
};

const std::vector<std::string>& suite_names();

// Throws std::invalid_argument for an unknown suite name.
std::vector<SuiteResult> run(const Options& options = {});

}  // namespace sedic::selftest
