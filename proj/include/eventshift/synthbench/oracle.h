#pragma once

// Cross-checks a generated benchmark against its constructive ground truth
// using the measurement code paths (corpus stats, IV/OOV partition).

#include "eventshift/synthbench/generator.h"

#include <string>
#include <vector>

namespace eventshift::synthbench {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<CheckResult> oracle_checks(const corpus::Corpus& source_train, const corpus::Corpus& source_dev,
                                       const corpus::Corpus& target_test, const GroundTruth& truth);

inline std::vector<CheckResult> oracle_checks(const SynthOutput& out) {
  return oracle_checks(out.source_train, out.source_dev, out.target_test, out.truth);
}

bool all_passed(const std::vector<CheckResult>& checks);

}  // namespace eventshift::synthbench
