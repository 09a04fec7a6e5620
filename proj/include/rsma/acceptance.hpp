// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace rsma::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct Options {
  std::filesystem::path scratch_dir;  // empty: a fresh directory under the system temp dir
  int threads = 4;                    // worker count for the parallel half of criterion 10
};

CriterionResult lemma2_identity();
CriterionResult lemma1_expectation();
CriterionResult gradient_equivalence();
CriterionResult descent_and_convergence();
CriterionResult power_split_oracle();
CriterionResult power_conservation();
CriterionResult esr_ordering();
CriterionResult perfect_csit_reduction();
CriterionResult quantization_mode();
CriterionResult determinism(const Options& opts);

constexpr int kCriteria = 10;

/// Runs criterion `id` (1..kCriteria).
CriterionResult run_criterion(int id, const Options& opts = {});

/// Criteria 1..kCriteria in order.
std::vector<CriterionResult> run_all(const Options& opts = {});

/// "PASS  3  gradient equivalence (12.1 s): detail"
std::string format(const CriterionResult& r);

}  // namespace rsma::acceptance
