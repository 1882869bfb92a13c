#pragma once

// The certify pipeline, its certificate, and the bigimage command line.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bigimage/deform.hpp"
#include "bigimage/regularity.hpp"

namespace bigimage {

/// Exit codes of the command line.
enum ExitCode : int {
  kExitOk = 0,
  kExitVerification = 1,
  kExitUsage = 2,
  kExitBudget = 3,
  kExitConstruction = 4,
  kExitStage = 5,
};

struct CertificateCondition {
  bool pass = true;
  std::string witness;
};

struct Certificate {
  u64 p = 0;
  unsigned n = 0;
  unsigned e = 0;
  u64 seed = 0;

  std::vector<u64> irregular_indices;
  u64 e_p = 0;
  std::vector<std::string> assumptions;

  std::vector<i64> ks;
  std::vector<CertificateCondition> conditions;
  std::vector<u64> assumed_zero_indices;
  std::vector<u64> avoided_eigenspaces;

  unsigned target_level = 0;
  std::string det_mode;
  std::string psi_fingerprint;
  bool relators_exact = false;
  bool det_exact = false;

  std::vector<std::string> phi1_seeds;  // "e_1,2", ..., "w=diag(...)"
  std::size_t phi1_dim = 0;
  bool phi1_trace_zero = false;
  std::optional<unsigned> sl_closure_level;
  unsigned kernel_level = 4;
  bool kernel_contained = false;
  std::string kernel_method = "filtration";

  bool pass = false;
  std::optional<std::string> failed_stage;
  std::string reason;

  friend bool operator==(const Certificate&, const Certificate&) = default;
};

bool operator==(const CertificateCondition& a, const CertificateCondition& b);

nlohmann::ordered_json to_json(const Certificate& c);
Certificate certificate_from_json(const nlohmann::json& j);

/// FNV-1a over the little-endian bytes of the character values, as hex.
std::string psi_fingerprint(const Character& psi);

struct CertifyOptions {
  unsigned level = 5;
  DetMode det_mode = DetMode::Paper;
  u64 seed = 0;
  Budget budget;
};

/// profile -> select_ks -> build_rho2 -> lift_to(level) -> Phi_1 -> graded
/// closure -> sl_n by level 4. Throws BudgetExceeded from the profile stage.
Certificate certify(u64 p, unsigned n, unsigned e, const CertifyOptions& options = {});

/// Budget from BIGIMAGE_BUDGET_MS (integer milliseconds) if set.
Budget budget_from_env();

/// Runs `bigimage <args...>` (args excludes the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bigimage
