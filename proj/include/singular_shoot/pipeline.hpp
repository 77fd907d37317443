#pragma once

// Oracle -> structure -> multi-phase shooting, and the post-hoc checks on a
// stored extremal.

#include <functional>
#include <string>

#include "singular_shoot/errors.hpp"
#include "singular_shoot/io.hpp"
#include "singular_shoot/second_order.hpp"

namespace sshoot {

/// A pipeline error tagged with the stage that raised it.
class StageFailure : public Error {
 public:
  StageFailure(std::string stage, const std::string& what)
      : Error(stage + " failed: " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct SolveOutcome {
  OracleResult oracle;
  ControlStructure structure;
  TPShootingPoint nu;
  GNReport report;
  Extremal extremal;
  double objective = 0.0;
  double residual_inf = 0.0;
};

using LogFn = std::function<void(const std::string&)>;

/// Runs every stage; throws StageFailure naming "oracle", "structure" or
/// "shooting" when a stage fails or Gauss-Newton does not converge.
SolveOutcome solve_pipeline(const ProblemDef& prob, const SolverConfig& cfg,
                            const LogFn& log = {});

/// Structure of a stored extremal: arc types from its ArcSpecs, switches at
/// the first node of each phase.
ControlStructure structure_of(const ProblemDef& prob, const Extremal& ext);

/// Least-squares multipliers from the two transversality blocks. The
/// infinity norm of the leftover transversality residual goes to *residual.
Vector fit_multipliers(const ProblemDef& prob, const Extremal& ext, double* residual = nullptr);

struct CheckItem {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool ok = false;
  std::string note;
};

struct CheckReport {
  std::vector<CheckItem> items;
  bool all_green() const;
  std::string text() const;
};

/// Shooting residual (re-integrated from the stored phase starts),
/// Hamiltonian drift, SLC margins, Goh residual, coercivity certificate and
/// the identity errors.
CheckReport check_extremal(const ProblemDef& prob, const Extremal& ext);

}  // namespace sshoot
