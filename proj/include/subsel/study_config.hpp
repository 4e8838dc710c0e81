#pragma once

// Declarative scenario grids for the `simulate` command.
//
//   # comment
//   study  = multivariate        # or wasserstein
//   n      = 2000
//   p      = 5, 20               # comma lists expand into a cartesian grid
//   rho_x  = 0, 0.6
//   reps   = 50
//
// Grid keys (multivariate): n p m rho_x rho_y effect k gamma
// Grid keys (wasserstein):  n m k gamma
// Scalar keys: study reps seed threads s_true max_iters stall_window step_size
//              and, for wasserstein, p rho mu0 sigma0 beta gamma_slope v1 v2.

#include <map>
#include <string>
#include <vector>

#include "subsel/simulation.hpp"

namespace subsel {

struct StudyPlan {
  StudyKind kind = StudyKind::Multivariate;
  std::vector<StudyCell> cells;
  StudySettings settings;
  std::map<std::string, std::string> resolved;  // key -> normalized value text
};

StudyPlan parse_study_config(const std::string& text);
StudyPlan load_study_config(const std::string& path);

std::vector<std::string> study_csv_header(StudyKind kind);
std::vector<std::vector<std::string>> study_csv_rows(const std::vector<StudyRow>& rows, bool with_timing);

}  // namespace subsel
