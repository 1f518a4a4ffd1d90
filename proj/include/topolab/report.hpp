#pragma once

// SVG summary of a convergence run. Output is a pure function of the CSV
// contents: no timestamps, fixed number formatting.

#include "topolab/lab.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace topolab {

/// Three panels: mean D_N against t per N; log-log mean D_N(T) against N-1
/// with the bound e^{C_K T}/sqrt(N-1); TV estimate against D_N at t = T.
/// Throws ValidationError on an empty trial set.
std::string render_report(const std::vector<TrialRow>& trials, const std::vector<AggregateRow>& aggregate);

/// Reads trials.csv and aggregate.csv from `input_dir` and writes
/// `output` atomically. Nothing is written on error.
void render_report_files(const std::filesystem::path& input_dir, const std::filesystem::path& output);

}  // namespace topolab
