#pragma once

#include "dlab/experiments/ablation.hpp"
#include "dlab/experiments/layerwise.hpp"
#include "dlab/taxonomy/classify.hpp"
#include "dlab/taxonomy/profile.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace dlab {

struct DensityFractionTable {
    std::vector<std::string> layers;
    std::vector<double> thresholds;
    MatrixXd fractions;  // layers x thresholds
};

// Everything is optional; missing parts produce header-only CSVs and
// empty plots.
struct ReportInputs {
    const AblationStudyResult* ablation = nullptr;
    const std::vector<LatentProfile>* profiles = nullptr;
    std::vector<std::pair<std::string, TaxonomyReport>> taxonomy;  // one stacked bar per group
    const AngleMatrix* angles = nullptr;
    std::vector<std::string> angle_layers;  // labels; indices when empty
    const DensityFractionTable* fractions = nullptr;
};

// Writes CSV tables and SVG plots into out_dir (created if needed) and
// returns the written file names in a fixed order. Output bytes depend
// only on the inputs.
std::vector<std::string> emit_report(const ReportInputs& in, const std::filesystem::path& out_dir);

// Shortest round-trip formatting used in every CSV cell ("nan" for NaN).
std::string format_number(double v);

}  // namespace dlab
