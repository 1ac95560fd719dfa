#pragma once

#include <string>
#include <vector>

#include "svpinn/train.hpp"

namespace svpinn {

// One verification study: raw measurements plus pass/fail summary values.
// write_outputs emits <name>.csv (raw rows) and <name>.json (summary).
struct StudyReport {
    std::string name;
    bool pass = false;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, double>> summary;

    void write_outputs(const std::string& out_dir) const;
};

// Ratio containment of the two residual norms over random coefficient sets.
StudyReport study_equivalence(int d, int mode_count, int trials, double tau,
                              std::uint64_t seed = 20240501);

// Order of the grid-sum quadrature error against closed-form integrals.
StudyReport study_trapezoid(int d);

// Order of the discrete eigenvalue error, plus the quadratic eigenvalue
// scaling of the leading constant.
StudyReport study_eigen_convergence(int d);

// Decay of E|corrected loss - exact norm| for a fixed synthetic residual:
// slope -1/2 in the sample count and the mesh-rate at large sample count.
StudyReport study_estimator_decay(int d, std::uint64_t seed = 20240502, bool quick = false);

// Partial-sum norms of the random draws: bounded just below the critical
// order, divergent just above it.
StudyReport study_regularity(int d, std::uint64_t seed = 20240503);

// Trains pinn(gd), svpinn(gd) and svpinn(lbfgs) on one experiment under a
// shared step budget and tabulates errors and steps-to-1%.
struct ComparisonCell {
    std::string method;
    std::string optimizer;
    double final_l2 = 0.0;
    double best_l2 = 0.0;
    int steps_to_1pct = -1;  // -1 when never reached
    double wall_s = 0.0;
};

struct ComparisonReport {
    std::string experiment;
    std::vector<ComparisonCell> cells;
    void write_outputs(const std::string& out_dir) const;
};

ComparisonReport study_comparison(const ProblemSpec& problem, const TrainConfig& base_config,
                                  int budget_steps);

int steps_to_threshold(const RunMetrics& metrics, double threshold);

}  // namespace svpinn
