#pragma once

#include <span>
#include <vector>

namespace dlab {

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

struct Correlation {
    double value = 0.0;
    bool degenerate = false;  // a constant input; value is 0
};

Correlation pearson(std::span<const double> a, std::span<const double> b);

// Pearson correlation of average ranks.
Correlation spearman(std::span<const double> a, std::span<const double> b);

struct AucResult {
    double auc = 0.5;
    bool degenerate = false;  // labels contain a single class; auc is 0.5
};

// AUC-ROC of a binary predictor for binary labels, (1 + TPR - FPR) / 2.
AucResult binary_auc(const std::vector<bool>& labels, const std::vector<bool>& predictor);

}  // namespace dlab
