#include "dlab/taxonomy/rank_stats.hpp"

#include "dlab/common.hpp"

namespace dlab {

AucResult binary_auc(const std::vector<bool>& labels, const std::vector<bool>& predictor)
{
    require(labels.size() == predictor.size(), "AUC inputs must have equal length");
    double pos = 0, neg = 0, tp = 0, fp = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) {
            ++pos;
            if (predictor[i]) ++tp;
        } else {
            ++neg;
            if (predictor[i]) ++fp;
        }
    }
    if (pos == 0 || neg == 0) return {0.5, true};
    return {0.5 * (1.0 + tp / pos - fp / neg), false};
}

}  // namespace dlab
