#ifndef GEOPAS_SELECTOR_HPP
#define GEOPAS_SELECTOR_HPP

#include <optional>
#include <vector>

#include "geopas/labels.hpp"

namespace geopas::selector {

// The four selection-score variants: the full tail-aware rule and its
// ablations (drop the static prior, drop the catastrophe penalty, or use the
// raw regression output alone).
enum class Mode { full, no_prior, no_catastrophe, regression_only };

struct SelectionResult {
    int chosen = 0;
    std::vector<double> scores;
    std::vector<double> catastrophe_probability;
    std::vector<bool> penalized;  // algorithms that received the log(cap) penalty
};

// s_a = y_reg_a + log(cap) * 1[sigma(y_cat_a) >= 0.5] + rho_a, argmin wins,
// ties to the lowest algorithm index.  The unsafe test reads the logit sign,
// so the 0.5 boundary is exact.  A missing catastrophe head (single-head
// ablation) simply drops the penalty term.
SelectionResult select(const std::vector<double>& regression,
                       const std::optional<std::vector<double>>& catastrophe_logits,
                       const labels::TailPrior* prior, double cap, Mode mode = Mode::full);

}  // namespace geopas::selector

#endif
