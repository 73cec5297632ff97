#include "geopas/selector.hpp"

#include <cmath>

#include "geopas/common.hpp"

namespace geopas::selector {

SelectionResult select(const std::vector<double>& regression,
                       const std::optional<std::vector<double>>& catastrophe_logits,
                       const labels::TailPrior* prior, double cap, Mode mode) {
    const std::size_t width = regression.size();
    if (width == 0) throw input_error("select: empty regression output");
    if (catastrophe_logits.has_value() && catastrophe_logits->size() != width)
        throw input_error("select: catastrophe logits length mismatch");
    if (prior != nullptr && prior->rho.size() != width)
        throw input_error("select: prior length mismatch");

    const bool use_cat = (mode == Mode::full || mode == Mode::no_prior) &&
                         catastrophe_logits.has_value();
    const bool use_prior = (mode == Mode::full || mode == Mode::no_catastrophe) &&
                           prior != nullptr;
    if (use_cat && !(cap > 1.0))
        throw input_error("select: cap must exceed 1 when the catastrophe term is active");

    SelectionResult res;
    res.scores.resize(width);
    res.catastrophe_probability.assign(width, 0.0);
    res.penalized.assign(width, false);

    const double penalty = use_cat ? std::log(cap) : 0.0;
    for (std::size_t a = 0; a < width; ++a) {
        double s = regression[a];
        if (catastrophe_logits.has_value()) {
            const double logit = (*catastrophe_logits)[a];
            res.catastrophe_probability[a] = 1.0 / (1.0 + std::exp(-logit));
            if (use_cat && logit >= 0.0) {  // sigma(logit) >= 0.5 <=> logit >= 0
                s += penalty;
                res.penalized[a] = true;
            }
        }
        if (use_prior) s += prior->rho[a];
        res.scores[a] = s;
    }

    std::size_t best = 0;
    for (std::size_t a = 1; a < width; ++a)
        if (res.scores[a] < res.scores[best]) best = a;
    res.chosen = static_cast<int>(best);
    return res;
}

}  // namespace geopas::selector
