// Data-driven order choice: estimate the roughness exponents of X and Y
// from one sample, pick an order, and apply it.

#include <cstdio>
#include <memory>

#include "confound/estimability.hpp"
#include "confound/estimators.hpp"
#include "confound/fields.hpp"
#include "confound/model_json.hpp"
#include "confound/presets.hpp"

using namespace confound;

int main() {
  for (const char* name : {"1d-nu0.7-d0", "1d-nu1.2-d0"}) {
    const ExperimentConfig c = preset(name);
    const CovarianceModel m = json_io::model_from_json(c.model);
    const auto d = std::make_shared<const Design>(make_design(design_for_size(c, 2000)));
    const FieldSample s = Sampler(m, d).draw_one(c.beta, 7);
    const AlphaEstimate ax = estimate_alpha(s.x, *d);
    const AlphaEstimate ay = estimate_alpha(s.y, *d);
    std::printf("%s: alpha_XX %.3f, alpha_YY %.3f\n", name, ax.alpha_hat, ay.alpha_hat);
    const Recommendation r = recommend(s);
    if (!r.feasible) {
      std::printf("  infeasible: %s\n", r.rationale.c_str());
      continue;
    }
    std::printf("  %s, order %d (%s): beta_hat %.4f\n", r.estimator.c_str(), r.order, r.rationale.c_str(),
                ols_diff(s, r.order).beta_hat);
  }
}
