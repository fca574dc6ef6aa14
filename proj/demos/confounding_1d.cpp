// One draw of a confounded 1D bivariate Matern pair: plain OLS against
// differenced OLS at a few sample sizes.

#include <cstdio>
#include <memory>

#include "confound/estimators.hpp"
#include "confound/fields.hpp"
#include "confound/model_json.hpp"
#include "confound/presets.hpp"

using namespace confound;

int main() {
  const ExperimentConfig c = preset("1d-nu0.7-d0.3");
  const CovarianceModel m = json_io::model_from_json(c.model);
  std::printf("%s, beta = %g\n", c.scenario.c_str(), c.beta[0]);
  std::printf("%6s %10s %10s %10s\n", "n", "ols", "diff p=1", "diff p=2");
  for (int n : {100, 500, 2000}) {
    const auto d = std::make_shared<const Design>(make_design(design_for_size(c, n)));
    const FieldSample s = Sampler(m, d).draw_one(c.beta, 2024);
    std::printf("%6d %10.4f %10.4f %10.4f\n", n, ols_diff(s, 0).beta_hat, ols_diff(s, 1).beta_hat,
                ols_diff(s, 2).beta_hat);
  }
}
