#include "ponder/grad_check.hpp"

#include <cmath>
#include <map>
#include <vector>

namespace ponder {

GradCheckResult grad_check(const std::function<Tensor(ParamStore&)>& f, ParamStore& params,
                           double h) {
  if (h <= 0) throw UsageError("grad_check: h must be positive");

  Tensor loss = f(params);
  if (!loss.is_scalar()) throw UsageError("grad_check: f must return a scalar");
  if (!all_finite(loss)) throw NumericError("grad_check: f returned a non-finite value");
  backward(loss, &params);

  std::map<std::string, std::vector<double>> analytic;
  params.for_each([&](const std::string& name, const Tensor& t) { analytic[name] = t.grad(); });

  GradCheckResult result;
  params.for_each([&](const std::string& name, Tensor& t) {
    std::vector<double>& theta = t.mutable_values();
    for (size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      double plus, minus;
      {
        NoGradGuard ng;
        theta[i] = saved + h;
        plus = f(params).item();
        theta[i] = saved - h;
        minus = f(params).item();
        theta[i] = saved;
      }
      if (!std::isfinite(plus) || !std::isfinite(minus))
        throw NumericError("grad_check: non-finite value during finite differences");
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic[name][i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = name;
        result.worst_index = static_cast<int>(i);
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  });
  return result;
}

}  // namespace ponder
