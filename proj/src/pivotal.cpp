#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "pgcov/errors.hpp"
#include "pgcov/solvers.hpp"

namespace pgcov {

double pivotal_lambda(const MatrixXd& z, double alpha0, double c, int draws,
                      Seed seed) {
  if (draws < 1) throw InputError("pivotal_lambda: B must be >= 1");
  if (!(alpha0 > 0.0 && alpha0 < 1.0)) {
    throw InputError("pivotal_lambda: alpha0 must lie in (0, 1)");
  }
  if (!(c > 1.0)) throw InputError("pivotal_lambda: c must exceed 1");
  const Index n = z.rows();
  if (n < 2) throw InputError("pivotal_lambda: need n >= 2");
  if (z.cols() == 0) return 0.0;

  const double scale = 2.0 / (static_cast<double>(n) * static_cast<double>(n - 1));
  Rng rng(seed, Lane::kPivotal);
  VectorXd r(n);
  std::iota(r.data(), r.data() + n, 1.0);
  VectorXd s(z.cols());
  std::vector<double> norms(static_cast<std::size_t>(draws));

  for (int b = 0; b < draws; ++b) {
    for (Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
      std::swap(r(i), r(j));
    }
    s.noalias() = z.transpose() * r;
    norms[static_cast<std::size_t>(b)] = scale * s.cwiseAbs().maxCoeff();
  }

  // Type-7 sample quantile.
  std::sort(norms.begin(), norms.end());
  const double h = (static_cast<double>(draws) - 1.0) * (1.0 - alpha0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, norms.size() - 1);
  const double q = norms[lo] + (h - static_cast<double>(lo)) * (norms[hi] - norms[lo]);
  return c * q;
}

}  // namespace pgcov
