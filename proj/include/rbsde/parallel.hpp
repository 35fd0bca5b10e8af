#pragma once

#include "rbsde/types.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace rbsde {

// 0 means hardware concurrency.
int resolve_threads(int requested);

// Calls f(i) for every i in [0, n); work is claimed in chunks by up to `threads` workers.
// Results must be written to per-index slots so the outcome does not depend on scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& f);

// Neumaier-compensated sum in index order.
double compensated_sum(const std::vector<double>& xs);

// Mean and standard error of i.i.d. samples.
Estimate summarize(const std::vector<double>& xs, double t_max = 0.0);

// Mean of exp(log_w[i]) * f[i] with a max-shift on the exponents.
Estimate summarize_weighted(const std::vector<double>& log_w, const std::vector<double>& f, double t_max = 0.0);

}  // namespace rbsde
