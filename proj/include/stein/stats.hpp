#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace stein {

// Index-ordered pairwise summation: the result does not depend on threading.
double pairwise_sum(std::span<const double> values);

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double var = 0.0;  // unbiased sample variance
  double sd = 0.0;
  double se = 0.0;   // standard error of the mean
};

Summary summarize(std::span<const double> values);

// Sample variance with the standard error of that variance estimate, obtained
// as the SE of the mean of squared deviations.
struct VarianceSummary {
  double mean = 0.0;
  double var = 0.0;
  double var_se = 0.0;
};

VarianceSummary summarize_variance(std::span<const double> values);

// Worker count used when a caller passes threads = 0.
unsigned default_threads();
void set_default_threads(unsigned threads);

// Runs body(i) for i in [0, count). Results must be written by index; the
// order in which indices execute is unspecified. The first exception thrown
// by any body is rethrown after all workers stop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, unsigned threads = 0);

}  // namespace stein
