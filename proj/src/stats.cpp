#include "stein/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace stein {

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 16) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (s.count == 0) return s;
  s.mean = pairwise_sum(values) / static_cast<double>(s.count);
  if (s.count < 2) return s;
  std::vector<double> sq(values.size());
  std::transform(values.begin(), values.end(), sq.begin(), [&](double v) { return (v - s.mean) * (v - s.mean); });
  s.var = pairwise_sum(sq) / static_cast<double>(s.count - 1);
  s.sd = std::sqrt(s.var);
  s.se = s.sd / std::sqrt(static_cast<double>(s.count));
  return s;
}

VarianceSummary summarize_variance(std::span<const double> values) {
  VarianceSummary out;
  const Summary base = summarize(values);
  out.mean = base.mean;
  out.var = base.var;
  if (base.count < 2) return out;
  std::vector<double> sq(values.size());
  std::transform(values.begin(), values.end(), sq.begin(),
                 [&](double v) { return (v - base.mean) * (v - base.mean); });
  out.var_se = summarize(sq).se;
  return out;
}

namespace {
std::atomic<unsigned> g_threads{0};
}

unsigned default_threads() {
  const unsigned configured = g_threads.load();
  if (configured > 0) return configured;
  return std::max(1u, std::thread::hardware_concurrency());
}

void set_default_threads(unsigned threads) { g_threads.store(threads); }

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, unsigned threads) {
  if (threads == 0) threads = default_threads();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      if (failed.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace stein
