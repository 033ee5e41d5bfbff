#include "diffsim/optim/batch.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace diffsim::optim {

std::vector<double> clip_gradient(std::span<const double> g, double bound) {
  if (!(bound > 0.0)) throw std::invalid_argument("clip bound must be positive");
  std::vector<double> out(g.begin(), g.end());
  for (double& x : out) x = std::clamp(x, -bound, bound);
  return out;
}

EvalResult batch_evaluate(const Model& model, std::span<const double> params,
                          std::span<const std::uint64_t> seeds, const BatchOptions& options) {
  if (seeds.empty()) throw std::invalid_argument("batch_evaluate: empty seed list");
  if (params.size() != model.parameter_count()) {
    throw std::invalid_argument("batch_evaluate: parameter count mismatch");
  }
  const std::size_t n = seeds.size();
  std::vector<RunResult> runs(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        runs[i] = model.run(params, seeds[i], options.needs_gradient);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return seeds[a] < seeds[b]; });

  EvalResult result;
  result.per_run.reserve(n);
  for (const auto& r : runs) result.per_run.push_back(r.objective);
  double sum = 0.0;
  for (std::size_t i : order) sum += runs[i].objective;
  result.objective = sum / static_cast<double>(n);

  if (options.needs_gradient) {
    std::vector<double> g(params.size(), 0.0);
    for (std::size_t i : order) {
      if (runs[i].gradient.size() != g.size()) {
        throw std::logic_error("batch_evaluate: model returned a gradient of the wrong length");
      }
      const std::vector<double> clipped = clip_gradient(runs[i].gradient, options.clip_bound);
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += clipped[j];
    }
    for (double& x : g) x /= static_cast<double>(n);
    result.gradient = std::move(g);
  }
  return result;
}

}  // namespace diffsim::optim
