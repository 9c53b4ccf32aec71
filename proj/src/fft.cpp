#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "pohlab/error.hpp"

namespace pohlab::detail {
namespace {

// The FFTW planner is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once per shape under a lock and reused.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int width, int height, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(width, height, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<fftw_complex> scratch(static_cast<std::size_t>(width) * height);
    fftw_plan plan = fftw_plan_dft_2d(height, width, scratch.data(), scratch.data(), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw UsageError("fftw could not create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

void fft2d(std::span<std::complex<double>> data, int width, int height, bool inverse) {
  if (data.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw UsageError("fft2d: buffer size does not match dimensions");
  }
  fftw_plan plan = cache().get(width, height, inverse ? FFTW_BACKWARD : FFTW_FORWARD);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, buf, buf);
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(data.size());
    for (auto& v : data) v *= scale;
  }
}

}  // namespace pohlab::detail
