#pragma once

// Minimal RAII wrapper around an in-place complex FFTW plan pair.

#include <fftw3.h>

#include <cstddef>
#include <mutex>
#include <span>

#include "qpot/grid.hpp"

namespace qpot::detail {

class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n) {
    // The FFTW planner is not re-entrant; execution is.
    std::lock_guard lock(planner_mutex());
    buf_ = fftw_alloc_complex(n);
    fwd_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  std::span<cplx> data() noexcept { return {reinterpret_cast<cplx*>(buf_), n_}; }
  void forward() noexcept { fftw_execute(fwd_); }
  /// Unnormalised: forward then backward multiplies by n.
  void backward() noexcept { fftw_execute(bwd_); }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  std::size_t n_;
  fftw_complex* buf_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

/// Angular wavenumbers in FFTW output order for a periodic grid.
inline std::vector<double> wavenumbers(const Grid1D& g) {
  const std::size_t n = g.size();
  std::vector<double> k(n);
  const double base = 2.0 * 3.141592653589793238462643383279502884 / g.length();
  for (std::size_t j = 0; j < n; ++j) {
    const auto s = static_cast<double>(j);
    k[j] = base * (j < (n + 1) / 2 ? s : s - static_cast<double>(n));
  }
  return k;
}

}  // namespace qpot::detail
