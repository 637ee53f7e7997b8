#pragma once

// Thin FFTW wrapper. Plans are created once per (shape, axis, direction) and
// cached; planning is serialized, execution is reentrant.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

namespace xphase::fft {

using cplx = std::complex<double>;

enum class Direction { forward, backward };

namespace detail {

struct PlanCache {
  std::mutex mutex;
  // key: rows, cols, axis (0 = along rows' index i, 1 = along j, 2 = both), sign
  std::map<std::tuple<std::size_t, std::size_t, int, int>, fftw_plan> plans;

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }
};

inline PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

inline fftw_plan get_plan(std::size_t rows, std::size_t cols, int axis, Direction dir) {
  const int sign = dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD;
  auto& c = cache();
  std::lock_guard lock(c.mutex);
  const auto key = std::make_tuple(rows, cols, axis, sign);
  if (auto it = c.plans.find(key); it != c.plans.end()) return it->second;

  std::vector<cplx> scratch(rows * cols);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  fftw_plan plan = nullptr;
  if (axis == 2) {
    plan = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf, sign, flags);
  } else if (axis == 1) {
    // Transform each row (contiguous, length cols).
    int n[] = {static_cast<int>(cols)};
    plan = fftw_plan_many_dft(1, n, static_cast<int>(rows), buf, nullptr, 1, static_cast<int>(cols),
                              buf, nullptr, 1, static_cast<int>(cols), sign, flags);
  } else {
    // Transform each column (stride cols, length rows).
    int n[] = {static_cast<int>(rows)};
    plan = fftw_plan_many_dft(1, n, static_cast<int>(cols), buf, nullptr, static_cast<int>(cols), 1,
                              buf, nullptr, static_cast<int>(cols), 1, sign, flags);
  }
  c.plans.emplace(key, plan);
  return plan;
}

inline void execute(fftw_plan plan, std::span<cplx> data) {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, buf, buf);
}

}  // namespace detail

/// Unnormalized in-place 1D DFT. forward: X_k = sum_j x_j exp(-2 pi i jk/n).
inline void transform(std::span<cplx> data, Direction dir) {
  detail::execute(detail::get_plan(1, data.size(), 1, dir), data);
}

/// Unnormalized in-place 2D DFT of a row-major rows x cols array.
inline void transform_2d(std::span<cplx> data, std::size_t rows, std::size_t cols, Direction dir) {
  detail::execute(detail::get_plan(rows, cols, 2, dir), data);
}

/// Unnormalized 1D DFTs along one axis of a row-major array.
/// axis 0 transforms each column (index i), axis 1 each row (index j).
inline void transform_axis(std::span<cplx> data, std::size_t rows, std::size_t cols, int axis,
                           Direction dir) {
  detail::execute(detail::get_plan(rows, cols, axis, dir), data);
}

/// Signed DFT index for bin k: k for k < n/2, k - n otherwise (Nyquist maps to -n/2).
inline long signed_index(std::size_t k, std::size_t n) {
  return k < n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

}  // namespace xphase::fft
