#pragma once
/// @file fft.hpp
/// @brief Thin FFTW wrapper: full-spectrum complex transforms with cached
///        plans.  Plan creation is serialized (FFTW planning is not
///        thread-safe); execution is reentrant.

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <vector>

#include "nsv/grid.hpp"

namespace nsv {

using cplx = std::complex<double>;

namespace detail {

struct PlanKey {
  int dim;
  int n;
  int sign;
  bool operator<(const PlanKey& o) const {
    if (dim != o.dim) return dim < o.dim;
    if (n != o.n) return n < o.n;
    return sign < o.sign;
  }
};

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache c;
    return c;
  }

  fftw_plan get(const Grid& g, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    PlanKey key{g.dim, g.n, sign};
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<cplx> buf(g.size());
    int dims[3] = {g.n, g.n, g.n};
    // FFTW_ESTIMATE keeps planning deterministic; FFTW_UNALIGNED lets the
    // plan run on any caller buffer.
    fftw_plan p = fftw_plan_dft(
        g.dim, dims, reinterpret_cast<fftw_complex*>(buf.data()),
        reinterpret_cast<fftw_complex*>(buf.data()), sign,
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_[key] = p;
    return p;
  }

 private:
  PlanCache() = default;
  std::mutex mu_;
  std::map<PlanKey, fftw_plan> plans_;
};

}  // namespace detail

/// Forward transform of real nodal data: coefficients of exp(i k.x),
/// normalized by 1/N^d so a unit cosine yields 0.5 at +/-k.
inline void fft_forward(const Grid& g, const std::vector<double>& nodal,
                        std::vector<cplx>& spec) {
  const std::int64_t sz = g.size();
  spec.resize(sz);
  for (std::int64_t i = 0; i < sz; ++i) spec[i] = cplx(nodal[i], 0.0);
  fftw_plan p = detail::PlanCache::instance().get(g, FFTW_FORWARD);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(spec.data()),
                   reinterpret_cast<fftw_complex*>(spec.data()));
  const double scale = 1.0 / double(sz);
  for (std::int64_t i = 0; i < sz; ++i) spec[i] *= scale;
}

/// Inverse transform to real nodal values (real part of the synthesis).
/// The input spectrum is left untouched; the working copy is per-thread.
inline void fft_inverse(const Grid& g, const std::vector<cplx>& spec,
                        std::vector<double>& nodal) {
  const std::int64_t sz = g.size();
  static thread_local std::vector<cplx> buf;
  buf = spec;
  fftw_plan p = detail::PlanCache::instance().get(g, FFTW_BACKWARD);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(buf.data()),
                   reinterpret_cast<fftw_complex*>(buf.data()));
  nodal.resize(sz);
  for (std::int64_t i = 0; i < sz; ++i) nodal[i] = buf[i].real();
}

}  // namespace nsv
