#include "earpipe/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "earpipe/error.hpp"

namespace earpipe::fft {
namespace {

enum class Kind { R2C, C2R, Forward, Backward };

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(Kind kind, int n) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(kind, n);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    // Planning with scratch buffers; execution uses the new-array interface.
    std::vector<double> rbuf(static_cast<std::size_t>(n) + 2);
    std::vector<cplx> cbuf(static_cast<std::size_t>(n) + 1);
    auto* c = reinterpret_cast<fftw_complex*>(cbuf.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = nullptr;
    switch (kind) {
      case Kind::R2C: plan = fftw_plan_dft_r2c_1d(n, rbuf.data(), c, flags); break;
      case Kind::C2R: plan = fftw_plan_dft_c2r_1d(n, c, rbuf.data(), flags); break;
      case Kind::Forward: {
        std::vector<cplx> out(static_cast<std::size_t>(n));
        plan = fftw_plan_dft_1d(n, c, reinterpret_cast<fftw_complex*>(out.data()),
                                FFTW_FORWARD, flags);
        break;
      }
      case Kind::Backward: {
        std::vector<cplx> out(static_cast<std::size_t>(n));
        plan = fftw_plan_dft_1d(n, c, reinterpret_cast<fftw_complex*>(out.data()),
                                FFTW_BACKWARD, flags);
        break;
      }
    }
    if (plan == nullptr) throw Error(ErrorKind::Parameter, "fftw planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<Kind, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

std::vector<cplx> rfft(std::span<const double> x) {
  const auto n = x.size();
  if (n == 0) return {};
  std::vector<double> in(x.begin(), x.end());
  std::vector<cplx> out(n / 2 + 1);
  fftw_execute_dft_r2c(cache().get(Kind::R2C, static_cast<int>(n)), in.data(),
                       as_fftw(out.data()));
  return out;
}

std::vector<double> irfft(std::span<const cplx> spectrum, std::size_t n) {
  if (n == 0) return {};
  require(spectrum.size() == n / 2 + 1, "irfft: spectrum size must be n/2+1");
  std::vector<cplx> in(spectrum.begin(), spectrum.end());  // c2r clobbers input
  std::vector<double> out(n);
  fftw_execute_dft_c2r(cache().get(Kind::C2R, static_cast<int>(n)), as_fftw(in.data()),
                       out.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : out) v *= scale;
  return out;
}

std::vector<cplx> fft(std::span<const cplx> x) {
  const auto n = x.size();
  if (n == 0) return {};
  std::vector<cplx> in(x.begin(), x.end());
  std::vector<cplx> out(n);
  fftw_execute_dft(cache().get(Kind::Forward, static_cast<int>(n)), as_fftw(in.data()),
                   as_fftw(out.data()));
  return out;
}

std::vector<cplx> ifft(std::span<const cplx> spectrum) {
  const auto n = spectrum.size();
  if (n == 0) return {};
  std::vector<cplx> in(spectrum.begin(), spectrum.end());
  std::vector<cplx> out(n);
  fftw_execute_dft(cache().get(Kind::Backward, static_cast<int>(n)), as_fftw(in.data()),
                   as_fftw(out.data()));
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : out) v *= scale;
  return out;
}

}  // namespace earpipe::fft
