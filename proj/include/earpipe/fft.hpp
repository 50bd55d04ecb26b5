#pragma once

#include <complex>
#include <span>
#include <vector>

// Thin FFTW wrappers. Plans are cached per (size, kind) and reused.
namespace earpipe::fft {

using cplx = std::complex<double>;

// Real-to-complex forward transform; returns n/2 + 1 bins, unnormalized.
std::vector<cplx> rfft(std::span<const double> x);

// Inverse of rfft for a length-n real signal; includes the 1/n factor.
std::vector<double> irfft(std::span<const cplx> spectrum, std::size_t n);

// Full complex transforms. The inverse includes the 1/n factor.
std::vector<cplx> fft(std::span<const cplx> x);
std::vector<cplx> ifft(std::span<const cplx> spectrum);

}  // namespace earpipe::fft
