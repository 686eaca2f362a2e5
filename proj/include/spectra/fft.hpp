#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace spectra::fft {

using cplx = std::complex<double>;

enum class Direction { Forward, Backward };

/// In-place unnormalized 1D DFT. Forward uses exp(-2 pi i k n / N), Backward
/// exp(+2 pi i k n / N). Radix-2 for powers of two, Bluestein otherwise.
void transform(std::span<cplx> data, Direction dir);

/// In-place unnormalized 2D DFT over a row-major height x width array.
void transform2d(std::span<cplx> data, std::size_t height, std::size_t width, Direction dir);

}  // namespace spectra::fft
