#pragma once

#include "splatcamo/image.hpp"

namespace splatcamo {

/// Single-scale SSIM on [0,1] data: 11x11 Gaussian window (sigma 1.5),
/// C1 = 0.01^2, C2 = 0.03^2, computed per channel over all fully-interior
/// window positions and averaged over channels and positions. Throws on
/// dimension mismatch or images smaller than the window.
double ssim(const Image& a, const Image& b);

/// Same value plus d(ssim)/d(a) as an image-shaped gradient field.
double ssim_with_gradient(const Image& a, const Image& b, Image& grad_wrt_a);

inline constexpr int kSsimWindow = 11;

}  // namespace splatcamo
