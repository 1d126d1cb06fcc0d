#include "splatcamo/ssim.hpp"

#include <array>
#include <cmath>

namespace splatcamo {

namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kSsimWindow> gaussian_kernel() {
  std::array<double, kSsimWindow> g{};
  const double sigma = 1.5;
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - (kSsimWindow - 1) / 2.0;
    g[i] = std::exp(-0.5 * d * d / (sigma * sigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

using Plane = std::vector<double>;

// Valid-mode separable convolution: (h, w) -> (h - 10, w - 10).
Plane conv_valid(const Plane& in, int w, int h, const std::array<double, kSsimWindow>& g) {
  const int ww = w - kSsimWindow + 1;
  const int hh = h - kSsimWindow + 1;
  Plane tmp(static_cast<size_t>(h) * ww, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ww; ++x) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) s += g[k] * in[static_cast<size_t>(y) * w + x + k];
      tmp[static_cast<size_t>(y) * ww + x] = s;
    }
  }
  Plane out(static_cast<size_t>(hh) * ww, 0.0);
  for (int y = 0; y < hh; ++y) {
    for (int x = 0; x < ww; ++x) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) s += g[k] * tmp[static_cast<size_t>(y + k) * ww + x];
      out[static_cast<size_t>(y) * ww + x] = s;
    }
  }
  return out;
}

// Adjoint of conv_valid: scatters a window-grid field back onto the image grid.
Plane conv_adjoint(const Plane& field, int w, int h, const std::array<double, kSsimWindow>& g) {
  const int ww = w - kSsimWindow + 1;
  const int hh = h - kSsimWindow + 1;
  Plane tmp(static_cast<size_t>(hh) * w, 0.0);
  for (int y = 0; y < hh; ++y) {
    for (int x = 0; x < ww; ++x) {
      const double v = field[static_cast<size_t>(y) * ww + x];
      if (v == 0.0) continue;
      for (int k = 0; k < kSsimWindow; ++k) tmp[static_cast<size_t>(y) * w + x + k] += g[k] * v;
    }
  }
  Plane out(static_cast<size_t>(h) * w, 0.0);
  for (int y = 0; y < hh; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = tmp[static_cast<size_t>(y) * w + x];
      if (v == 0.0) continue;
      for (int k = 0; k < kSsimWindow; ++k) out[static_cast<size_t>(y + k) * w + x] += g[k] * v;
    }
  }
  return out;
}

Plane channel_plane(const Image& img, int ch) {
  Plane p(static_cast<size_t>(img.width()) * img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      p[static_cast<size_t>(y) * img.width() + x] = img.pixel(x, y)[ch];
  return p;
}

double ssim_impl(const Image& a, const Image& b, Image* grad) {
  require(a.same_dims(b), "ssim: image dimension mismatch");
  require(a.width() >= kSsimWindow && a.height() >= kSsimWindow,
          "ssim: images must be at least 11x11");
  const int w = a.width(), h = a.height();
  const int ww = w - kSsimWindow + 1;
  const int hh = h - kSsimWindow + 1;
  const size_t n_win = static_cast<size_t>(ww) * hh;
  const auto g = gaussian_kernel();

  if (grad) *grad = Image(w, h);

  double total = 0.0;
  for (int ch = 0; ch < 3; ++ch) {
    const Plane pa = channel_plane(a, ch);
    const Plane pb = channel_plane(b, ch);
    Plane paa(pa.size()), pbb(pa.size()), pab(pa.size());
    for (size_t i = 0; i < pa.size(); ++i) {
      paa[i] = pa[i] * pa[i];
      pbb[i] = pb[i] * pb[i];
      pab[i] = pa[i] * pb[i];
    }
    const Plane mu_a = conv_valid(pa, w, h, g);
    const Plane mu_b = conv_valid(pb, w, h, g);
    const Plane e_aa = conv_valid(paa, w, h, g);
    const Plane e_bb = conv_valid(pbb, w, h, g);
    const Plane e_ab = conv_valid(pab, w, h, g);

    Plane d_mu(n_win, 0.0), d_eaa(n_win, 0.0), d_eab(n_win, 0.0);
    double ch_sum = 0.0;
    for (size_t i = 0; i < n_win; ++i) {
      const double ma = mu_a[i], mb = mu_b[i];
      const double va = e_aa[i] - ma * ma;
      const double vb = e_bb[i] - mb * mb;
      const double cov = e_ab[i] - ma * mb;
      const double a1 = 2.0 * ma * mb + kC1;
      const double a2 = 2.0 * cov + kC2;
      const double b1 = ma * ma + mb * mb + kC1;
      const double b2 = va + vb + kC2;
      ch_sum += (a1 * a2) / (b1 * b2);
      if (grad) {
        const double inv = 1.0 / (b1 * b2);
        const double s = a1 * a2 * inv;
        d_eab[i] = 2.0 * a1 * inv;
        d_eaa[i] = -s / b2;
        d_mu[i] = 2.0 * mb * a2 * inv - 2.0 * ma * s / b1  // through a1, b1
                  - mb * d_eab[i]                          // cov = e_ab - ma*mb
                  + 2.0 * ma * s / b2;                     // va = e_aa - ma^2
      }
    }
    total += ch_sum / static_cast<double>(n_win);

    if (grad) {
      const Plane adj_mu = conv_adjoint(d_mu, w, h, g);
      const Plane adj_eaa = conv_adjoint(d_eaa, w, h, g);
      const Plane adj_eab = conv_adjoint(d_eab, w, h, g);
      const double norm = 1.0 / (3.0 * static_cast<double>(n_win));
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const size_t i = static_cast<size_t>(y) * w + x;
          grad->pixel(x, y)[ch] =
              norm * (adj_mu[i] + 2.0 * pa[i] * adj_eaa[i] + pb[i] * adj_eab[i]);
        }
      }
    }
  }
  return total / 3.0;
}

}  // namespace

double ssim(const Image& a, const Image& b) { return ssim_impl(a, b, nullptr); }

double ssim_with_gradient(const Image& a, const Image& b, Image& grad_wrt_a) {
  return ssim_impl(a, b, &grad_wrt_a);
}

}  // namespace splatcamo
