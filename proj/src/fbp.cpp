#include "superct/fbp.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace superct {

namespace {

std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

Image fbp(const Sinogram& sino, const FanBeamGeometry& geom, FilterKind filter) {
    if (sino.n_views != geom.n_views || sino.n_dets != geom.n_dets)
        throw std::invalid_argument("fbp: sinogram dims do not match geometry");
    if (geom.n_views < 2) throw std::invalid_argument("fbp: need at least 2 views");
    geom.validate();

    const int nd = geom.n_dets, nv = geom.n_views;
    const double sod = geom.source_to_center_mm;
    // Detector rebinned to a virtual line through the isocenter.
    const double ds = geom.det_spacing_mm * sod / geom.source_to_det_mm;
    const double det_center = 0.5 * (nd - 1) - geom.det_offset_cells;

    const int pad = next_pow2(2 * nd);
    const int nfreq = pad / 2 + 1;

    // Band-limited ramp kernel over the full padded window, wrapped for
    // circular convolution (truncating the tail causes DC cupping).
    std::vector<double> h(static_cast<size_t>(pad), 0.0);
    h[0] = 1.0 / (4.0 * ds * ds);
    for (int k = 1; k <= pad / 2; k += 2) {
        const double v = -1.0 / (std::numbers::pi * std::numbers::pi * k * k * ds * ds);
        h[static_cast<size_t>(k)] = v;
        h[static_cast<size_t>(pad - k)] = v;
    }

    std::vector<double> response(static_cast<size_t>(nfreq));
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        std::vector<std::complex<double>> hf(static_cast<size_t>(nfreq));
        fftw_plan plan = fftw_plan_dft_r2c_1d(
            pad, h.data(), reinterpret_cast<fftw_complex*>(hf.data()), FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
        for (int k = 0; k < nfreq; ++k) {
            double r = hf[static_cast<size_t>(k)].real();  // symmetric kernel: real spectrum
            if (filter == FilterKind::Hann) {
                const double f = static_cast<double>(k) / (nfreq - 1);
                r *= 0.5 * (1.0 + std::cos(std::numbers::pi * f));
            }
            response[static_cast<size_t>(k)] = r / pad;  // fold in inverse-FFT scale
        }
    }

    // Filtered projections on a sinc-upsampled detector grid (zero-extended
    // spectrum) so the linear interpolation below stays accurate.
    constexpr int kUp = 2;
    const int fine = pad * kUp;
    const int nfine = nd * kUp;
    std::vector<double> q(static_cast<size_t>(nv) * nfine);
    {
        fftw_plan fwd, inv;
        std::vector<double> proto_r(static_cast<size_t>(fine));
        std::vector<std::complex<double>> proto_c(static_cast<size_t>(fine / 2 + 1));
        {
            std::lock_guard<std::mutex> lock(fftw_plan_mutex());
            fwd = fftw_plan_dft_r2c_1d(pad, proto_r.data(),
                                       reinterpret_cast<fftw_complex*>(proto_c.data()),
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
            inv = fftw_plan_dft_c2r_1d(fine, reinterpret_cast<fftw_complex*>(proto_c.data()),
                                       proto_r.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
        }
#pragma omp parallel
        {
            std::vector<double> buf(static_cast<size_t>(fine));
            std::vector<std::complex<double>> spec(static_cast<size_t>(fine / 2 + 1));
#pragma omp for schedule(static)
            for (int view = 0; view < nv; ++view) {
                const double* row = sino.data() + static_cast<size_t>(view) * nd;
                for (int i = 0; i < nd; ++i) {
                    const double s = (i - det_center) * ds;
                    buf[static_cast<size_t>(i)] = row[i] * sod / std::sqrt(sod * sod + s * s);
                }
                std::fill(buf.begin() + nd, buf.begin() + pad, 0.0);
                fftw_execute_dft_r2c(fwd, buf.data(), reinterpret_cast<fftw_complex*>(spec.data()));
                for (int k = 0; k < nfreq; ++k)
                    spec[static_cast<size_t>(k)] *= response[static_cast<size_t>(k)];
                spec[static_cast<size_t>(nfreq - 1)] *= 0.5;  // shared Nyquist bin
                std::fill(spec.begin() + nfreq, spec.end(), std::complex<double>(0.0, 0.0));
                fftw_execute_dft_c2r(inv, reinterpret_cast<fftw_complex*>(spec.data()), buf.data());
                double* out = q.data() + static_cast<size_t>(view) * nfine;
                for (int i = 0; i < nfine; ++i) out[i] = buf[static_cast<size_t>(i)] * ds;
            }
        }
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(inv);
    }

    // Distance-weighted backprojection; full-scan redundancy gives the 1/2.
    Image out(geom.image_rows, geom.image_cols, geom.pixel_size_mm);
    const double scale = std::numbers::pi / nv;  // (2*pi/nv) * (1/2)
    std::vector<double> cosb(static_cast<size_t>(nv)), sinb(static_cast<size_t>(nv));
    for (int v = 0; v < nv; ++v) {
        cosb[static_cast<size_t>(v)] = std::cos(geom.angles_rad[static_cast<size_t>(v)]);
        sinb[static_cast<size_t>(v)] = std::sin(geom.angles_rad[static_cast<size_t>(v)]);
    }
    const double px = geom.pixel_size_mm;
    const double half_w = 0.5 * geom.image_cols * px;
    const double half_h = 0.5 * geom.image_rows * px;

#pragma omp parallel for schedule(static)
    for (int r = 0; r < geom.image_rows; ++r) {
        const double y = half_h - (r + 0.5) * px;
        double* orow = out.data() + static_cast<size_t>(r) * geom.image_cols;
        for (int c = 0; c < geom.image_cols; ++c) {
            const double x = (c + 0.5) * px - half_w;
            double acc = 0.0;
            for (int v = 0; v < nv; ++v) {
                const double denom = sod - (x * cosb[static_cast<size_t>(v)] + y * sinb[static_cast<size_t>(v)]);
                if (denom <= 1e-9) continue;
                const double sp = sod * (-x * sinb[static_cast<size_t>(v)] + y * cosb[static_cast<size_t>(v)]) / denom;
                const double u = denom / sod;
                const double fi = (sp / ds + det_center) * kUp;
                const int i0 = static_cast<int>(std::floor(fi));
                if (i0 < -1 || i0 > nfine - 1) continue;
                const double frac = fi - i0;
                const double* qrow = q.data() + static_cast<size_t>(v) * nfine;
                const double q0 = i0 >= 0 ? qrow[i0] : 0.0;
                const double q1 = i0 + 1 < nfine ? qrow[i0 + 1] : 0.0;
                acc += ((1.0 - frac) * q0 + frac * q1) / (u * u);
            }
            orow[c] = acc * scale;
        }
    }
    return out;
}

}  // namespace superct
