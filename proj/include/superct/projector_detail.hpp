#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "superct/operators.hpp"

namespace superct {

// Incremental Siddon traversal from the source to one detector cell.
// Emits exact intersection lengths (mm); zero-length crossings are dropped,
// rays missing the support emit nothing.
template <class Visit>
void FanBeamProjector::trace_ray(int view, int det, Visit&& visit) const {
    const double px = geom_.pixel_size_mm;
    const int rows = geom_.image_rows, cols = geom_.image_cols;
    const double half_w = 0.5 * cols * px;
    const double half_h = 0.5 * rows * px;

    const double sx = src_x_[static_cast<size_t>(view)];
    const double sy = src_y_[static_cast<size_t>(view)];
    const double s = (det - 0.5 * (geom_.n_dets - 1) + geom_.det_offset_cells) * geom_.det_spacing_mm;
    // Detector cell center: behind the isocenter, offset along the line.
    const double ex = sx * (1.0 - geom_.source_to_det_mm / geom_.source_to_center_mm) +
                      s * dir_x_[static_cast<size_t>(view)];
    const double ey = sy * (1.0 - geom_.source_to_det_mm / geom_.source_to_center_mm) +
                      s * dir_y_[static_cast<size_t>(view)];

    const double dx = ex - sx, dy = ey - sy;
    const double ray_len = std::hypot(dx, dy);

    constexpr double kInf = std::numeric_limits<double>::infinity();
    double tmin = 0.0, tmax = 1.0;
    auto clip = [&](double sc, double d, double lo, double hi) {
        if (std::fabs(d) < 1e-300) return sc >= lo && sc <= hi;
        double t1 = (lo - sc) / d, t2 = (hi - sc) / d;
        if (t1 > t2) std::swap(t1, t2);
        tmin = std::max(tmin, t1);
        tmax = std::min(tmax, t2);
        return true;
    };
    if (!clip(sx, dx, -half_w, half_w)) return;
    if (!clip(sy, dy, -half_h, half_h)) return;
    if (!(tmin < tmax)) return;

    // Entry cell.
    const double ix = sx + tmin * dx, iy = sy + tmin * dy;
    int col = static_cast<int>(std::floor((ix + half_w) / px));
    int row = static_cast<int>(std::floor((half_h - iy) / px));
    col = std::clamp(col, 0, cols - 1);
    row = std::clamp(row, 0, rows - 1);

    // Next boundary-crossing parameters along each axis.
    double tx = kInf, dtx = kInf;
    int stepc = 0;
    if (dx > 0.0) {
        stepc = 1;
        tx = ((col + 1) * px - half_w - sx) / dx;
        dtx = px / dx;
    } else if (dx < 0.0) {
        stepc = -1;
        tx = (col * px - half_w - sx) / dx;
        dtx = -px / dx;
    }
    double ty = kInf, dty = kInf;
    int stepr = 0;
    if (dy > 0.0) {
        stepr = -1;  // y grows upward, row index grows downward
        ty = (half_h - row * px - sy) / dy;
        dty = px / dy;
    } else if (dy < 0.0) {
        stepr = 1;
        ty = (half_h - (row + 1) * px - sy) / dy;
        dty = -px / dy;
    }

    double t = tmin;
    while (t < tmax) {
        const double tc = std::min(tx, ty);
        const double tstop = std::min(tc, tmax);
        const double len = (tstop - t) * ray_len;
        if (len > 0.0) visit(static_cast<size_t>(row) * cols + col, len);
        t = tstop;
        if (tc >= tmax) break;
        if (tx < ty) {
            col += stepc;
            tx += dtx;
        } else if (ty < tx) {
            row += stepr;
            ty += dty;
        } else {
            col += stepc;
            tx += dtx;
            row += stepr;
            ty += dty;
        }
        if (col < 0 || col >= cols || row < 0 || row >= rows) break;
    }
}

}  // namespace superct
