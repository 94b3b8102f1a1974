#include "superct/regularizers.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "superct/kernels.hpp"

namespace superct {

double ep_potential(double t, double delta) {
    const double a = std::fabs(t / delta);
    return delta * delta * (a - std::log1p(a));
}

double ep_potential_deriv(double t, double delta) { return t / (1.0 + std::fabs(t / delta)); }

double ep_curvature(double t, double delta) { return 1.0 / (1.0 + std::fabs(t / delta)); }

namespace {

struct Offsets {
    int count;
    int dr[8];
    int dc[8];
};

Offsets neighbor_offsets(Neighborhood n) {
    if (n == Neighborhood::Four) return {4, {-1, 1, 0, 0}, {0, 0, -1, 1}};
    return {8, {-1, -1, -1, 0, 0, 1, 1, 1}, {-1, 0, 1, -1, 1, -1, 0, 1}};
}

inline double kap(const std::vector<double>& k, size_t idx) { return k.empty() ? 1.0 : k[idx]; }

void check_kappa(const Image& x, const EpParams& p) {
    if (!p.kappa.empty() && p.kappa.size() != x.size())
        throw std::invalid_argument("EP: kappa map does not match image dims");
    if (!(p.delta > 0.0)) throw std::invalid_argument("EP: delta must be positive");
}

}  // namespace

double ep_value(const Image& x, const EpParams& p) {
    check_kappa(x, p);
    const Offsets off = neighbor_offsets(p.neighborhood);
    const int rows = x.rows, cols = x.cols;
    const int nblocks = std::min(rows, 16);
    std::vector<double> partial(static_cast<size_t>(nblocks), 0.0);
#pragma omp parallel for schedule(static)
    for (int b = 0; b < nblocks; ++b) {
        double acc = 0.0;
        const int r0 = static_cast<int>(static_cast<long long>(b) * rows / nblocks);
        const int r1 = static_cast<int>(static_cast<long long>(b + 1) * rows / nblocks);
        for (int r = r0; r < r1; ++r) {
            for (int c = 0; c < cols; ++c) {
                const size_t j = static_cast<size_t>(r) * cols + c;
                const double xj = x.px[j], kj = kap(p.kappa, j);
                for (int t = 0; t < off.count; ++t) {
                    const int rr = r + off.dr[t], cc = c + off.dc[t];
                    if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
                    const size_t k = static_cast<size_t>(rr) * cols + cc;
                    acc += kj * kap(p.kappa, k) * ep_potential(xj - x.px[k], p.delta);
                }
            }
        }
        partial[static_cast<size_t>(b)] = acc;
    }
    double total = 0.0;
    for (double v : partial) total += v;
    return total;
}

Image ep_gradient(const Image& x, const EpParams& p) {
    check_kappa(x, p);
    const Offsets off = neighbor_offsets(p.neighborhood);
    const int rows = x.rows, cols = x.cols;
    Image g(rows, cols, x.pixel_size_mm);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const size_t j = static_cast<size_t>(r) * cols + c;
            const double xj = x.px[j], kj = kap(p.kappa, j);
            double acc = 0.0;
            for (int t = 0; t < off.count; ++t) {
                const int rr = r + off.dr[t], cc = c + off.dc[t];
                if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
                const size_t k = static_cast<size_t>(rr) * cols + cc;
                acc += kj * kap(p.kappa, k) * ep_potential_deriv(xj - x.px[k], p.delta);
            }
            g.px[j] = 2.0 * acc;
        }
    }
    return g;
}

std::vector<double> ep_curvature_diag(const Image& x, const EpParams& p) {
    check_kappa(x, p);
    const Offsets off = neighbor_offsets(p.neighborhood);
    const int rows = x.rows, cols = x.cols;
    std::vector<double> h(x.size(), 0.0);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const size_t j = static_cast<size_t>(r) * cols + c;
            const double xj = x.px[j], kj = kap(p.kappa, j);
            double acc = 0.0;
            for (int t = 0; t < off.count; ++t) {
                const int rr = r + off.dr[t], cc = c + off.dc[t];
                if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
                const size_t k = static_cast<size_t>(rr) * cols + cc;
                acc += kj * kap(p.kappa, k) * ep_curvature(xj - x.px[k], p.delta);
            }
            h[j] = 4.0 * acc;
        }
    }
    return h;
}

std::vector<double> kappa_map(const LinearOperator& A, const StatWeights& W, int rows, int cols) {
    const size_t np = A.domain_size();
    if (np != static_cast<size_t>(rows) * cols) throw std::invalid_argument("kappa_map: dims mismatch");
    if (W.size() != A.range_size()) throw std::invalid_argument("kappa_map: weight dims mismatch");
    std::vector<double> bw(np), b1(np);
    std::vector<double> ones(A.range_size(), 1.0);
    A.apply_adjoint(W.data(), bw.data());
    A.apply_adjoint(ones.data(), b1.data());
    std::vector<double> kappa(np, 0.0);
    for (size_t i = 0; i < np; ++i)
        kappa[i] = b1[i] > 0.0 ? std::sqrt(std::max(bw[i], 0.0) / b1[i]) : 0.0;
    return kappa;
}

std::vector<double> kappa_map(const FanBeamGeometry& geom, const StatWeights& W) {
    FanBeamProjector proj(geom);
    return kappa_map(proj, W, geom.image_rows, geom.image_cols);
}

std::vector<double> tau_weights(const std::vector<double>& kappa, int rows, int cols,
                                const PatchConfig& cfg) {
    const int gr = patch_grid_rows(rows, cfg);
    const int gc = patch_grid_cols(cols, cfg);
    const long n = static_cast<long>(gr) * gc;
    std::vector<double> tau(static_cast<size_t>(n), 1.0);
    if (kappa.empty()) return tau;
    if (kappa.size() != static_cast<size_t>(rows) * cols)
        throw std::invalid_argument("tau_weights: kappa dims mismatch");
    const double inv_m = 1.0 / (cfg.side * cfg.side);
    double mean = 0.0;
    for (int oy = 0; oy < gr; ++oy) {
        for (int ox = 0; ox < gc; ++ox) {
            double acc = 0.0;
            for (int r = 0; r < cfg.side; ++r) {
                const double* row = kappa.data() + static_cast<size_t>(oy * cfg.stride + r) * cols +
                                    ox * cfg.stride;
                for (int c = 0; c < cfg.side; ++c) acc += row[c] * row[c];
            }
            tau[static_cast<size_t>(oy) * gc + ox] = acc * inv_m;
            mean += acc * inv_m;
        }
    }
    mean /= static_cast<double>(n);
    if (mean <= 0.0) return std::vector<double>(static_cast<size_t>(n), 1.0);
    for (auto& t : tau) t /= mean;
    return tau;
}

void UltraRegState::refresh(const Image& x) {
    PatchMatrix X = extract_patches(x, bank->patch);
    sc = sparse_code_and_cluster(X, *bank, gamma, tau);
}

namespace {

// Per-cluster residual pass; calls sink(k, members, R) with R = O_k X_k - Z_k.
template <class Sink>
void cluster_residuals(const Image& x, const UltraRegState& st, Sink&& sink) {
    const TransformBank& bank = *st.bank;
    PatchMatrix X = extract_patches(x, bank.patch);
    if (st.sc.n != X.n) throw std::runtime_error("ultra state inconsistent with image");
    const int m = bank.m, K = bank.K;
    std::vector<std::vector<long>> members(static_cast<size_t>(K));
    for (long j = 0; j < X.n; ++j) members[static_cast<size_t>(st.sc.clusters[static_cast<size_t>(j)])].push_back(j);
    for (int k = 0; k < K; ++k) {
        const auto& idx = members[static_cast<size_t>(k)];
        if (idx.empty()) continue;
        const long nk = static_cast<long>(idx.size());
        std::vector<double> Xk(static_cast<size_t>(m) * nk), R(static_cast<size_t>(m) * nk, 0.0);
        for (int i = 0; i < m; ++i) {
            const double* xr = X.row(i);
            double* xo = Xk.data() + static_cast<size_t>(i) * nk;
            for (long t = 0; t < nk; ++t) xo[t] = xr[idx[static_cast<size_t>(t)]];
        }
        const double* om = bank.omegas[static_cast<size_t>(k)].data();
#pragma omp parallel for schedule(static)
        for (int i = 0; i < m; ++i) {
            double* out = R.data() + static_cast<size_t>(i) * nk;
            for (int j = 0; j < m; ++j)
                kern::axpy(static_cast<size_t>(nk), om[static_cast<size_t>(i) * m + j],
                           Xk.data() + static_cast<size_t>(j) * nk, out);
            const double* zr = st.sc.codes.data() + static_cast<size_t>(i) * st.sc.n;
            for (long t = 0; t < nk; ++t) out[t] -= zr[idx[static_cast<size_t>(t)]];
        }
        sink(k, idx, R);
    }
}

}  // namespace

double ultra_quad_value(const Image& x, const UltraRegState& st) {
    double total = 0.0;
    cluster_residuals(x, st, [&](int, const std::vector<long>& idx, const std::vector<double>& R) {
        const long nk = static_cast<long>(idx.size());
        const int m = st.bank->m;
        for (long t = 0; t < nk; ++t) {
            double acc = 0.0;
            for (int i = 0; i < m; ++i) {
                const double r = R[static_cast<size_t>(i) * nk + t];
                acc += r * r;
            }
            const double tau = st.tau.empty() ? 1.0 : st.tau[static_cast<size_t>(idx[static_cast<size_t>(t)])];
            total += tau * acc;
        }
    });
    return total;
}

double ultra_reg_value(const Image& x, const UltraRegState& st) {
    double total = ultra_quad_value(x, st);
    const double g2 = st.gamma * st.gamma;
    for (long j = 0; j < st.sc.n; ++j) {
        long nnz = 0;
        for (int i = 0; i < st.bank->m; ++i)
            if (st.sc.codes[static_cast<size_t>(i) * st.sc.n + j] != 0.0) ++nnz;
        const double tau = st.tau.empty() ? 1.0 : st.tau[static_cast<size_t>(j)];
        total += tau * g2 * static_cast<double>(nnz);
    }
    return total;
}

Image ultra_reg_gradient(const Image& x, const UltraRegState& st) {
    const TransformBank& bank = *st.bank;
    const int m = bank.m;
    PatchMatrix G(m, st.sc.n);
    cluster_residuals(x, st, [&](int k, const std::vector<long>& idx, const std::vector<double>& R) {
        const long nk = static_cast<long>(idx.size());
        const double* om = bank.omegas[static_cast<size_t>(k)].data();
        std::vector<double> OtR(static_cast<size_t>(m) * nk, 0.0);
#pragma omp parallel for schedule(static)
        for (int j = 0; j < m; ++j) {
            double* out = OtR.data() + static_cast<size_t>(j) * nk;
            for (int i = 0; i < m; ++i)
                kern::axpy(static_cast<size_t>(nk), om[static_cast<size_t>(i) * m + j],
                           R.data() + static_cast<size_t>(i) * nk, out);
        }
        for (int i = 0; i < m; ++i) {
            double* gr = G.row(i);
            const double* src = OtR.data() + static_cast<size_t>(i) * nk;
            for (long t = 0; t < nk; ++t) {
                const long j = idx[static_cast<size_t>(t)];
                const double tau = st.tau.empty() ? 1.0 : st.tau[static_cast<size_t>(j)];
                gr[j] = 2.0 * tau * src[t];
            }
        }
    });
    Image g(x.rows, x.cols, x.pixel_size_mm);
    scatter_add_patches(G, bank.patch, g);
    return g;
}

std::vector<double> ultra_curvature_diag(const UltraRegState& st, int rows, int cols) {
    const double lam = bank_max_eig(*st.bank);
    std::vector<double> overlap = patch_weight_overlap(rows, cols, st.bank->patch, st.tau);
    for (auto& v : overlap) v *= 2.0 * lam;
    return overlap;
}

double bank_max_eig(const TransformBank& bank) {
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    double lam = 0.0;
    for (const auto& o : bank.omegas) {
        Eigen::Map<const RowMat> om(o.data(), bank.m, bank.m);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(om.transpose() * om);
        lam = std::max(lam, es.eigenvalues().maxCoeff());
    }
    return lam;
}

}  // namespace superct
