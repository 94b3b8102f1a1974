#include "superct/transforms.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "superct/kernels.hpp"
#include "superct/rng.hpp"

namespace superct {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void TransformBank::validate() const {
    if (K < 1 || m < 1) throw std::invalid_argument("transform bank: K and m must be >= 1");
    if (static_cast<int>(omegas.size()) != K) throw std::invalid_argument("transform bank: K mismatch");
    for (const auto& o : omegas) {
        if (static_cast<int>(o.size()) != m * m) throw std::invalid_argument("transform bank: shape mismatch");
        Eigen::Map<const RowMat> om(o.data(), m, m);
        if (std::fabs(om.partialPivLu().determinant()) <= 1e-12)
            throw std::invalid_argument("transform bank: singular transform");
    }
}

std::vector<double> hard_threshold(const std::vector<double>& v, double gamma) {
    std::vector<double> out(v.size());
    kern::hard_threshold(v.size(), gamma, v.data(), out.data());
    return out;
}

SparseCodeResult sparse_code_and_cluster(const PatchMatrix& X, const TransformBank& bank,
                                         double threshold, const std::vector<double>& tau,
                                         const std::vector<double>& cluster_bias,
                                         const std::vector<double>& patch_energy) {
    if (X.m != bank.m) throw std::invalid_argument("sparse_code_and_cluster: patch length mismatch");
    if (!tau.empty() && static_cast<long>(tau.size()) != X.n)
        throw std::invalid_argument("sparse_code_and_cluster: tau size mismatch");
    const int m = X.m, K = bank.K;
    const double g2 = threshold * threshold;

    SparseCodeResult res;
    res.m = m;
    res.n = X.n;
    res.codes.assign(static_cast<size_t>(m) * X.n, 0.0);
    res.clusters.assign(static_cast<size_t>(X.n), 0);
    if (X.n == 0) return res;

    constexpr long B = 512;
    const long nblocks = (X.n + B - 1) / B;
    std::vector<double> block_obj(static_cast<size_t>(nblocks), 0.0);

#pragma omp parallel
    {
        std::vector<double> R(static_cast<size_t>(K) * m * B);
        std::vector<double> cost(static_cast<size_t>(K) * B);
#pragma omp for schedule(static)
        for (long b = 0; b < nblocks; ++b) {
            const long j0 = b * B;
            const long len = std::min(B, X.n - j0);
            std::fill(cost.begin(), cost.end(), 0.0);
            for (int k = 0; k < K; ++k) {
                double* Rk = R.data() + static_cast<size_t>(k) * m * B;
                const double* om = bank.omegas[static_cast<size_t>(k)].data();
                for (int i = 0; i < m; ++i) {
                    double* out = Rk + static_cast<size_t>(i) * B;
                    std::fill(out, out + len, 0.0);
                    for (int j = 0; j < m; ++j)
                        kern::axpy(static_cast<size_t>(len), om[static_cast<size_t>(i) * m + j],
                                   X.row(j) + j0, out);
                }
                double* ck = cost.data() + static_cast<size_t>(k) * B;
                for (int i = 0; i < m; ++i) {
                    const double* ri = Rk + static_cast<size_t>(i) * B;
                    for (long t = 0; t < len; ++t) {
                        const double r2 = ri[t] * ri[t];
                        ck[t] += std::fabs(ri[t]) < threshold ? r2 : g2;
                    }
                }
                if (!cluster_bias.empty()) {
                    const double bias = cluster_bias[static_cast<size_t>(k)];
                    for (long t = 0; t < len; ++t)
                        ck[t] += bias * patch_energy[static_cast<size_t>(j0 + t)];
                }
            }
            double obj = 0.0;
            for (long t = 0; t < len; ++t) {
                int best = 0;
                double bc = cost[static_cast<size_t>(t)];
                for (int k = 1; k < K; ++k) {
                    const double c = cost[static_cast<size_t>(k) * B + t];
                    if (c < bc) {
                        bc = c;
                        best = k;
                    }
                }
                res.clusters[static_cast<size_t>(j0 + t)] = best;
                const double* Rk = R.data() + static_cast<size_t>(best) * m * B;
                double code_cost = 0.0;
                for (int i = 0; i < m; ++i) {
                    const double r = Rk[static_cast<size_t>(i) * B + t];
                    const bool keep = !(std::fabs(r) < threshold);
                    res.codes[static_cast<size_t>(i) * X.n + (j0 + t)] = keep ? r : 0.0;
                    code_cost += keep ? g2 : r * r;
                }
                obj += (tau.empty() ? 1.0 : tau[static_cast<size_t>(j0 + t)]) * code_cost;
            }
            block_obj[static_cast<size_t>(b)] = obj;
        }
    }
    double total = 0.0;
    for (double o : block_obj) total += o;
    res.objective = total;
    return res;
}

std::vector<double> update_transform(const double* Xk, const double* Zk, int m, long nk,
                                     double lambda_k) {
    if (!(lambda_k > 0.0)) throw std::invalid_argument("update_transform: lambda_k must be positive");
    Eigen::Map<const RowMat> X(Xk, m, nk), Z(Zk, m, nk);
    if (!X.allFinite() || !Z.allFinite()) throw DataError("update_transform: nonfinite inputs");

    Eigen::MatrixXd G = X * X.transpose();
    G.diagonal().array() += lambda_k;
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success) throw DataError("update_transform: factorization failed");
    Eigen::MatrixXd B = X * Z.transpose();
    Eigen::MatrixXd C = llt.matrixL().solve(B);  // L^{-1} X Z'

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::VectorXd sig = svd.singularValues();
    Eigen::VectorXd d(m);
    for (int i = 0; i < m; ++i)
        d(i) = 0.5 * (sig(i) + std::sqrt(sig(i) * sig(i) + 2.0 * lambda_k));
    Eigen::MatrixXd W = svd.matrixV() * d.asDiagonal() * svd.matrixU().transpose();
    // Omega = W L^{-1}  <=>  L' Omega' = W'
    Eigen::MatrixXd omega =
        llt.matrixL().transpose().solve(W.transpose()).transpose();

    std::vector<double> out(static_cast<size_t>(m) * m);
    Eigen::Map<RowMat>(out.data(), m, m) = omega;
    return out;
}

double transform_regularizer(const std::vector<double>& omega, int m) {
    Eigen::Map<const RowMat> om(omega.data(), m, m);
    const double fro2 = om.squaredNorm();
    const double det = om.partialPivLu().determinant();
    if (det == 0.0) return std::numeric_limits<double>::infinity();
    return fro2 - std::log(std::fabs(det));
}

std::vector<double> dct2_matrix(int side) {
    const int m = side * side;
    std::vector<double> d1(static_cast<size_t>(side) * side);
    for (int k = 0; k < side; ++k) {
        const double ck = (k == 0 ? std::sqrt(1.0 / side) : std::sqrt(2.0 / side));
        for (int j = 0; j < side; ++j)
            d1[static_cast<size_t>(k) * side + j] =
                ck * std::cos(std::numbers::pi * (2 * j + 1) * k / (2.0 * side));
    }
    // Column-major patch vectorization: component index c*side + r.
    std::vector<double> out(static_cast<size_t>(m) * m);
    for (int kc = 0; kc < side; ++kc)
        for (int kr = 0; kr < side; ++kr)
            for (int c = 0; c < side; ++c)
                for (int r = 0; r < side; ++r)
                    out[static_cast<size_t>(kc * side + kr) * m + (c * side + r)] =
                        d1[static_cast<size_t>(kc) * side + c] * d1[static_cast<size_t>(kr) * side + r];
    return out;
}

std::vector<double> random_rotation_of_dct(int side, uint64_t seed) {
    const int m = side * side;
    std::mt19937_64 eng(splitmix64(seed));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd A(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) A(i, j) = gauss(eng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    Eigen::MatrixXd Q = qr.householderQ();
    Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < m; ++i)
        if (R(i, i) < 0.0) Q.col(i) = -Q.col(i);

    std::vector<double> dct = dct2_matrix(side);
    Eigen::Map<const RowMat> D(dct.data(), m, m);
    std::vector<double> out(static_cast<size_t>(m) * m);
    Eigen::Map<RowMat>(out.data(), m, m) = Q * D;
    return out;
}

double ultra_training_objective(const PatchMatrix& X, const TransformBank& bank,
                                const SparseCodeResult& sc) {
    const int m = X.m, K = bank.K;
    const double e2 = bank.eta * bank.eta;
    std::vector<double> lambda_sum(static_cast<size_t>(K), 0.0);
    double obj = 0.0;
    std::vector<double> r(static_cast<size_t>(m));
    for (long j = 0; j < X.n; ++j) {
        const int k = sc.clusters[static_cast<size_t>(j)];
        const double* om = bank.omegas[static_cast<size_t>(k)].data();
        double energy = 0.0;
        for (int i = 0; i < m; ++i) {
            double acc = 0.0;
            for (int t = 0; t < m; ++t) acc += om[static_cast<size_t>(i) * m + t] * X.at(t, j);
            r[static_cast<size_t>(i)] = acc;
            energy += X.at(i, j) * X.at(i, j);
        }
        lambda_sum[static_cast<size_t>(k)] += energy;
        for (int i = 0; i < m; ++i) {
            const double z = sc.codes[static_cast<size_t>(i) * X.n + j];
            const double d = r[static_cast<size_t>(i)] - z;
            obj += d * d;
            if (z != 0.0) obj += e2;
        }
    }
    for (int k = 0; k < K; ++k)
        obj += bank.lambda0 * lambda_sum[static_cast<size_t>(k)] *
               transform_regularizer(bank.omegas[static_cast<size_t>(k)], m);
    return obj;
}

TransformBank learn_ultra(const std::vector<Image>& images, int K, const PatchConfig& cfg,
                          int iters, double lambda0, double eta, uint64_t seed, LearnTrace* trace) {
    if (images.empty()) throw std::invalid_argument("learn_ultra: no training images");
    if (iters < 1 || K < 1) throw std::invalid_argument("learn_ultra: iters and K must be >= 1");

    // Pool interior patches from every image.
    long total = 0;
    std::vector<PatchMatrix> parts;
    parts.reserve(images.size());
    for (const auto& img : images) {
        parts.push_back(extract_patches(img, cfg));
        total += parts.back().n;
    }
    const int m = cfg.side * cfg.side;
    PatchMatrix X(m, total);
    long off = 0;
    for (const auto& p : parts) {
        for (int i = 0; i < m; ++i)
            std::copy(p.row(i), p.row(i) + p.n, X.row(i) + off);
        off += p.n;
    }
    parts.clear();

    std::vector<double> energy(static_cast<size_t>(total), 0.0);
    for (int i = 0; i < m; ++i) {
        const double* row = X.row(i);
        for (long j = 0; j < total; ++j) energy[static_cast<size_t>(j)] += row[j] * row[j];
    }

    TransformBank bank;
    bank.K = K;
    bank.m = m;
    bank.lambda0 = lambda0;
    bank.eta = eta;
    bank.patch = cfg;
    bank.training_seed = seed;
    bank.omegas.resize(static_cast<size_t>(K));
    bank.omegas[0] = dct2_matrix(cfg.side);
    for (int k = 1; k < K; ++k)
        bank.omegas[static_cast<size_t>(k)] = random_rotation_of_dct(cfg.side, derive_seed(seed, 0x10, k));

    if (trace) {
        trace->objective.clear();
        trace->reseeded_clusters = 0;
    }

    std::vector<double> bias(static_cast<size_t>(K));
    for (int it = 0; it < iters; ++it) {
        for (int k = 0; k < K; ++k)
            bias[static_cast<size_t>(k)] =
                lambda0 * transform_regularizer(bank.omegas[static_cast<size_t>(k)], m);
        SparseCodeResult sc = sparse_code_and_cluster(X, bank, eta, {}, bias, energy);

        std::vector<std::vector<long>> members(static_cast<size_t>(K));
        for (long j = 0; j < total; ++j)
            members[static_cast<size_t>(sc.clusters[static_cast<size_t>(j)])].push_back(j);

        for (int k = 0; k < K; ++k) {
            const auto& idx = members[static_cast<size_t>(k)];
            if (idx.empty()) {
                bank.omegas[static_cast<size_t>(k)] =
                    random_rotation_of_dct(cfg.side, derive_seed(seed, 0x20 + it, k));
                if (trace) ++trace->reseeded_clusters;
                continue;
            }
            const long nk = static_cast<long>(idx.size());
            std::vector<double> Xk(static_cast<size_t>(m) * nk), Zk(static_cast<size_t>(m) * nk);
            double lam = 0.0;
            for (long t = 0; t < nk; ++t) lam += energy[static_cast<size_t>(idx[static_cast<size_t>(t)])];
            lam *= lambda0;
            for (int i = 0; i < m; ++i) {
                const double* xr = X.row(i);
                const double* zr = sc.codes.data() + static_cast<size_t>(i) * total;
                double* xo = Xk.data() + static_cast<size_t>(i) * nk;
                double* zo = Zk.data() + static_cast<size_t>(i) * nk;
                for (long t = 0; t < nk; ++t) {
                    xo[t] = xr[idx[static_cast<size_t>(t)]];
                    zo[t] = zr[idx[static_cast<size_t>(t)]];
                }
            }
            bank.omegas[static_cast<size_t>(k)] = update_transform(Xk.data(), Zk.data(), m, nk, lam);
        }
        if (trace) trace->objective.push_back(ultra_training_objective(X, bank, sc));
    }
    bank.validate();
    return bank;
}

}  // namespace superct
