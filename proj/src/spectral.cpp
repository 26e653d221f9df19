#include "linearize/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

#include "linearize/errors.hpp"

namespace linearize {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Diagonal block structure of a real quasi-triangular matrix.
struct QuasiBlock {
    int start;
    int size;       // 1 or 2
    double re;      // real part of the block's eigenvalue(s)
};

std::vector<QuasiBlock> diagonal_blocks(const Mat& S) {
    std::vector<QuasiBlock> blocks;
    const int n = static_cast<int>(S.rows());
    int i = 0;
    while (i < n) {
        if (i + 1 < n && S(i + 1, i) != 0.0) {
            blocks.push_back({i, 2, 0.5 * (S(i, i) + S(i + 1, i + 1))});
            i += 2;
        } else {
            blocks.push_back({i, 1, S(i, i)});
            i += 1;
        }
    }
    return blocks;
}

// Solves A X - X B = C by the Kronecker-product linear system. Sizes here
// are tiny (blocks of a small Schur form), so dense LU is plenty.
Mat solve_sylvester(const Mat& A, const Mat& B, const Mat& C) {
    const int p = static_cast<int>(A.rows());
    const int q = static_cast<int>(B.cols());
    Mat K = Mat::Zero(p * q, p * q);
    for (int j = 0; j < q; ++j) {
        K.block(j * p, j * p, p, p) += A;
        for (int l = 0; l < q; ++l) K.block(j * p, l * p, p, p).diagonal().array() -= B(l, j);
    }
    Vec c(p * q);
    for (int j = 0; j < q; ++j) c.segment(j * p, p) = C.col(j);
    Vec x = K.colPivHouseholderQr().solve(c);
    Mat X(p, q);
    for (int j = 0; j < q; ++j) X.col(j) = x.segment(j * p, p);
    return X;
}

// Swaps two adjacent diagonal blocks of the real Schur form S (orthogonal
// similarity, accumulated into Q). Direct swap via the invariant subspace
// of the trailing block: solve A11 X - X A22 = -A12, orthonormalize
// [X; I].
void swap_adjacent_blocks(Mat& S, Mat& Q, int p, int b1, int b2) {
    const int n = static_cast<int>(S.rows());
    const int w = b1 + b2;
    Mat A11 = S.block(p, p, b1, b1);
    Mat A22 = S.block(p + b1, p + b1, b2, b2);
    Mat A12 = S.block(p, p + b1, b1, b2);

    Mat X = solve_sylvester(A11, A22, -A12);
    Mat V(w, b2);
    V.topRows(b1) = X;
    V.bottomRows(b2) = Mat::Identity(b2, b2);
    Eigen::HouseholderQR<Mat> qr(V);
    Mat G = qr.householderQ();  // w x w orthogonal, first b2 cols span V

    S.block(p, 0, w, n) = G.transpose() * S.block(p, 0, w, n);
    S.block(0, p, n, w) = S.block(0, p, n, w) * G;
    Q.block(0, p, n, w) = Q.block(0, p, n, w) * G;

    // the subdiagonal block is zero in exact arithmetic
    S.block(p + b2, p, b1, b2).setZero();
}

}  // namespace

Mat SpectralSplit::block_diagonal() const {
    const int n = k + m;
    Mat D = Mat::Zero(n, n);
    if (k > 0) D.topLeftCorner(k, k) = P;
    if (m > 0) D.bottomRightCorner(m, m) = N;
    return D;
}

double default_hyperbolicity_tol(const Mat& A) {
    double na = A.norm();
    return 1e-8 * (na > 0 ? na : 1.0);
}

SpectralSplit split_spectrum(const Mat& A) {
    return split_spectrum(A, default_hyperbolicity_tol(A));
}

SpectralSplit split_spectrum(const Mat& A, double hyperbolicity_tol) {
    if (A.rows() != A.cols()) raise(Errc::config_error, "matrix must be square");
    if (!A.allFinite()) raise(Errc::config_error, "matrix has non-finite entries");
    const int n = static_cast<int>(A.rows());

    Eigen::RealSchur<Mat> schur(A);
    if (schur.info() != Eigen::Success) raise(Errc::config_error, "Schur decomposition failed");
    Mat S = schur.matrixT();
    Mat Q = schur.matrixU();

    for (const auto& blk : diagonal_blocks(S)) {
        if (std::abs(blk.re) < hyperbolicity_tol)
            raise(Errc::not_hyperbolic,
                  "eigenvalue with |Re| = " + std::to_string(std::abs(blk.re)) +
                      " below tolerance " + std::to_string(hyperbolicity_tol));
    }

    // Bubble all unstable blocks to the top-left. Every swap pairs a stable
    // block with an unstable one, so the Sylvester systems are separated by
    // at least the hyperbolicity margin.
    for (;;) {
        auto blocks = diagonal_blocks(S);
        bool swapped = false;
        for (size_t i = 0; i + 1 < blocks.size(); ++i) {
            if (blocks[i].re < 0 && blocks[i + 1].re > 0) {
                swap_adjacent_blocks(S, Q, blocks[i].start, blocks[i].size, blocks[i + 1].size);
                swapped = true;
                break;
            }
        }
        if (!swapped) break;
    }

    int k = 0;
    for (const auto& blk : diagonal_blocks(S))
        if (blk.re > 0) k += blk.size;
    const int m = n - k;

    SpectralSplit out;
    out.k = k;
    out.m = m;
    out.P = S.topLeftCorner(k, k);
    out.N = S.bottomRightCorner(m, m);

    // Decouple the coupling block: with Y solving P Y - Y N = -S12,
    //   [[I,-Y],[0,I]] * S * [[I,Y],[0,I]] = blkdiag(P, N).
    Mat Y = Mat::Zero(k, m);
    if (k > 0 && m > 0) Y = solve_sylvester(out.P, out.N, -S.topRightCorner(k, m));

    Mat R = Mat::Identity(n, n);      // [[I, Y], [0, I]]
    Mat Rinv = Mat::Identity(n, n);   // [[I, -Y], [0, I]]
    if (k > 0 && m > 0) {
        R.topRightCorner(k, m) = Y;
        Rinv.topRightCorner(k, m) = -Y;
    }
    out.T_inv = Q * R;
    out.T = Rinv * Q.transpose();

    Eigen::JacobiSVD<Mat> svd(out.T);
    double smin = svd.singularValues()(svd.singularValues().size() - 1);
    out.cond_T = smin > 0 ? svd.singularValues()(0) / smin : kInf;

    out.mu_P = kInf;
    out.mu_N = -kInf;
    for (const auto& blk : diagonal_blocks(out.P)) out.mu_P = std::min(out.mu_P, blk.re);
    for (const auto& blk : diagonal_blocks(out.N)) out.mu_N = std::max(out.mu_N, blk.re);
    return out;
}

// Pade scaling-and-squaring (Higham 2005 degree selection).
Mat expm(const Mat& A, double t) {
    if (!A.allFinite() || !std::isfinite(t)) raise(Errc::expm_overflow, "non-finite input");
    const int n = static_cast<int>(A.rows());
    if (n == 0) return Mat(0, 0);
    Mat M = A * t;

    static const double theta3 = 1.495585217958292e-2;
    static const double theta5 = 2.539398330063230e-1;
    static const double theta7 = 9.504178996162932e-1;
    static const double theta9 = 2.097847961257068e0;
    static const double theta13 = 5.371920351148152e0;

    const double eta = M.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm
    if (!std::isfinite(eta) || eta > 1e300) raise(Errc::expm_overflow, "matrix norm overflow");

    int squarings = 0;
    if (eta > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(eta / theta13)));
        M /= std::pow(2.0, squarings);
    }

    auto pade = [&](const std::vector<double>& b) {
        const int half = static_cast<int>(b.size()) / 2;
        Mat M2 = M * M;
        Mat U = Mat::Zero(n, n), V = Mat::Zero(n, n);
        // U = M * sum(b[2j+1] M^{2j}), V = sum(b[2j] M^{2j})
        Mat pw = Mat::Identity(n, n);
        for (int j = 0; j < half; ++j) {
            U += b[2 * j + 1] * pw;
            V += b[2 * j] * pw;
            if (j + 1 < half) pw = pw * M2;
        }
        U = M * U;
        Mat num = V + U, den = V - U;
        return Mat(den.partialPivLu().solve(num));
    };

    auto pade13 = [&]() {
        static const double b[] = {
            64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
            1187353796428800.0, 129060195264000.0, 10559470521600.0,
            670442572800.0, 33522128640.0, 1323241920.0,
            40840800.0, 960960.0, 16380.0, 182.0, 1.0};
        Mat M2 = M * M;
        Mat M4 = M2 * M2;
        Mat M6 = M4 * M2;
        Mat U = M * (M6 * (b[13] * M6 + b[11] * M4 + b[9] * M2) +
                     b[7] * M6 + b[5] * M4 + b[3] * M2 +
                     b[1] * Mat::Identity(n, n));
        Mat V = M6 * (b[12] * M6 + b[10] * M4 + b[8] * M2) +
                b[6] * M6 + b[4] * M4 + b[2] * M2 + b[0] * Mat::Identity(n, n);
        Mat num = V + U, den = V - U;
        return Mat(den.partialPivLu().solve(num));
    };

    Mat E;
    if (eta <= theta3)
        E = pade({120.0, 60.0, 12.0, 1.0});
    else if (eta <= theta5)
        E = pade({30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0});
    else if (eta <= theta7)
        E = pade({17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0});
    else if (eta <= theta9)
        E = pade({17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
                  2162160.0, 110880.0, 3960.0, 90.0, 1.0});
    else
        E = pade13();

    for (int s = 0; s < squarings; ++s) {
        E = E * E;
        if (!E.allFinite()) raise(Errc::expm_overflow, "overflow during squaring");
    }
    if (!E.allFinite() || E.cwiseAbs().maxCoeff() > 1e300)
        raise(Errc::expm_overflow, "result exceeds representable range");
    return E;
}

DecayRate kernel_margin(const Mat& B, TimeDirection direction) {
    const int n = static_cast<int>(B.rows());
    if (n == 0) raise(Errc::empty_block, "kernel margin of an empty block");

    // kernel K(s) = e^{-B s}; forward decay needs Re(lambda) > 0,
    // backward decay needs Re(lambda) < 0
    Mat S = Eigen::RealSchur<Mat>(B).matrixT();
    double mu;
    if (direction == TimeDirection::forward) {
        mu = kInf;
        for (const auto& blk : diagonal_blocks(S)) mu = std::min(mu, blk.re);
    } else {
        mu = kInf;
        for (const auto& blk : diagonal_blocks(S)) mu = std::min(mu, -blk.re);
    }
    if (!(mu > 0))
        raise(Errc::non_decay, "kernel does not decay in the requested direction");

    // transient sup of ||e^{-B s}|| e^{mu |s|}; 1 for normal blocks, > 1
    // when non-normality produces a hump
    const double window = 20.0 / mu;
    const int samples = 256;
    const double sgn = direction == TimeDirection::forward ? 1.0 : -1.0;
    double C = 1.0;
    Mat step = expm(-B, sgn * window / samples);
    Mat K = Mat::Identity(n, n);
    for (int i = 1; i <= samples; ++i) {
        K = K * step;
        double s = window * i / samples;
        double v = K.operatorNorm() * std::exp(mu * s);
        C = std::max(C, v);
    }
    return {C, mu};
}

DecayRate decay_margin(const SpectralSplit& split, TimeDirection direction,
                       SpectralBlock block) {
    const Mat& B = block == SpectralBlock::unstable ? split.P : split.N;
    if (B.rows() == 0) raise(Errc::empty_block, "requested block is empty");
    return kernel_margin(B, direction);
}

std::vector<std::complex<double>> eigenvalues(const Mat& A) {
    Eigen::EigenSolver<Mat> es(A, false);
    std::vector<std::complex<double>> out(A.rows());
    for (int i = 0; i < A.rows(); ++i) out[i] = es.eigenvalues()(i);
    return out;
}

bool spectrum_all_stable(const Mat& A, double tol) {
    for (const auto& ev : eigenvalues(A))
        if (ev.real() >= -tol) return false;
    return true;
}

}  // namespace linearize
