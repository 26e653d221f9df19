#pragma once

#include <complex>
#include <vector>

#include "linearize/types.hpp"

namespace linearize {

/// Real block splitting of a hyperbolic matrix A:
///   T * A * T_inv = blkdiag(P, N)
/// where every eigenvalue of P has positive real part and every eigenvalue
/// of N has negative real part. Complex pairs stay in 2x2 real blocks.
struct SpectralSplit {
    Mat T;        // change of basis, u = T x
    Mat T_inv;
    Mat P;        // k x k, unstable block (possibly 0 x 0)
    Mat N;        // m x m, stable block (possibly 0 x 0)
    int k = 0;
    int m = 0;
    double mu_P = 0;    // min Re(lambda) over P, +inf when k == 0
    double mu_N = 0;    // max Re(lambda) over N, -inf when m == 0
    double cond_T = 1;  // diagnostic only, no accuracy claim for ill-conditioned T

    Mat block_diagonal() const;
};

/// Default hyperbolicity tolerance, 1e-8 * ||A||.
double default_hyperbolicity_tol(const Mat& A);

/// Splits the spectrum of A via a reordered real Schur form followed by a
/// Sylvester decoupling of the off-diagonal block. Throws not_hyperbolic
/// when any eigenvalue has |Re lambda| < hyperbolicity_tol.
SpectralSplit split_spectrum(const Mat& A, double hyperbolicity_tol);
SpectralSplit split_spectrum(const Mat& A);

/// e^{A t} by Pade scaling-and-squaring. Throws expm_overflow when entries
/// leave the representable range.
Mat expm(const Mat& A, double t);
inline Mat expm(const Mat& A) { return expm(A, 1.0); }

enum class SpectralBlock { unstable, stable };

/// Exponential envelope ||kernel(s)|| <= C * exp(-mu * |s|).
struct DecayRate {
    double C = 1;
    double mu = 1;
};

/// Envelope of the kernel e^{-B s} along the direction where it decays:
/// forward (s >= 0) needs Re(lambda(B)) > 0, backward (s <= 0) needs
/// Re(lambda(B)) < 0. mu is the spectral margin; C is a numerical sup of
/// ||e^{-B s}|| e^{mu |s|} over a transient window, which absorbs
/// non-normal transients.
DecayRate kernel_margin(const Mat& B, TimeDirection direction);

/// kernel_margin for one block of a split: e^{-P s} forward, e^{-N s}
/// backward. Throws empty_block when the requested block has size zero.
DecayRate decay_margin(const SpectralSplit& split, TimeDirection direction,
                       SpectralBlock block);

/// Eigenvalues via Eigen's general solver (used for validation paths).
std::vector<std::complex<double>> eigenvalues(const Mat& A);

/// True when every eigenvalue satisfies Re(lambda) < -tol.
bool spectrum_all_stable(const Mat& A, double tol);

}  // namespace linearize
