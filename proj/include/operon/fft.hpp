#pragma once

#include <complex>
#include <vector>

namespace operon {

/// 2-D transforms for the spectral layers, backed by FFTW complex plans
/// created with FFTW_ESTIMATE so plan choice (and hence rounding) is
/// reproducible. Arbitrary grid sizes supported.
///
/// forward() is the unnormalized DFT of a real field, returned as the
/// half-spectrum (n1 x (n2/2+1)). half_inverse() maps a stored half-spectrum
/// back to a real n1 x n2 field by hermitian extension (stored columns
/// authoritative) followed by the normalized inverse transform's real part;
/// for a spectrum of a real field it is the exact inverse of forward().
///
/// The pair satisfies a clean adjoint relation used by the autodiff rules:
///   vjp of forward:      x_bar = N * half_inverse(g / d)
///   vjp of half_inverse: z_bar = (d / N) * forward(y_bar)
/// where d is 2 on columns whose mirror is not stored and 1 elsewhere,
/// applied entrywise per column, and N = n1*n2.
class Fft2 {
public:
    Fft2(int n1, int n2);
    ~Fft2();
    Fft2(const Fft2&) = delete;
    Fft2& operator=(const Fft2&) = delete;

    int n1() const { return n1_; }
    int n2() const { return n2_; }
    int half_cols() const { return n2_ / 2 + 1; }
    // column multiplicity d_l in the hermitian extension
    double column_weight(int l) const;

    // real (n1*n2) -> complex (n1*half_cols), unnormalized
    void forward(const double* x, std::complex<double>* out) const;
    // complex (n1*half_cols) -> real (n1*n2), normalized by 1/(n1*n2)
    void half_inverse(const std::complex<double>* z, double* out) const;

private:
    int n1_, n2_;
    void* plan_fwd_;  // fftw_plan
    void* plan_bwd_;
};

} // namespace operon
