#include "operon/fft.hpp"

#include <mutex>

#include <fftw3.h>

namespace operon {

namespace {
// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace

Fft2::Fft2(int n1, int n2) : n1_(n1), n2_(n2) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_complex* buf = fftw_alloc_complex(static_cast<std::size_t>(n1) * n2);
    plan_fwd_ = fftw_plan_dft_2d(n1, n2, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plan_bwd_ = fftw_plan_dft_2d(n1, n2, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
}

Fft2::~Fft2() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
}

double Fft2::column_weight(int l) const {
    if (l == 0) return 1.0;
    if (n2_ % 2 == 0 && l == n2_ / 2) return 1.0;
    return 2.0;
}

void Fft2::forward(const double* x, std::complex<double>* out) const {
    const std::size_t n = static_cast<std::size_t>(n1_) * n2_;
    std::vector<std::complex<double>> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = x[i];
    fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_), reinterpret_cast<fftw_complex*>(buf.data()),
                     reinterpret_cast<fftw_complex*>(buf.data()));
    const int hc = half_cols();
    for (int k = 0; k < n1_; ++k)
        for (int l = 0; l < hc; ++l)
            out[static_cast<std::size_t>(k) * hc + l] = buf[static_cast<std::size_t>(k) * n2_ + l];
}

void Fft2::half_inverse(const std::complex<double>* z, double* out) const {
    const int hc = half_cols();
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(n1_) * n2_);
    for (int k = 0; k < n1_; ++k) {
        for (int l = 0; l < hc; ++l)
            buf[static_cast<std::size_t>(k) * n2_ + l] = z[static_cast<std::size_t>(k) * hc + l];
        for (int l = hc; l < n2_; ++l) {
            const int km = (n1_ - k) % n1_;
            const int lm = n2_ - l;
            buf[static_cast<std::size_t>(k) * n2_ + l] =
                std::conj(z[static_cast<std::size_t>(km) * hc + lm]);
        }
    }
    fftw_execute_dft(static_cast<fftw_plan>(plan_bwd_), reinterpret_cast<fftw_complex*>(buf.data()),
                     reinterpret_cast<fftw_complex*>(buf.data()));
    const double inv_n = 1.0 / (static_cast<double>(n1_) * n2_);
    const std::size_t n = static_cast<std::size_t>(n1_) * n2_;
    for (std::size_t i = 0; i < n; ++i) out[i] = buf[i].real() * inv_n;
}

} // namespace operon
