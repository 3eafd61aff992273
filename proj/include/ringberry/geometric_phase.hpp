#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <future>
#include <span>
#include <vector>

#include "ringberry/constants.hpp"
#include "ringberry/errors.hpp"
#include "ringberry/field_model.hpp"
#include "ringberry/numeric.hpp"
#include "ringberry/trap_analysis.hpp"

namespace ringberry {

// Drive-period average of B_z/|B| at a point. The azimuthal trajectory sees a
// field tilted by beta(t) from the z-axis; this is the mean of cos(beta).
inline double cos_beta0(const FieldWaveform& w, double rho, double z, double rel_tol = 1e-10) {
    auto bmag_floor = [&](const FieldVector& f) {
        double mag = f.magnitude();
        double scale = std::abs(w.B2) * w.L * w.L + std::abs(f.B_phi);
        if (mag <= 1e-9 * scale)
            throw numerical_error(errc::connection_singular,
                                  "field magnitude vanishes during the drive period");
        return mag;
    };
    if (w.is_static()) {
        FieldVector f = eval_analytic_field(w, rho, z, 0.0);
        return f.B_z / bmag_floor(f);
    }
    auto integrand = [&](double t) {
        FieldVector f = eval_analytic_field(w, rho, z, t);
        return f.B_z / bmag_floor(f);
    };
    PeriodicAverage pa = periodic_average(integrand, w.period(), rel_tol, 1e-14);
    if (!pa.converged)
        throw numerical_error(errc::quadrature_failure, "cos_beta0 average did not converge");
    return pa.value;
}

struct Harmonic {
    int n;
    double C;       // amplitude (>= 0)
    double varphi;  // phase, rad
};

struct ConnectionSpectrum {
    double cos_beta0 = 0.0;
    std::vector<Harmonic> harmonics;  // C_n >= retain_threshold only
    double omega = 0.0;               // rad/s of the underlying drive
    double reconstruction_rms = 0.0;  // series vs samples, at the retained order
};

// Fourier decomposition of a uniformly sampled periodic signal as
// x(t) = c0 + sum_n C_n cos(n w t + phi_n).
inline ConnectionSpectrum spectrum_from_samples(std::span<const double> samples, int n_max,
                                                double omega, double retain = 1e-12) {
    const std::size_t M = samples.size();
    if (!is_pow2(M)) throw config_error("spectrum_from_samples: need a power-of-two sample count");
    std::vector<std::complex<double>> a(samples.begin(), samples.end());
    fft_radix2(a, false);

    ConnectionSpectrum out;
    out.omega = omega;
    out.cos_beta0 = a[0].real() / static_cast<double>(M);
    const int top = std::min<int>(n_max, static_cast<int>(M) / 2 - 1);
    for (int n = 1; n <= top; ++n) {
        double C = 2.0 * std::abs(a[n]) / static_cast<double>(M);
        if (C >= retain) out.harmonics.push_back({n, C, std::arg(a[n])});
    }
    double rss = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
        double t = two_pi * static_cast<double>(j) / static_cast<double>(M);
        double rec = out.cos_beta0;
        for (const auto& h : out.harmonics) rec += h.C * std::cos(h.n * t + h.varphi);
        rss += (rec - samples[j]) * (rec - samples[j]);
    }
    out.reconstruction_rms = std::sqrt(rss / static_cast<double>(M));
    return out;
}

inline ConnectionSpectrum fourier_spectrum(const FieldWaveform& w, double rho, double z,
                                           int n_max, int sample_count = 1 << 12) {
    if (w.is_static()) {
        ConnectionSpectrum out;
        out.cos_beta0 = cos_beta0(w, rho, z);
        return out;
    }
    const double T = w.period();
    const double scale = std::abs(w.B2) * w.L * w.L;
    std::vector<double> samples(sample_count);
    for (int j = 0; j < sample_count; ++j) {
        FieldVector f = eval_analytic_field(w, rho, z, T * j / sample_count);
        double mag = f.magnitude();
        if (mag <= 1e-9 * (scale + std::abs(f.B_phi)))
            throw numerical_error(errc::connection_singular,
                                  "field magnitude vanishes during the drive period");
        samples[j] = f.B_z / mag;
    }
    return spectrum_from_samples(samples, n_max, w.omega);
}

// Closed-loop geometric phase for winding number q.
inline double berry_phase_closed(double cos_beta0, long q) {
    if (std::abs(cos_beta0) > 1.0 + 1e-12)
        throw std::domain_error("berry_phase_closed: |cos_beta0| must be <= 1");
    return static_cast<double>(q) * (two_pi * cos_beta0);
}

// Upper bound on the oscillatory remainder of the geometric phase for orbital
// angular velocity Omega: sum_n 2 C_n Omega / (n omega).
inline double residual_phase_bound(const ConnectionSpectrum& spec, double Omega) {
    if (Omega < 0.0) throw std::domain_error("residual_phase_bound: Omega must be >= 0");
    if (Omega == 0.0 || spec.harmonics.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& h : spec.harmonics) sum += 2.0 * h.C * Omega / (h.n * spec.omega);
    return sum;
}

enum class Sampler { flat_grid, flat_random, gaussian };

struct FluctuationReport {
    double f = 0.0;         // RMS spread of cos_beta0 over the region
    double f_stderr = 0.0;  // statistical error estimate on f
    double delta = 0.0;     // cm
    long samples = 0;
    double contrast = 1.0;  // |<exp(i 2 pi dcos_beta0)>| for a single winding
};

// RMS fluctuation of cos_beta0 over the square region rho_c +/- delta,
// z_c +/- delta, and the resulting single-winding dephasing contrast.
inline FluctuationReport fluctuation(const FieldWaveform& w, const TrapCenter& c, double delta,
                                     Sampler sampler, long samples, std::uint64_t seed = 0,
                                     std::array<double, 2> gaussian_sigma = {0.0, 0.0}) {
    if (!(delta > 0.0)) throw config_error("fluctuation: delta must be positive");
    if (samples < 1) throw config_error("fluctuation: need at least one sample");

    const double c0 = cos_beta0(w, c.rho_c, c.z_c);
    std::vector<std::array<double, 2>> pts;
    if (sampler == Sampler::flat_grid) {
        long k = std::lround(std::ceil(std::sqrt(static_cast<double>(samples))));
        pts.reserve(k * k);
        for (long i = 0; i < k; ++i)
            for (long j = 0; j < k; ++j)
                pts.push_back({c.rho_c - delta + (2.0 * i + 1.0) * delta / k,
                               c.z_c - delta + (2.0 * j + 1.0) * delta / k});
    } else if (sampler == Sampler::flat_random) {
        DetRng rng(seed);
        pts.reserve(samples);
        for (long i = 0; i < samples; ++i)
            pts.push_back({rng.uniform(c.rho_c - delta, c.rho_c + delta),
                           rng.uniform(c.z_c - delta, c.z_c + delta)});
    } else {
        if (!(gaussian_sigma[0] > 0.0) || !(gaussian_sigma[1] > 0.0))
            throw config_error("fluctuation: gaussian sampler needs positive widths");
        DetRng rng(seed);
        pts.reserve(samples);
        for (long i = 0; i < samples; ++i)
            pts.push_back({c.rho_c + gaussian_sigma[0] * rng.normal(),
                           c.z_c + gaussian_sigma[1] * rng.normal()});
    }

    double sum2 = 0.0, sum4 = 0.0;
    std::complex<double> phasor = 0.0;
    for (const auto& p : pts) {
        double d = cos_beta0(w, std::max(p[0], 1e-12), p[1], 1e-9) - c0;
        sum2 += d * d;
        sum4 += d * d * d * d;
        phasor += std::exp(std::complex<double>(0.0, two_pi * d));
    }
    const double N = static_cast<double>(pts.size());
    FluctuationReport out;
    out.delta = delta;
    out.samples = static_cast<long>(pts.size());
    double mean2 = sum2 / N;
    out.f = std::sqrt(mean2);
    double var2 = std::max(sum4 / N - mean2 * mean2, 0.0);
    out.f_stderr = (out.f > 0.0) ? std::sqrt(var2 / N) / (2.0 * out.f) : 0.0;
    out.contrast = std::abs(phasor) / N;
    return out;
}

inline double sagnac_phase(double mass, double Omega_rot, double rho_c, double theta) {
    return two_pi * mass * Omega_rot * rho_c * rho_c * std::cos(theta) / cgs::hbar;
}

// ---------------------------------------------------------------------------
// Parameter sweeps over the waveform family.
// ---------------------------------------------------------------------------

struct SweepRow {
    double l_over_L = 0.0;
    double n_over_L = 0.0;
    bool ok = false;
    errc error = errc::quadrature_failure;
    double rho_c = 0.0, z_c = 0.0;
    double cos_b0 = 0.0;
    double C2 = 0.0, C4 = 0.0;
    double f = 0.0;
};

struct SweepSpec {
    FieldWaveform base;             // provides B2, L, omega, b1_phase
    std::vector<double> l_over_L;
    std::vector<double> n_over_L = {0.0};
    double fluct_delta_in_L = 0.005;
    Sampler sampler = Sampler::flat_random;
    long fluct_samples = 2000;
    std::uint64_t seed = 0;
    int threads = 1;
};

inline SweepRow sweep_point(const FieldWaveform& base, double x_l, double x_n,
                            double delta_in_L, Sampler sampler, long fsamples,
                            std::uint64_t seed) {
    SweepRow row;
    row.l_over_L = x_l;
    row.n_over_L = x_n;
    try {
        FieldWaveform w = base;
        w.l = x_l * base.L;
        w.n = x_n * base.L;
        TrapCenter c = find_trap_center(w);
        row.rho_c = c.rho_c;
        row.z_c = c.z_c;
        row.cos_b0 = cos_beta0(w, c.rho_c, c.z_c);
        ConnectionSpectrum spec = fourier_spectrum(w, c.rho_c, c.z_c, 8);
        for (const auto& h : spec.harmonics) {
            if (h.n == 2) row.C2 = h.C;
            if (h.n == 4) row.C4 = h.C;
        }
        row.f = fluctuation(w, c, delta_in_L * base.L, sampler, fsamples, seed).f;
        row.ok = true;
    } catch (const numerical_error& e) {
        row.error = e.code();
    }
    return row;
}

inline std::vector<SweepRow> sweep(const SweepSpec& spec) {
    std::vector<std::pair<double, double>> grid;
    for (double xn : spec.n_over_L)
        for (double xl : spec.l_over_L) grid.emplace_back(xl, xn);

    std::vector<SweepRow> rows(grid.size());
    auto work = [&](std::size_t i) {
        rows[i] = sweep_point(spec.base, grid[i].first, grid[i].second, spec.fluct_delta_in_L,
                              spec.sampler, spec.fluct_samples,
                              splitmix64(spec.seed ^ (0x5eed0000ull + i)));
    };
    const int threads = std::max(1, spec.threads);
    if (threads == 1) {
        for (std::size_t i = 0; i < grid.size(); ++i) work(i);
    } else {
        std::vector<std::future<void>> futs;
        std::atomic<std::size_t> next{0};
        for (int t = 0; t < threads; ++t)
            futs.push_back(std::async(std::launch::async, [&]() {
                for (std::size_t i = next.fetch_add(1); i < grid.size(); i = next.fetch_add(1))
                    work(i);
            }));
        for (auto& f : futs) f.get();
    }
    return rows;
}

}  // namespace ringberry
