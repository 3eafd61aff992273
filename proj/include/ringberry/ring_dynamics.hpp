#pragma once

// One-dimensional quantum and semiclassical dynamics on the ring with the
// induced gauge potential.
//
// Internal units are dimensionless throughout this module: time is
// tau = hbar t / (m rho_c^2), energies are in hbar^2/(m rho_c^2), canonical
// momentum is the integer mode number k of exp(i k phi), and the kinetic
// eigenvalues are (k - A)^2 / 2. WavePacket carries the physical mass and
// ring radius so expectation values can be reported in CGS units.

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ringberry/constants.hpp"
#include "ringberry/errors.hpp"
#include "ringberry/field_model.hpp"
#include "ringberry/geometric_phase.hpp"
#include "ringberry/numeric.hpp"
#include "ringberry/trap_analysis.hpp"

namespace ringberry {

struct RingGeometry {
    double mass = rb87_f1.mass;  // g
    double ring_radius = 1.0;    // cm
    // seconds per unit of dimensionless time
    double time_unit() const { return mass * ring_radius * ring_radius / cgs::hbar; }
};

// ---------------------------------------------------------------------------
// Gauge potential A(phi), dimensionless.
// ---------------------------------------------------------------------------

class GaugeProfile {
public:
    enum class Provenance { constant, from_cos_beta0, custom };

    static GaugeProfile constant(double a) {
        GaugeProfile g;
        g.provenance_ = Provenance::constant;
        g.const_value_ = a;
        g.mean_ = a;
        return g;
    }

    // Constant profile pinned to the connection average at the trap center.
    static GaugeProfile from_cos_beta0(const FieldWaveform& w, const TrapCenter& c) {
        GaugeProfile g = constant(cos_beta0(w, c.rho_c, c.z_c));
        g.provenance_ = Provenance::from_cos_beta0;
        return g;
    }

    static GaugeProfile custom(std::function<double(double)> fn) {
        GaugeProfile g;
        g.provenance_ = Provenance::custom;
        g.fn_ = std::move(fn);
        PeriodicAverage pa = periodic_average([&](double p) { return g.fn_(p); }, two_pi, 1e-13,
                                              1e-15, 64, 1 << 16);
        g.mean_ = pa.value;
        return g;
    }

    double operator()(double phi) const {
        return provenance_ == Provenance::custom ? fn_(wrap_2pi(phi)) : const_value_;
    }
    bool is_constant() const { return provenance_ != Provenance::custom; }
    Provenance provenance() const { return provenance_; }
    double loop_mean() const { return mean_; }         // (1/2pi) closed-loop integral
    double loop_integral() const { return two_pi * mean_; }

private:
    Provenance provenance_ = Provenance::constant;
    double const_value_ = 0.0;
    double mean_ = 0.0;
    std::function<double(double)> fn_;
};

// Periodic antiderivative of the zero-mean part of A, sampled on the grid.
// Computed spectrally, so it is exact for band-limited profiles. Used to
// conjugate a varying A(phi) into the constant-mean kinetic factor:
// exp(-i lam) (p - A) exp(i lam) = p - loop_mean.
inline std::vector<double> gauge_tilde_potential(const GaugeProfile& A, int N) {
    std::vector<double> lam(N, 0.0);
    if (A.is_constant()) return lam;
    std::vector<std::complex<double>> a(N);
    const double mean = A.loop_mean();
    for (int j = 0; j < N; ++j) a[j] = A(two_pi * j / N) - mean;
    fft_radix2(a, false);
    a[0] = 0.0;
    for (int k = 1; k < N; ++k) {
        double mode = fft_mode(k, N);
        if (k == N / 2) {
            a[k] = 0.0;  // unpaired Nyquist mode has no smooth antiderivative
            continue;
        }
        a[k] /= std::complex<double>(0.0, mode);
    }
    fft_radix2(a, true);
    for (int j = 0; j < N; ++j) lam[j] = a[j].real();
    return lam;
}

// ---------------------------------------------------------------------------
// Wave packet on the periodic phi-grid.
// ---------------------------------------------------------------------------

struct WavePacket {
    std::vector<std::complex<double>> amp;  // psi(phi_j), phi_j = 2 pi j / N
    RingGeometry geom;

    int n() const { return static_cast<int>(amp.size()); }
    double dphi() const { return two_pi / n(); }
    double phi(int j) const { return two_pi * j / n(); }

    double norm() const {
        double s = 0.0;
        for (const auto& a : amp) s += std::norm(a);
        return std::sqrt(s * dphi());
    }
    void normalize() {
        double nn = norm();
        if (nn <= 0.0) throw numerical_error(errc::grid_mismatch, "cannot normalize a null state");
        for (auto& a : amp) a /= nn;
    }

    std::vector<double> density() const {
        std::vector<double> d(amp.size());
        for (std::size_t j = 0; j < amp.size(); ++j) d[j] = std::norm(amp[j]);
        return d;
    }

    // Circular mean of the position density, in [0, 2pi).
    double phi_bar() const {
        double cs = 0.0, sn = 0.0;
        for (int j = 0; j < n(); ++j) {
            double w = std::norm(amp[j]);
            cs += w * std::cos(phi(j));
            sn += w * std::sin(phi(j));
        }
        return wrap_2pi(std::atan2(sn, cs));
    }

    // Circular standard deviation about phi_bar.
    double angular_width() const {
        double pb = phi_bar(), s2 = 0.0, w = 0.0;
        for (int j = 0; j < n(); ++j) {
            double d = wrap_pi(phi(j) - pb);
            double nj = std::norm(amp[j]);
            s2 += nj * d * d;
            w += nj;
        }
        return std::sqrt(s2 / w);
    }

    // First two moments of the canonical mode number.
    void k_moments(double& kbar, double& kstd) const {
        std::vector<std::complex<double>> c(amp);
        fft_radix2(c, false);
        double w = 0.0, m1 = 0.0, m2 = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) {
            double p = std::norm(c[k]);
            double mode = fft_mode(k, c.size());
            w += p;
            m1 += p * mode;
            m2 += p * mode * mode;
        }
        kbar = m1 / w;
        kstd = std::sqrt(std::max(m2 / w - (m1 / w) * (m1 / w), 0.0));
    }
    double k_bar() const {
        double kb, ks;
        k_moments(kb, ks);
        return kb;
    }

    // Canonical momentum p_phi = hbar <k> / rho_c, in g cm/s.
    double p_bar() const { return cgs::hbar * k_bar() / geom.ring_radius; }
    // Kinetic angular velocity in dimensionless units, v = <k> - A(phi_bar).
    double v_bar_reduced(const GaugeProfile& A) const { return k_bar() - A(phi_bar()); }
    // Kinetic angular velocity in rad/s.
    double v_bar(const GaugeProfile& A) const { return v_bar_reduced(A) / geom.time_unit(); }
};

// Gaussian packet centered at phi0 with reduced mean velocity v0 and envelope
// |psi|^2 of standard deviation `width`, carrying the gauge prefactor
// exp(i integral_{phi0}^{phi} A).
inline WavePacket init_packet(double phi0, double v0, double width, const GaugeProfile& A, int N,
                              RingGeometry geom = RingGeometry{}) {
    if (!is_pow2(static_cast<std::size_t>(N)))
        throw numerical_error(errc::grid_mismatch, "grid size must be a power of two");
    WavePacket p;
    p.geom = geom;
    p.amp.resize(N);
    const double dphi = two_pi / N;
    if (width < 3.0 * dphi)
        throw numerical_error(errc::grid_mismatch, "packet width is unresolved by the grid");
    if (width > 0.8)
        throw numerical_error(errc::grid_mismatch, "packet is not localized on the ring");
    const double k_need = std::abs(v0) + std::abs(A.loop_mean()) + 4.0 / (2.0 * width);
    if (k_need > 0.45 * N)
        throw numerical_error(errc::grid_mismatch, "momentum content exceeds the grid bandwidth");

    std::vector<double> lam = gauge_tilde_potential(A, N);
    const double abar = A.loop_mean();
    for (int j = 0; j < N; ++j) {
        double d = wrap_pi(p.phi(j) - phi0);
        double envelope = std::exp(-d * d / (4.0 * width * width));
        double phase = v0 * d + abar * d + lam[j];  // lam(phi0) dropped: global phase
        p.amp[j] = envelope * std::exp(std::complex<double>(0.0, phase));
    }
    p.normalize();
    return p;
}

// ---------------------------------------------------------------------------
// Strang-split spectral propagator. For constant A the kinetic factor
// exp(-i dt (k - A)^2 / 2) is exact; a varying A(phi) is conjugated into the
// constant-mean factor by the periodic phase gauge_tilde_potential, which is
// exact as well (the zero-mean part of A is pure gauge on the ring).
// ---------------------------------------------------------------------------

class SplitStepper {
public:
    SplitStepper(int N, const GaugeProfile& A, std::function<double(double)> V, double dt)
        : n_(N), dt_(dt), vfun_(std::move(V)), abar_(A.loop_mean()) {
        lam_ = gauge_tilde_potential(A, N);
        exp_lam_.resize(N);
        vgrid_.resize(N, 0.0);
        for (int j = 0; j < N; ++j) {
            exp_lam_[j] = std::exp(std::complex<double>(0.0, lam_[j]));
            if (vfun_) vgrid_[j] = vfun_(two_pi * j / N);
        }
        build(dt);
    }

    double dt() const { return dt_; }

    // Largest kinetic eigenvalue carried by modes with non-negligible weight.
    double populated_kinetic_max(const std::vector<std::complex<double>>& conj_amp) const {
        std::vector<std::complex<double>> c(conj_amp);
        fft_radix2(c, false);
        double wmax = 0.0;
        for (const auto& x : c) wmax = std::max(wmax, std::norm(x));
        double emax = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (std::norm(c[k]) > 1e-24 * wmax) {
                double mode = fft_mode(k, c.size()) - abar_;
                emax = std::max(emax, 0.5 * mode * mode);
            }
        }
        return emax;
    }

    void to_conjugated(std::vector<std::complex<double>>& amp) const {
        for (int j = 0; j < n_; ++j) amp[j] *= std::conj(exp_lam_[j]);
    }
    void from_conjugated(std::vector<std::complex<double>>& amp) const {
        for (int j = 0; j < n_; ++j) amp[j] *= exp_lam_[j];
    }

    // One Strang step of length `step_dt` (rebuilds cached factors when the
    // length changes). Operates on the conjugated amplitudes.
    void step(std::vector<std::complex<double>>& amp, double step_dt) {
        if (step_dt != dt_) build(step_dt);
        for (int j = 0; j < n_; ++j) amp[j] *= exp_v_[j];
        fft_radix2(amp, false);
        for (int j = 0; j < n_; ++j) amp[j] *= exp_k_[j];
        fft_radix2(amp, true);
        for (int j = 0; j < n_; ++j) amp[j] *= exp_v_[j];
    }

    // Same, with an explicitly time-dependent potential evaluated at the
    // midpoint of the step.
    void step_td(std::vector<std::complex<double>>& amp, double t0, double step_dt,
                 const std::function<double(double, double)>& V_t) {
        if (step_dt != dt_) build(step_dt);
        const double tm = t0 + 0.5 * step_dt;
        for (int j = 0; j < n_; ++j)
            amp[j] *= std::exp(std::complex<double>(0.0, -0.5 * step_dt * V_t(two_pi * j / n_, tm)));
        fft_radix2(amp, false);
        for (int j = 0; j < n_; ++j) amp[j] *= exp_k_[j];
        fft_radix2(amp, true);
        for (int j = 0; j < n_; ++j)
            amp[j] *= std::exp(std::complex<double>(0.0, -0.5 * step_dt * V_t(two_pi * j / n_, tm)));
    }

private:
    void build(double dt) {
        dt_ = dt;
        exp_v_.resize(n_);
        exp_k_.resize(n_);
        for (int j = 0; j < n_; ++j)
            exp_v_[j] = std::exp(std::complex<double>(0.0, -0.5 * dt * vgrid_[j]));
        for (int k = 0; k < n_; ++k) {
            double mode = fft_mode(k, n_) - abar_;
            exp_k_[k] = std::exp(std::complex<double>(0.0, -0.5 * dt * mode * mode));
        }
    }

    int n_;
    double dt_;
    std::function<double(double)> vfun_;
    double abar_;
    std::vector<double> lam_, vgrid_;
    std::vector<std::complex<double>> exp_lam_, exp_v_, exp_k_;
};

// Evolve a packet by `steps` Strang steps of length dt (dimensionless time).
// V is the potential on the grid in reduced energy units (may be null).
inline WavePacket split_step_evolve(const WavePacket& p, const GaugeProfile& A,
                                    std::function<double(double)> V, double dt, long steps) {
    if (!(dt > 0.0) || steps < 0) throw config_error("split_step_evolve: bad dt/steps");
    WavePacket out = p;
    SplitStepper ss(p.n(), A, std::move(V), dt);
    ss.to_conjugated(out.amp);
    const double emax = ss.populated_kinetic_max(out.amp);
    if (dt * emax >= 0.1)
        throw numerical_error(errc::step_too_large,
                              "dt times the populated kinetic eigenvalue exceeds 0.1");
    for (long s = 0; s < steps; ++s) ss.step(out.amp, dt);
    ss.from_conjugated(out.amp);
    return out;
}

// Time-dependent-potential variant (midpoint-sampled Strang, used as the
// oracle partner of the Wei-Norman propagator).
inline WavePacket split_step_evolve_td(const WavePacket& p, const GaugeProfile& A,
                                       const std::function<double(double, double)>& V_t,
                                       double dt, long steps) {
    if (!(dt > 0.0) || steps < 0) throw config_error("split_step_evolve_td: bad dt/steps");
    WavePacket out = p;
    SplitStepper ss(p.n(), A, nullptr, dt);
    ss.to_conjugated(out.amp);
    const double emax = ss.populated_kinetic_max(out.amp);
    if (dt * emax >= 0.1)
        throw numerical_error(errc::step_too_large,
                              "dt times the populated kinetic eigenvalue exceeds 0.1");
    for (long s = 0; s < steps; ++s) ss.step_td(out.amp, s * dt, dt, V_t);
    ss.from_conjugated(out.amp);
    return out;
}

// ---------------------------------------------------------------------------
// Classical center-of-mass motion (reduced units). The trajectory is
// independent of A; the gauge potential only offsets the canonical momentum
// p = v + A(phi) and contributes A*v to the Lagrangian.
// ---------------------------------------------------------------------------

struct ClassicalSample {
    double t, phi, p, v;
};

struct ClassicalTrajectory {
    std::vector<ClassicalSample> samples;
    double action = 0.0;  // integral of v^2/2 + A v - V along the path
    double duration() const { return samples.empty() ? 0.0 : samples.back().t; }
    const ClassicalSample& front() const { return samples.front(); }
    const ClassicalSample& back() const { return samples.back(); }
};

// Velocity-Verlet integration of d2(phi)/dt2 = -V'(phi). `phi` lives on the
// covering line (unwrapped); V and dV take the unwrapped coordinate.
inline ClassicalTrajectory classical_trajectory(double phi0, double v0,
                                                const std::function<double(double)>& V,
                                                const std::function<double(double)>& dV,
                                                const GaugeProfile& A, double t_final,
                                                double dt) {
    if (!(dt > 0.0) || !(t_final >= 0.0)) throw config_error("classical_trajectory: bad dt/t");
    const long nsteps = std::max<long>(1, std::lround(std::ceil(t_final / dt)));
    const double h = t_final / nsteps;
    auto force = [&](double phi) { return dV ? -dV(phi) : 0.0; };
    auto pot = [&](double phi) { return V ? V(phi) : 0.0; };

    ClassicalTrajectory out;
    out.samples.reserve(nsteps + 1);
    double phi = phi0, v = v0;
    auto lagrangian = [&](double ph, double vv) {
        return 0.5 * vv * vv + A(wrap_2pi(ph)) * vv - pot(ph);
    };
    out.samples.push_back({0.0, phi, v + A(wrap_2pi(phi)), v});
    double Lprev = lagrangian(phi, v);
    for (long s = 1; s <= nsteps; ++s) {
        double vh = v + 0.5 * h * force(phi);
        phi += h * vh;
        v = vh + 0.5 * h * force(phi);
        double Lcur = lagrangian(phi, v);
        out.action += 0.5 * h * (Lprev + Lcur);
        Lprev = Lcur;
        out.samples.push_back({s * h, phi, v + A(wrap_2pi(phi)), v});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Wei-Norman propagator for H = p^2/2 + V0(t) + V1(t) phi:
// U = exp(-i a p^2) exp(-i b p) exp(-i c phi) exp(-i d).
// ---------------------------------------------------------------------------

struct WeiNormanParams {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
};

inline WeiNormanParams wei_norman_params(const std::function<double(double)>& V0,
                                         const std::function<double(double)>& V1,
                                         double t_final, long steps = 0) {
    WeiNormanParams p;
    p.a = 0.5 * t_final;
    if (t_final == 0.0) return p;
    if (steps <= 0) steps = std::max<long>(2000, std::lround(t_final / 1e-4));
    const double h = t_final / steps;
    auto v0 = [&](double t) { return V0 ? V0(t) : 0.0; };
    auto v1 = [&](double t) { return V1 ? V1(t) : 0.0; };
    double b = 0.0, c = 0.0, d = 0.0;
    // RK4 on (b, c, d): b' = t V1, c' = V1, d' = V0 + V1 b.
    for (long s = 0; s < steps; ++s) {
        double t = s * h;
        auto f = [&](double tt, double bb) {
            return std::array<double, 3>{tt * v1(tt), v1(tt), v0(tt) + v1(tt) * bb};
        };
        auto k1 = f(t, b);
        auto k2 = f(t + 0.5 * h, b + 0.5 * h * k1[0]);
        auto k3 = f(t + 0.5 * h, b + 0.5 * h * k2[0]);
        auto k4 = f(t + h, b + h * k3[0]);
        b += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
        c += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
        d += h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
    }
    p.b = b;
    p.c = c;
    p.d = d;
    return p;
}

namespace detail {
inline void require_seam_clear(const std::vector<std::complex<double>>& amp, double phi_center,
                               const char* who) {
    const int N = static_cast<int>(amp.size());
    double amax = 0.0;
    for (const auto& a : amp) amax = std::max(amax, std::abs(a));
    const double seam = wrap_2pi(phi_center + pi);
    const int js = static_cast<int>(std::floor(seam / (two_pi / N)));
    for (int o = -3; o <= 3; ++o) {
        int j = ((js + o) % N + N) % N;
        if (std::abs(amp[j]) > 1e-9 * amax)
            throw numerical_error(errc::unwrap_needed,
                                  std::string(who) + ": packet touches the coordinate seam");
    }
}
}  // namespace detail

// Apply the closed-form evolution for a (time-dependent) linear potential.
// The packet must stay clear of the seam opposite its initial center, where
// the unwrapped coordinate used by the exp(-i c phi) factor jumps.
inline WavePacket wei_norman_propagate(const WavePacket& p,
                                       const std::function<double(double)>& V0,
                                       const std::function<double(double)>& V1, double t_final) {
    WavePacket out = p;
    const int N = p.n();
    const double pb = p.phi_bar();
    detail::require_seam_clear(out.amp, pb, "wei_norman_propagate");
    WeiNormanParams prm = wei_norman_params(V0, V1, t_final);

    for (int j = 0; j < N; ++j) {
        double phi_val = pb + wrap_pi(out.phi(j) - pb);
        out.amp[j] *= std::exp(std::complex<double>(0.0, -(prm.d + prm.c * phi_val)));
    }
    fft_radix2(out.amp, false);
    for (int k = 0; k < N; ++k) {
        double mode = fft_mode(k, N);
        out.amp[k] *= std::exp(std::complex<double>(0.0, -(prm.b * mode + prm.a * mode * mode)));
    }
    fft_radix2(out.amp, true);
    detail::require_seam_clear(out.amp, pb, "wei_norman_propagate");
    return out;
}

// ---------------------------------------------------------------------------
// Frozen-profile semiclassical propagator: translate by the classical
// displacement, boost by the classical momentum change, multiply by the
// classical action phase.
// ---------------------------------------------------------------------------

inline WavePacket semiclassical_propagate(const WavePacket& p, const ClassicalTrajectory& traj,
                                          const GaugeProfile& A) {
    if (traj.samples.empty())
        throw config_error("semiclassical_propagate: empty trajectory");
    WavePacket out = p;
    const int N = p.n();

    double kbar, kstd;
    p.k_moments(kbar, kstd);
    const double t = traj.duration();
    const double sigma_phi = p.angular_width();
    // |psi|^2 width grows by < 5% when (sigma_k t) < 0.32 sigma_phi.
    if (kstd * t > 0.3202 * sigma_phi)
        throw numerical_error(errc::semiclassical_invalid,
                              "wave-packet diffusion bound exceeded for this duration");

    const double dphi_cl = traj.back().phi - traj.front().phi;
    const double dp_cl = traj.back().p - traj.front().p;

    fft_radix2(out.amp, false);
    for (int k = 0; k < N; ++k) {
        double mode = fft_mode(k, N);
        out.amp[k] *= std::exp(std::complex<double>(0.0, -mode * dphi_cl));
    }
    fft_radix2(out.amp, true);

    const double phi_t = wrap_2pi(traj.back().phi);
    const std::complex<double> global = std::exp(std::complex<double>(0.0, traj.action));
    for (int j = 0; j < N; ++j) {
        double x = wrap_pi(out.phi(j) - phi_t);
        out.amp[j] *= global * std::exp(std::complex<double>(0.0, dp_cl * x));
    }
    (void)A;
    return out;
}

// ---------------------------------------------------------------------------
// Two-packet interference experiment.
// ---------------------------------------------------------------------------

struct InterferenceOptions {
    int grid_N = 2048;
    double v0 = 40.0;      // reduced counter-propagation speed
    double width = 0.15;   // rad
    double dt = 0.0;       // reduced; 0 selects from the kinetic guard
    double t_max = 0.0;    // reduced; 0 selects 3x the free-overlap estimate
    std::function<double(double)> V;  // reduced potential, may be null
    RingGeometry geom;
};

struct InterferenceResult {
    std::vector<double> density;        // combined |Phi|^2
    std::vector<double> density_plus;   // per-packet envelopes
    std::vector<double> density_minus;
    double fringe_wavenumber = 0.0;     // K of cos(K x + chi), x = phi - phi_T
    double fringe_phase = 0.0;          // chi at the overlap center
    double extracted_gamma = 0.0;       // chi, reported modulo 2 pi
    double xi = 0.0;                    // chi minus the loop integral of A (gauge-independent)
    double contrast = 0.0;
    double overlap_time = 0.0;          // reduced
    double overlap_phi = 0.0;           // rad
    double gauge_loop_integral = 0.0;   // closed-loop integral of A
    int grid_N = 0;
    double v0 = 0.0, width = 0.0, dt_used = 0.0;
    long steps = 0;
    std::string note = "extracted_gamma is defined modulo 2*pi";
};

namespace detail {

struct FringeFit {
    double K, chi, contrast;
};

// Weighted fit of r(x) ~ contrast * cos(K x + chi).
inline FringeFit fit_fringe(const std::vector<double>& x, const std::vector<double>& r,
                            const std::vector<double>& wgt, double K_seed) {
    auto sse_at = [&](double K, double* a_out, double* b_out) {
        double caa = 0.0, cab = 0.0, cbb = 0.0, ra = 0.0, rb = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            double ca = std::cos(K * x[j]), sa = std::sin(K * x[j]);
            caa += wgt[j] * ca * ca;
            cab += wgt[j] * ca * sa;
            cbb += wgt[j] * sa * sa;
            ra += wgt[j] * r[j] * ca;
            rb += wgt[j] * r[j] * sa;
        }
        double det = caa * cbb - cab * cab;
        if (std::abs(det) < 1e-30) return 1e30;
        // model a cos(Kx) - b sin(Kx)
        double a = (cbb * ra + cab * (-rb)) / det;
        double b = -(cab * ra + caa * (-rb)) / det;
        double sse = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            double m = a * std::cos(K * x[j]) - b * std::sin(K * x[j]);
            sse += wgt[j] * (r[j] - m) * (r[j] - m);
        }
        if (a_out) *a_out = a;
        if (b_out) *b_out = b;
        return sse;
    };
    double K = golden_min([&](double kk) { return sse_at(kk, nullptr, nullptr); },
                          K_seed - 1.5, K_seed + 1.5, 1e-12);
    double a = 0.0, b = 0.0;
    sse_at(K, &a, &b);
    return {K, std::atan2(b, a), std::hypot(a, b)};
}

}  // namespace detail

inline InterferenceResult run_interference(const GaugeProfile& A,
                                           const InterferenceOptions& opts) {
    const int N = opts.grid_N;
    const double v0 = opts.v0;
    if (v0 <= 1e-12)
        throw numerical_error(errc::no_overlap, "counter-propagation speed must be positive");
    if (static_cast<double>(N) / (2.0 * v0) < 8.0)
        throw numerical_error(errc::grid_mismatch, "fewer than 8 grid points per fringe");

    WavePacket plus = init_packet(0.0, +v0, opts.width, A, N, opts.geom);
    WavePacket minus = init_packet(0.0, -v0, opts.width, A, N, opts.geom);
    WavePacket both = plus;
    for (int j = 0; j < N; ++j) both.amp[j] = (plus.amp[j] + minus.amp[j]);
    both.normalize();

    SplitStepper ss(N, A, opts.V, opts.dt > 0.0 ? opts.dt : 1.0);
    ss.to_conjugated(plus.amp);
    ss.to_conjugated(minus.amp);
    ss.to_conjugated(both.amp);

    double dt = opts.dt;
    const double emax = std::max(ss.populated_kinetic_max(plus.amp),
                                 ss.populated_kinetic_max(minus.amp));
    if (dt <= 0.0) dt = 0.05 / emax;
    if (dt * emax >= 0.1)
        throw numerical_error(errc::step_too_large,
                              "dt times the populated kinetic eigenvalue exceeds 0.1");
    const double t_max = opts.t_max > 0.0 ? opts.t_max : 3.0 * pi / v0;

    // March until the counter-propagating centers have separated by 2 pi
    // (circular-mean unwrapped tracking), keeping one step of history so the
    // crossing can be refined by interpolation and a partial step.
    double pp_prev = 0.0, pm_prev = 0.0;  // unwrapped centers
    double pp_circ = plus.phi_bar(), pm_circ = minus.phi_bar();
    double t = 0.0;
    std::vector<double> hist_t = {0.0}, hist_d = {0.0};
    std::vector<std::complex<double>> snap_p, snap_m, snap_b;
    double delta = 0.0;
    long steps = 0;
    while (delta < two_pi) {
        if (t > t_max)
            throw numerical_error(errc::no_overlap, "packets never re-overlapped within t_max");
        snap_p = plus.amp;
        snap_m = minus.amp;
        snap_b = both.amp;
        ss.step(plus.amp, dt);
        ss.step(minus.amp, dt);
        ss.step(both.amp, dt);
        t += dt;
        ++steps;
        double pc = plus.phi_bar(), mc = minus.phi_bar();
        pp_prev += wrap_pi(pc - pp_circ);
        pm_prev += wrap_pi(mc - pm_circ);
        pp_circ = pc;
        pm_circ = mc;
        delta = pp_prev - pm_prev;
        hist_t.push_back(t);
        hist_d.push_back(delta);
        if (hist_t.size() > 3) {
            hist_t.erase(hist_t.begin());
            hist_d.erase(hist_d.begin());
        }
    }

    // Refine the crossing time within the last step.
    double T = t;
    if (hist_t.size() == 3) {
        // quadratic through the last three (t, delta) points
        double t0 = hist_t[0], t1 = hist_t[1], t2 = hist_t[2];
        double d0 = hist_d[0] - two_pi, d1 = hist_d[1] - two_pi, d2 = hist_d[2] - two_pi;
        double best = t2;
        double lo = t1, hi = t2;
        for (int it = 0; it < 100; ++it) {
            double tm = 0.5 * (lo + hi);
            double l0 = (tm - t1) * (tm - t2) / ((t0 - t1) * (t0 - t2));
            double l1 = (tm - t0) * (tm - t2) / ((t1 - t0) * (t1 - t2));
            double l2 = (tm - t0) * (tm - t1) / ((t2 - t0) * (t2 - t1));
            double dm = d0 * l0 + d1 * l1 + d2 * l2;
            if (dm < 0.0)
                lo = tm;
            else
                hi = tm;
            best = 0.5 * (lo + hi);
        }
        T = best;
    }
    const double dt_part = T - (t - dt);
    plus.amp = snap_p;
    minus.amp = snap_m;
    both.amp = snap_b;
    if (dt_part > 0.0) {
        ss.step(plus.amp, dt_part);
        ss.step(minus.amp, dt_part);
        ss.step(both.amp, dt_part);
    }

    InterferenceResult out;
    out.grid_N = N;
    out.v0 = v0;
    out.width = opts.width;
    out.dt_used = dt;
    out.steps = steps;
    out.overlap_time = T;
    out.gauge_loop_integral = A.loop_integral();

    // Densities are gauge-conjugation invariant, no need to un-conjugate.
    out.density_plus = plus.density();
    out.density_minus = minus.density();
    for (auto& d : out.density_plus) d *= 0.5;  // components of Phi = (psi+ + psi-)/sqrt(2)
    for (auto& d : out.density_minus) d *= 0.5;
    out.density = both.density();
    out.overlap_phi = plus.phi_bar();

    // Fringe model: n - n+ - n- = 2 sqrt(n+ n-) cos(K x + chi).
    std::vector<double> x, r, wgt;
    double wmax = 0.0;
    std::vector<double> w_all(N);
    for (int j = 0; j < N; ++j) {
        w_all[j] = 2.0 * std::sqrt(out.density_plus[j] * out.density_minus[j]);
        wmax = std::max(wmax, w_all[j]);
    }
    std::vector<std::complex<double>> resid_fft(N);
    for (int j = 0; j < N; ++j) {
        double resid = out.density[j] - out.density_plus[j] - out.density_minus[j];
        resid_fft[j] = resid;
        if (w_all[j] > 1e-6 * wmax) {
            x.push_back(wrap_pi(both.phi(j) - out.overlap_phi));
            r.push_back(resid / w_all[j]);
            wgt.push_back(w_all[j]);
        }
    }
    if (x.size() < 16)
        throw numerical_error(errc::unfittable, "insufficient fringe support at overlap");

    fft_radix2(resid_fft, false);
    int k_seed = 4;
    double pmax = 0.0;
    for (int k = 4; k < N / 2; ++k) {
        double pw = std::norm(resid_fft[k]);
        if (pw > pmax) {
            pmax = pw;
            k_seed = k;
        }
    }
    detail::FringeFit fit = detail::fit_fringe(x, r, wgt, static_cast<double>(k_seed));
    if (fit.contrast < 0.05)
        throw numerical_error(errc::unfittable, "fringe contrast below 0.05");

    out.fringe_wavenumber = fit.K;
    out.fringe_phase = fit.chi;
    out.extracted_gamma = wrap_pi(fit.chi);
    out.xi = wrap_pi(fit.chi - out.gauge_loop_integral);
    out.contrast = std::min(fit.contrast, 1.0);
    return out;
}

// Fringe-phase difference between two runs sharing everything but the gauge
// profile, unwrapped against the predicted loop-integral difference. The
// per-packet envelopes must agree pointwise; they are A-independent.
inline double extract_fringe_shift(const InterferenceResult& with_A,
                                   const InterferenceResult& without_A) {
    if (with_A.grid_N != without_A.grid_N || with_A.v0 != without_A.v0 ||
        with_A.width != without_A.width)
        throw numerical_error(errc::inconsistent_runs, "runs differ in grid or packet setup");
    double nmax = 0.0, dev = 0.0;
    for (int j = 0; j < with_A.grid_N; ++j) {
        nmax = std::max(nmax, without_A.density[j]);
        dev = std::max({dev,
                        std::abs(with_A.density_plus[j] - without_A.density_plus[j]),
                        std::abs(with_A.density_minus[j] - without_A.density_minus[j])});
    }
    if (dev > 1e-8 * nmax)
        throw numerical_error(errc::inconsistent_runs,
                              "per-packet envelopes differ beyond tolerance");
    const double predicted = with_A.gauge_loop_integral - without_A.gauge_loop_integral;
    return predicted + wrap_pi(with_A.fringe_phase - without_A.fringe_phase - predicted);
}

}  // namespace ringberry
