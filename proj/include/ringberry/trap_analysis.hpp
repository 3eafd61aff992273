#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ringberry/constants.hpp"
#include "ringberry/errors.hpp"
#include "ringberry/field_model.hpp"
#include "ringberry/numeric.hpp"

namespace ringberry {

// Zeeman potential prefactor for the trapped low-field seeker: the adiabatic
// eigenvalue is -mu_B g_F |B|, positive for g_F < 0.
inline double potential_prefactor(const Atom& atom) { return -cgs::mu_B * atom.g_F; }

// Drive-period average of |B| at a point. Static waveforms return the
// instantaneous magnitude.
inline double time_avg_field_magnitude(const FieldWaveform& w, double rho, double z,
                                       double rel_tol = 1e-10) {
    if (w.is_static()) return eval_analytic_field(w, rho, z, 0.0).magnitude();
    auto f = [&](double t) { return eval_analytic_field(w, rho, z, t).magnitude(); };
    PeriodicAverage pa = periodic_average(f, w.period(), rel_tol);
    if (!pa.converged)
        throw numerical_error(errc::quadrature_failure, "time average of |B| did not converge");
    return pa.value;
}

// Gradient of <|B|> by quadrature of the analytic d|B| integrand (no finite
// differences, so stationarity can be resolved far below the quadrature
// tolerance of the magnitude itself).
inline std::array<double, 2> time_avg_field_gradient(const FieldWaveform& w, double rho, double z,
                                                     double rel_tol = 1e-12) {
    auto component = [&](int which) {
        auto f = [&, which](double t) {
            double gr, gz;
            field_magnitude_gradient(w, rho, z, t, gr, gz);
            return which == 0 ? gr : gz;
        };
        if (w.is_static()) return f(0.0);
        // absolute floor: gradient components legitimately vanish at the center
        const double gscale = std::abs(w.B2) * w.L;
        PeriodicAverage pa = periodic_average(f, w.period(), rel_tol, rel_tol * gscale);
        return pa.value;
    };
    return {component(0), component(1)};
}

// Minimum of |B| over one period at a point (dense sampling plus golden
// refinement).
inline double min_field_magnitude_over_period(const FieldWaveform& w, double rho, double z,
                                              int samples = 4096) {
    if (w.is_static()) return eval_analytic_field(w, rho, z, 0.0).magnitude();
    auto f = [&](double t) { return eval_analytic_field(w, rho, z, t).magnitude(); };
    const double T = w.period();
    double best_t = 0.0, best = f(0.0);
    for (int j = 1; j < samples; ++j) {
        double v = f(T * j / samples);
        if (v < best) {
            best = v;
            best_t = T * j / samples;
        }
    }
    double t_ref = golden_min(f, best_t - T / samples, best_t + T / samples, 1e-14);
    return std::min(best, f(t_ref));
}

struct TrapCenter {
    double rho_c = 0.0;
    double z_c = 0.0;
    double avg_B = 0.0;  // G
};

struct TrapCenterOptions {
    int starts = 5;
    double box_halfwidth_in_L = 2.0;
    double grad_rel_tol = 1e-10;  // |grad<B>| * L / <B> at convergence
    int newton_iters = 20;
};

// Locate the minimum of the time-averaged field magnitude in the (rho, z)
// half-plane: multi-start Nelder-Mead inside a box around the zero-locus
// centroid, then Newton polish on the quadrature gradient.
inline TrapCenter find_trap_center(const FieldWaveform& w,
                                   TrapCenterOptions opt = TrapCenterOptions{}) {
    if (w.is_static())
        throw numerical_error(errc::trap_not_formed,
                              "find_trap_center applies to driven (tort) waveforms");
    const double L = w.L;

    // Box center: centroid of the zero locus over one period.
    double cr = 0.0, cz = 0.0;
    int npres = 0;
    ZeroLocusCurve locus = trace_zero_locus(w, 64);
    for (const auto& s : locus.samples)
        if (s.present) {
            cr += s.rho0;
            cz += s.z0;
            ++npres;
        }
    if (npres > 0) {
        cr /= npres;
        cz /= npres;
    } else {
        cr = 2.0 * L;
        cz = 0.0;
    }
    const double hw = opt.box_halfwidth_in_L * L;
    const double rho_lo = std::max(1e-6 * L, cr - hw), rho_hi = cr + hw;
    const double z_lo = cz - hw, z_hi = cz + hw;

    auto objective = [&](std::span<const double> x) {
        double rho = x[0], z = x[1];
        if (rho < rho_lo || rho > rho_hi || z < z_lo || z > z_hi) return 1e30;
        try {
            return time_avg_field_magnitude(w, rho, z, 1e-11);
        } catch (const numerical_error&) {
            return 1e30;
        }
    };

    std::vector<std::array<double, 2>> starts = {
        {cr, cz},
        {std::min(cr + 0.7 * L, rho_hi), cz + 0.5 * L},
        {std::min(cr + 0.7 * L, rho_hi), cz - 0.5 * L},
        {std::max(cr - 0.7 * L, rho_lo), cz + 0.5 * L},
        {std::max(cr - 0.7 * L, rho_lo), cz - 0.5 * L},
    };
    while (static_cast<int>(starts.size()) < opt.starts)
        starts.push_back({cr + 0.3 * L * starts.size(), cz});

    struct Candidate {
        double rho, z, val;
        bool polished;
    };
    std::vector<Candidate> cands;
    for (const auto& s0 : starts) {
        NelderMeadResult nm = nelder_mead(objective, std::span<const double>(s0.data(), 2),
                                          0.3 * L, 1e-13, 1e-10 * L, 600);
        double rho = nm.x[0], z = nm.x[1];
        bool polished = false;

        // Newton polish on the quadrature gradient.
        for (int it = 0; it < opt.newton_iters; ++it) {
            std::array<double, 2> g;
            try {
                g = time_avg_field_gradient(w, rho, z);
            } catch (const numerical_error&) {
                break;
            }
            double scale = time_avg_field_magnitude(w, rho, z, 1e-11);
            double rel = std::max(std::abs(g[0]), std::abs(g[1])) * L / scale;
            if (rel < opt.grad_rel_tol) {
                polished = true;
                break;
            }
            const double h = 1e-4 * L;
            auto gp = time_avg_field_gradient(w, rho + h, z);
            auto gm = time_avg_field_gradient(w, rho - h, z);
            auto gzp = time_avg_field_gradient(w, rho, z + h);
            auto gzm = time_avg_field_gradient(w, rho, z - h);
            double hrr = (gp[0] - gm[0]) / (2 * h);
            double hrz = 0.5 * ((gp[1] - gm[1]) / (2 * h) + (gzp[0] - gzm[0]) / (2 * h));
            double hzz = (gzp[1] - gzm[1]) / (2 * h);
            double det = hrr * hzz - hrz * hrz;
            double dr, dz;
            if (det > 0.0 && hrr > 0.0) {
                dr = -(hzz * g[0] - hrz * g[1]) / det;
                dz = -(-hrz * g[0] + hrr * g[1]) / det;
            } else {
                double gn = std::hypot(g[0], g[1]);
                dr = -0.1 * L * g[0] / gn;
                dz = -0.1 * L * g[1] / gn;
            }
            double step = std::hypot(dr, dz);
            if (step > 0.2 * L) {
                dr *= 0.2 * L / step;
                dz *= 0.2 * L / step;
            }
            rho += dr;
            z += dz;
            if (rho < rho_lo || rho > rho_hi || z < z_lo || z > z_hi) break;
        }
        double val = objective(std::array<double, 2>{rho, z});
        if (val < 1e29) cands.push_back({rho, z, val, polished});
    }
    if (cands.empty())
        throw numerical_error(errc::trap_not_formed, "no interior minimum found in the search box");

    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.val != b.val) return a.val < b.val;
        return a.rho < b.rho;  // deterministic tie-break: smallest rho_c
    });
    const Candidate& best = cands[0];

    int agree = 0;
    for (const auto& c : cands)
        if (std::hypot(c.rho - best.rho, c.z - best.z) < 1e-4 * L) ++agree;
    if (agree < 2 || !best.polished)
        throw numerical_error(errc::trap_not_formed, "multi-start consensus not reached");

    const double edge = 1e-3 * hw;
    if (best.rho - rho_lo < edge || rho_hi - best.rho < edge || best.z - z_lo < edge ||
        z_hi - best.z < edge)
        throw numerical_error(errc::trap_not_formed, "minimum sits on the search-box boundary");

    return {best.rho, best.z, best.val};
}

struct Hessian2 {
    double hrr, hzz, hrz;
};

// Central-difference Hessian with one Richardson step (h and h/2).
inline Hessian2 potential_hessian(const std::function<double(double, double)>& U, double rho,
                                  double z, double h) {
    auto hess_at = [&](double hh) {
        Hessian2 H;
        double f0 = U(rho, z);
        H.hrr = (U(rho + hh, z) - 2 * f0 + U(rho - hh, z)) / (hh * hh);
        H.hzz = (U(rho, z + hh) - 2 * f0 + U(rho, z - hh)) / (hh * hh);
        H.hrz = (U(rho + hh, z + hh) - U(rho + hh, z - hh) - U(rho - hh, z + hh) +
                 U(rho - hh, z - hh)) /
                (4 * hh * hh);
        return H;
    };
    Hessian2 Hh = hess_at(h), Hh2 = hess_at(0.5 * h);
    return {(4 * Hh2.hrr - Hh.hrr) / 3.0, (4 * Hh2.hzz - Hh.hzz) / 3.0,
            (4 * Hh2.hrz - Hh.hrz) / 3.0};
}

struct TrapFrequencies {
    double f_rho;  // Hz
    double f_z;    // Hz
    Hessian2 hessian;  // of the potential, erg/cm^2
};

inline TrapFrequencies frequencies_from_hessian(const Hessian2& H, double mass) {
    if (!(H.hrr > 0.0) || !(H.hzz > 0.0) || !(H.hrr * H.hzz - H.hrz * H.hrz > 0.0))
        throw numerical_error(errc::not_a_minimum, "Hessian is not positive-definite");
    return {std::sqrt(H.hrr / mass) / two_pi, std::sqrt(H.hzz / mass) / two_pi, H};
}

// Transverse trap frequencies from the curvature of U = -mu_B g_F <|B|> at a
// trap center.
inline TrapFrequencies trap_frequencies(const FieldWaveform& w, const TrapCenter& c,
                                        const Atom& atom) {
    const double pref = potential_prefactor(atom);
    auto U = [&](double rho, double z) {
        return pref * time_avg_field_magnitude(w, rho, z, 1e-12);
    };
    Hessian2 H = potential_hessian(U, c.rho_c, c.z_c, 1e-4 * w.L);
    return frequencies_from_hessian(H, atom.mass);
}

struct TrapCharacterization {
    double rho_c, z_c;                  // cm
    std::optional<double> f_rho, f_z;   // Hz (driven traps only)
    double hessian_cross = 0.0;         // erg/cm^2
    double potential_at_center;         // erg
    double larmor_frequency_min;        // Hz over one drive period at the center
    std::optional<double> omega_over_larmor;  // drive vs Larmor frequency
    std::optional<double> trap_over_omega;    // trap vs drive frequency
    std::vector<std::string> warnings;
};

inline TrapCharacterization adiabaticity_report(const FieldWaveform& w, const TrapCenter& c,
                                                const Atom& atom) {
    TrapCharacterization out;
    out.rho_c = c.rho_c;
    out.z_c = c.z_c;
    const double pref = potential_prefactor(atom);
    out.potential_at_center = pref * time_avg_field_magnitude(w, c.rho_c, c.z_c);

    double minB = min_field_magnitude_over_period(w, c.rho_c, c.z_c);
    double scaleB = std::abs(w.B2) * w.L * w.L;
    if (minB <= 1e-9 * scaleB)
        throw numerical_error(errc::majorana_risk, "field magnitude vanishes at the trap center");
    out.larmor_frequency_min = cgs::mu_B * std::abs(atom.g_F) * minB / (two_pi * cgs::hbar);

    if (!w.is_static()) {
        TrapFrequencies tf = trap_frequencies(w, c, atom);
        out.f_rho = tf.f_rho;
        out.f_z = tf.f_z;
        out.hessian_cross = tf.hessian.hrz;
        const double f_drive = w.omega / two_pi;
        out.omega_over_larmor = f_drive / out.larmor_frequency_min;
        out.trap_over_omega = std::max(tf.f_rho, tf.f_z) / f_drive;
        if (*out.omega_over_larmor > 0.1)
            out.warnings.push_back("drive frequency is not small against the Larmor frequency");
        if (*out.trap_over_omega > 0.1)
            out.warnings.push_back("trap frequency is not small against the drive frequency");
    }
    return out;
}

}  // namespace ringberry
