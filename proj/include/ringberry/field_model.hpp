#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ringberry/constants.hpp"
#include "ringberry/elliptic.hpp"
#include "ringberry/errors.hpp"
#include "ringberry/numeric.hpp"

namespace ringberry {

enum class TrapMode { tort, static_azimuthal_bias };

// Second-order trap-field expansion around the symmetry axis,
//   B_rho = -(B1/2) rho - (B2/2) rho z
//   B_z   = B0 + B1 z + (B2/2)(z^2 - rho^2/2)
// with drive waveforms B0(t) = B2 (L^2 + n^2 sin(wt)) and
// B1(t) = B2 l cos(wt + b1_phase). An optional axial wire adds
// B_phi = wire_prefactor * I / rho.
struct FieldWaveform {
    double B2 = 0.0;                 // G/cm^2
    double L = 0.0;                  // cm
    double n = 0.0;                  // cm
    double l = 0.0;                  // cm
    double omega = 0.0;              // rad/s (drive, tort mode)
    double b1_phase = 0.0;           // rad; 0 keeps the cosine gradient drive,
                                     // -pi/2 puts the gradient in phase with the B0 modulation
    double bias_wire_current = 0.0;  // A
    TrapMode mode = TrapMode::tort;

    double B0(double t) const {
        if (mode == TrapMode::static_azimuthal_bias) return B2 * L * L;
        return B2 * (L * L + n * n * std::sin(omega * t));
    }
    double B1(double t) const {
        if (mode == TrapMode::static_azimuthal_bias) return B2 * l;
        return B2 * l * std::cos(omega * t + b1_phase);
    }
    double period() const { return two_pi / omega; }
    bool is_static() const { return mode == TrapMode::static_azimuthal_bias; }

    void validate() const {
        if (mode == TrapMode::tort && !(omega > 0.0))
            throw config_error("FieldWaveform: omega must be positive in tort mode");
        if (!(L > 0.0)) throw config_error("FieldWaveform: L must be positive");
        if (n < 0.0 || l < 0.0) throw config_error("FieldWaveform: n and l must be non-negative");
    }

    static FieldWaveform tort(double B2, double L, double n, double l, double omega,
                              double b1_phase = 0.0) {
        FieldWaveform w;
        w.B2 = B2;
        w.L = L;
        w.n = n;
        w.l = l;
        w.omega = omega;
        w.b1_phase = b1_phase;
        w.mode = TrapMode::tort;
        w.validate();
        return w;
    }

    static FieldWaveform static_ring(double B2, double L, double wire_current, double l = 0.0) {
        FieldWaveform w;
        w.B2 = B2;
        w.L = L;
        w.l = l;
        w.bias_wire_current = wire_current;
        w.mode = TrapMode::static_azimuthal_bias;
        w.validate();
        return w;
    }
};

struct FieldVector {
    double B_rho = 0.0;
    double B_phi = 0.0;
    double B_z = 0.0;
    double magnitude() const {
        return std::sqrt(B_rho * B_rho + B_phi * B_phi + B_z * B_z);
    }
};

inline FieldVector eval_analytic_field(const FieldWaveform& w, double rho, double z, double t) {
    if (rho < 0.0) throw numerical_error(errc::singular_point, "rho must be non-negative");
    const double b0 = w.B0(t), b1 = w.B1(t), b2 = w.B2;
    FieldVector f;
    f.B_rho = -0.5 * b1 * rho - 0.5 * b2 * rho * z;
    f.B_z = b0 + b1 * z + 0.5 * b2 * (z * z - 0.5 * rho * rho);
    if (w.bias_wire_current != 0.0) {
        if (rho == 0.0)
            throw numerical_error(errc::singular_point, "azimuthal bias diverges on the axis");
        f.B_phi = cgs::wire_prefactor * w.bias_wire_current / rho;
    }
    return f;
}

// First spatial derivatives of the poloidal components (the azimuthal bias is
// handled separately where needed since it only depends on rho).
struct FieldJacobian {
    double dBrho_drho, dBrho_dz, dBz_drho, dBz_dz;
};

inline FieldJacobian eval_analytic_jacobian(const FieldWaveform& w, double rho, double z,
                                            double t) {
    const double b1 = w.B1(t), b2 = w.B2;
    FieldJacobian j;
    j.dBrho_drho = -0.5 * b1 - 0.5 * b2 * z;
    j.dBrho_dz = -0.5 * b2 * rho;
    j.dBz_drho = -0.5 * b2 * rho;
    j.dBz_dz = b1 + b2 * z;
    return j;
}

// Gradient of |B| at fixed t, including the wire bias term.
inline void field_magnitude_gradient(const FieldWaveform& w, double rho, double z, double t,
                                     double& d_drho, double& d_dz) {
    FieldVector f = eval_analytic_field(w, rho, z, t);
    FieldJacobian j = eval_analytic_jacobian(w, rho, z, t);
    double mag = f.magnitude();
    if (mag <= 0.0) throw numerical_error(errc::singular_point, "gradient of |B| at a field zero");
    double dphi_drho = (w.bias_wire_current != 0.0)
                           ? -cgs::wire_prefactor * w.bias_wire_current / (rho * rho)
                           : 0.0;
    d_drho = (f.B_rho * j.dBrho_drho + f.B_z * j.dBz_drho + f.B_phi * dphi_drho) / mag;
    d_dz = (f.B_rho * j.dBrho_dz + f.B_z * j.dBz_dz) / mag;
}

struct ZeroPoint {
    double rho0;
    double z0;
};

// Vanishing point of the poloidal field at time t.
inline ZeroPoint zero_locus(const FieldWaveform& w, double t) {
    const double b0 = w.B0(t), b1 = w.B1(t), b2 = w.B2;
    if (!(b0 * b2 > 0.0))
        throw numerical_error(errc::no_zero_exists, "zero point requires B0*B2 > 0");
    const double radicand = 4.0 * b0 / b2 - 2.0 * (b1 / b2) * (b1 / b2);
    if (radicand < 0.0)
        throw numerical_error(errc::locus_vanished, "gradient term exceeds the bias, no zero");
    return {std::sqrt(radicand), -b1 / b2};
}

struct LocusSample {
    double t = 0.0;
    bool present = false;
    double rho0 = 0.0;
    double z0 = 0.0;
};

struct ZeroLocusCurve {
    std::vector<LocusSample> samples;
    bool closed_flag = false;  // true when the locus encircles the reference center
    int absent_count = 0;
};

// Trace the zero point over one drive period. closed_flag uses the winding
// number of the sampled polyline around `center` (default: centroid of the
// present samples); degenerate retraced arcs are filtered by their vanishing
// enclosed area.
inline ZeroLocusCurve trace_zero_locus(const FieldWaveform& w, int samples,
                                       std::optional<ZeroPoint> center = std::nullopt) {
    ZeroLocusCurve out;
    if (samples < 1) throw config_error("trace_zero_locus: need at least one sample");
    if (w.is_static()) {
        LocusSample s;
        s.t = 0.0;
        try {
            ZeroPoint p = zero_locus(w, 0.0);
            s.present = true;
            s.rho0 = p.rho0;
            s.z0 = p.z0;
        } catch (const numerical_error&) {
            out.absent_count = 1;
        }
        out.samples.push_back(s);
        return out;
    }
    const double T = w.period();
    for (int j = 0; j < samples; ++j) {
        LocusSample s;
        s.t = T * j / samples;
        try {
            ZeroPoint p = zero_locus(w, s.t);
            s.present = true;
            s.rho0 = p.rho0;
            s.z0 = p.z0;
        } catch (const numerical_error&) {
            ++out.absent_count;
        }
        out.samples.push_back(s);
    }

    std::vector<const LocusSample*> pres;
    for (const auto& s : out.samples)
        if (s.present) pres.push_back(&s);
    if (pres.size() < 3) return out;

    double cr = 0.0, cz = 0.0;
    for (auto* s : pres) {
        cr += s->rho0;
        cz += s->z0;
    }
    cr /= pres.size();
    cz /= pres.size();
    if (center) {
        cr = center->rho0;
        cz = center->z0;
    }

    double area = 0.0, winding = 0.0;
    double ext = 0.0;
    for (std::size_t i = 0; i < pres.size(); ++i) {
        const auto* a = pres[i];
        const auto* b = pres[(i + 1) % pres.size()];
        area += a->rho0 * b->z0 - b->rho0 * a->z0;
        double th_a = std::atan2(a->z0 - cz, a->rho0 - cr);
        double th_b = std::atan2(b->z0 - cz, b->rho0 - cr);
        winding += wrap_pi(th_b - th_a);
        ext = std::max({ext, std::abs(a->rho0 - cr), std::abs(a->z0 - cz)});
    }
    area = 0.5 * std::abs(area);
    winding /= two_pi;
    out.closed_flag = (ext > 0.0) && (area > 1e-6 * ext * ext) && (std::abs(winding) > 0.5);
    return out;
}

// ---------------------------------------------------------------------------
// Circular-coil realization (Biot-Savart via complete elliptic integrals).
// ---------------------------------------------------------------------------

struct Coil {
    double radius;          // cm
    double axial_position;  // cm
    double current;         // A
    int orientation = 1;    // +1/-1 winding sense
};

struct CoilSet {
    std::vector<Coil> coils;

    void validate() const {
        for (const auto& c : coils)
            if (!(c.radius > 0.0)) throw config_error("CoilSet: coil radius must be positive");
    }

    // Two Helmholtz pairs plus one anti-Helmholtz pair; the published
    // realization of the worked trap example.
    static CoilSet kurn_realization() {
        CoilSet s;
        s.coils = {
            {0.3, +0.10, 289.0, 1}, {0.3, -0.10, 289.0, 1},   // pair a
            {0.5, +0.25, -550.0, 1}, {0.5, -0.25, -550.0, 1}, // pair b
            {0.6, +0.50, 335.0, 1}, {0.6, -0.50, -335.0, 1},  // pair c (anti)
        };
        return s;
    }
};

// Field of a single loop of radius a at z = z0 carrying I amperes, evaluated
// at (rho, z). Gaussian-practical units: G, cm, A.
inline FieldVector eval_loop_field(double a, double z0, double current, double rho, double z) {
    const double C = cgs::loop_prefactor * current;
    const double u = z - z0;
    const double Q = (a + rho) * (a + rho) + u * u;
    const double D = (a - rho) * (a - rho) + u * u;
    if (D < 1e-18 * a * a)
        throw numerical_error(errc::singular_point, "field point on the coil wire");
    const double m = 4.0 * a * rho / Q;
    const EllipticKE ke = elliptic_ke(m);
    FieldVector f;
    f.B_z = C / std::sqrt(Q) * (ke.K + (a * a - rho * rho - u * u) / D * ke.E);
    if (rho > 1e-14 * a)
        f.B_rho = C * u / (rho * std::sqrt(Q)) * (-ke.K + (a * a + rho * rho + u * u) / D * ke.E);
    return f;
}

inline FieldVector eval_coil_field(const CoilSet& cs, double rho, double z) {
    if (rho < 0.0) throw numerical_error(errc::singular_point, "rho must be non-negative");
    FieldVector total;
    for (const auto& c : cs.coils) {
        FieldVector f =
            eval_loop_field(c.radius, c.axial_position, c.current * c.orientation, rho, z);
        total.B_rho += f.B_rho;
        total.B_z += f.B_z;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Least-squares fit of the second-order expansion to a sampled field map.
// ---------------------------------------------------------------------------

struct FieldSample {
    double rho, z;
    FieldVector B;
};

struct FieldExpansion {
    double B0;             // G
    double B1;             // G/cm
    double B2;             // G/cm^2
    double residual_norm;  // G, l2 over all sampled components
};

inline FieldExpansion fit_field_expansion(std::span<const FieldSample> samples) {
    if (samples.size() < 3)
        throw numerical_error(errc::fit_failed, "need at least 3 samples");
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    rows.reserve(2 * samples.size());
    for (const auto& s : samples) {
        rows.push_back({0.0, -0.5 * s.rho, -0.5 * s.rho * s.z});
        rhs.push_back(s.B.B_rho);
        rows.push_back({1.0, s.z, 0.5 * (s.z * s.z - 0.5 * s.rho * s.rho)});
        rhs.push_back(s.B.B_z);
    }
    double resid = 0.0;
    std::vector<double> x;
    try {
        x = lstsq(rows, rhs, &resid);
    } catch (const std::runtime_error& e) {
        throw numerical_error(errc::fit_failed, e.what());
    }
    return {x[0], x[1], x[2], resid};
}

// Rectangular (rho, z) stencil near the axis for expansion fits.
inline std::vector<FieldSample> sample_coil_stencil(const CoilSet& cs, double h, int n_rho = 3,
                                                    int n_z = 5) {
    std::vector<FieldSample> out;
    for (int i = 0; i < n_rho; ++i) {
        double rho = h * i / (n_rho - 1);
        for (int j = 0; j < n_z; ++j) {
            double z = -h + 2.0 * h * j / (n_z - 1);
            out.push_back({rho, z, eval_coil_field(cs, rho, z)});
        }
    }
    return out;
}

}  // namespace ringberry
