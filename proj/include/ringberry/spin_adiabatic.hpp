#pragma once

#include <array>
#include <cmath>
#include <complex>

#include "ringberry/constants.hpp"
#include "ringberry/errors.hpp"
#include "ringberry/field_model.hpp"
#include "ringberry/numeric.hpp"

namespace ringberry {

using cplx = std::complex<double>;
using Vec3c = std::array<cplx, 3>;
using Mat3c = std::array<cplx, 9>;  // row-major 3x3

inline Vec3c matvec(const Mat3c& m, const Vec3c& v) {
    Vec3c r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r[i] += m[3 * i + j] * v[j];
    return r;
}

inline Mat3c matmul(const Mat3c& a, const Mat3c& b) {
    Mat3c r{};
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
            for (int j = 0; j < 3; ++j) r[3 * i + j] += a[3 * i + k] * b[3 * k + j];
    return r;
}

inline cplx inner(const Vec3c& a, const Vec3c& b) {
    cplx s = 0.0;
    for (int i = 0; i < 3; ++i) s += std::conj(a[i]) * b[i];
    return s;
}

inline double vec_norm(const Vec3c& a) { return std::sqrt(std::real(inner(a, a))); }

// Spin-1 operators in the |+1>, |0>, |-1> basis of F_z.
struct SpinOperators {
    Mat3c Fx, Fy, Fz;
    double mu_B = cgs::mu_B;
    double g_F = -0.5;

    static SpinOperators f1(double g_F = -0.5) {
        SpinOperators s;
        const double r = 1.0 / std::sqrt(2.0);
        const cplx i(0.0, 1.0);
        s.Fx = {0, r, 0, r, 0, r, 0, r, 0};
        s.Fy = {0, -i * r, 0, i * r, 0, -i * r, 0, i * r, 0};
        s.Fz = {1, 0, 0, 0, 0, 0, 0, 0, -1};
        s.g_F = g_F;
        return s;
    }
};

// exp(-i theta F.n) for spin 1. (F.n)^3 = F.n, so the exponential closes as a
// quadratic polynomial in F.n.
inline Mat3c spin1_rotation(double nx, double ny, double nz, double theta) {
    const SpinOperators s = SpinOperators::f1();
    Mat3c m{};
    for (int k = 0; k < 9; ++k) m[k] = nx * s.Fx[k] + ny * s.Fy[k] + nz * s.Fz[k];
    Mat3c m2 = matmul(m, m);
    Mat3c r{};
    const cplx i(0.0, 1.0);
    const double st = std::sin(theta), ct = std::cos(theta);
    for (int k = 0; k < 9; ++k) r[k] = -i * st * m[k] + (ct - 1.0) * m2[k];
    r[0] += 1.0;
    r[4] += 1.0;
    r[8] += 1.0;
    return r;
}

struct AdiabaticState {
    Vec3c amplitudes;  // F_z basis |+1>, |0>, |-1>
    double beta;
    double phi;
};

// Tilt angle of the field from the z-axis, in [0, pi].
inline double beta_angle(const FieldVector& b) {
    const double mag = b.magnitude();
    if (!(mag > 0.0)) throw numerical_error(errc::undefined_angle, "beta undefined at |B| = 0");
    double c = b.B_z / mag;
    c = std::clamp(c, -1.0, 1.0);
    return std::acos(c);
}

// Low-field-seeking eigenstate of F.B_hat with eigenvalue -1, for a field
// tilted by beta from z toward e_rho(phi). The smooth azimuthal gauge
// exp(i phi) * exp(-i F.e_phi beta) |-1>_z is used, which makes the Berry
// connection <state|d_phi|state> equal i cos(beta).
inline AdiabaticState lfs_state(double beta, double phi) {
    Mat3c rot = spin1_rotation(-std::sin(phi), std::cos(phi), 0.0, beta);
    Vec3c down{0.0, 0.0, 1.0};
    Vec3c v = matvec(rot, down);
    const cplx gauge = std::exp(cplx(0.0, phi));
    for (auto& a : v) a *= gauge;
    return {v, beta, phi};
}

// Central finite-difference of the azimuthal Berry connection
// <state | d/dphi | state>; analytic value is i cos(beta).
inline cplx berry_connection_check(double beta, double phi, double dphi) {
    if (!(dphi > 0.0) || dphi > 1e-5)
        throw config_error("berry_connection_check: need 0 < dphi <= 1e-5");
    const Vec3c c0 = lfs_state(beta, phi).amplitudes;
    const Vec3c cp = lfs_state(beta, phi + dphi).amplitudes;
    const Vec3c cm = lfs_state(beta, phi - dphi).amplitudes;
    Vec3c d;
    for (int i = 0; i < 3; ++i) d[i] = (cp[i] - cm[i]) / (2.0 * dphi);
    return inner(c0, d);
}

// Central finite-difference of <state | d/dt | state> at a fixed point; the
// beta(t) rotation about e_phi produces no diagonal connection.
inline cplx time_derivative_check(const FieldWaveform& w, double rho, double z, double t,
                                  double dt, double phi = 0.0) {
    if (!(dt > 0.0) || (!w.is_static() && dt > 0.01 * w.period()))
        throw config_error("time_derivative_check: need 0 < dt << period");
    auto beta_at = [&](double tt) { return beta_angle(eval_analytic_field(w, rho, z, tt)); };
    const Vec3c c0 = lfs_state(beta_at(t), phi).amplitudes;
    const Vec3c cp = lfs_state(beta_at(t + dt), phi).amplitudes;
    const Vec3c cm = lfs_state(beta_at(t - dt), phi).amplitudes;
    Vec3c d;
    for (int i = 0; i < 3; ++i) d[i] = (cp[i] - cm[i]) / (2.0 * dt);
    return inner(c0, d);
}

}  // namespace ringberry
