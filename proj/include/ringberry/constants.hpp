#pragma once

// Gaussian-CGS unit system throughout: Gauss, cm, s, erg, g.

namespace ringberry {

namespace cgs {
inline constexpr double mu_B = 9.2740100783e-21;  // Bohr magneton, erg/G
inline constexpr double hbar = 1.054571817e-27;   // erg*s
inline constexpr double amu  = 1.66053906660e-24; // g
// Field of a circular loop scales as loop_prefactor * I[A] with lengths in cm,
// result in G (0.2 = mu0/(2*pi) in G*cm/A).
inline constexpr double loop_prefactor = 0.2;
// Azimuthal field of an infinite straight wire on the z-axis: B_phi = wire_prefactor * I[A] / rho[cm].
inline constexpr double wire_prefactor = 0.2;
}  // namespace cgs

struct Atom {
    double mass;  // g
    double g_F;   // Lande factor, dimensionless
};

// 87Rb, F = 1 hyperfine manifold.
inline constexpr Atom rb87_f1{86.909180531 * cgs::amu, -0.5};

}  // namespace ringberry
