#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace ringberry {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Wrap to (-pi, pi].
inline double wrap_pi(double x) {
    double y = std::remainder(x, two_pi);
    if (y <= -pi) y += two_pi;
    return y;
}

// Wrap to [0, 2*pi).
inline double wrap_2pi(double x) {
    double y = std::fmod(x, two_pi);
    if (y < 0.0) y += two_pi;
    return y;
}

// Deterministic RNG with a pinned uniform/normal mapping so outputs are
// bit-identical across platforms for a fixed seed.
class DetRng {
public:
    explicit DetRng(std::uint64_t seed) : eng_(seed) {}
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    double normal() {
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }
    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// ---------------------------------------------------------------------------
// FFT, iterative radix-2. Forward: X_k = sum_j x_j exp(-2*pi*i*j*k/N);
// inverse divides by N. N must be a power of two.
// ---------------------------------------------------------------------------

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (!is_pow2(n)) throw std::invalid_argument("fft_radix2: size must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? two_pi : -two_pi) / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                std::complex<double> u = a[i + j];
                std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv;
    }
}

// Signed mode number for FFT bin k of an N-point grid.
inline double fft_mode(std::size_t k, std::size_t n) {
    return (k <= n / 2 - 1) ? static_cast<double>(k)
                            : static_cast<double>(k) - static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Periodic-trapezoid quadrature with node doubling. For smooth periodic
// integrands convergence is spectral; `converged` is false if the doubling
// never settles below rel_tol.
// ---------------------------------------------------------------------------

struct PeriodicAverage {
    double value = 0.0;
    int nodes = 0;
    double min_sample = 0.0;
    double max_sample = 0.0;
    bool converged = false;
};

inline PeriodicAverage periodic_average(const std::function<double(double)>& f, double period,
                                        double rel_tol = 1e-10, double abs_tol = 0.0, int n0 = 32,
                                        int max_nodes = 1 << 20) {
    PeriodicAverage out;
    int n = n0;
    double sum = 0.0;
    double mn = std::numeric_limits<double>::infinity();
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
        double v = f(period * j / n);
        sum += v;
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    double avg = sum / n;
    while (n < max_nodes) {
        double add = 0.0;
        for (int j = 0; j < n; ++j) {
            double v = f(period * (j + 0.5) / n);
            add += v;
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        double avg2 = 0.5 * (avg + add / n);
        n *= 2;
        bool ok = std::abs(avg2 - avg) <=
                  std::max(rel_tol * std::max(std::abs(avg2), 1e-300), abs_tol);
        avg = avg2;
        if (ok && n >= 4 * n0) {
            out.converged = true;
            break;
        }
    }
    out.value = avg;
    out.nodes = n;
    out.min_sample = mn;
    out.max_sample = mx;
    return out;
}

// Adaptive Simpson on [a, b].
namespace detail {
inline double simpson_rec(const std::function<double(double)>& f, double a, double fa, double b,
                          double fb, double m, double fm, double whole, double tol, int depth) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-12, int max_depth = 40) {
    if (a == b) return 0.0;
    double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

// ---------------------------------------------------------------------------
// Dense least squares via normal equations with column scaling. Small systems
// only. Throws std::runtime_error on rank deficiency.
// ---------------------------------------------------------------------------

inline std::vector<double> lstsq(const std::vector<std::vector<double>>& rows,
                                 const std::vector<double>& rhs,
                                 double* residual_norm = nullptr) {
    const std::size_t m = rows.size();
    if (m == 0 || rhs.size() != m) throw std::runtime_error("lstsq: bad shapes");
    const std::size_t n = rows[0].size();
    std::vector<double> scale(n, 0.0);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < n; ++j) scale[j] = std::max(scale[j], std::abs(r[j]));
    for (auto& s : scale)
        if (s == 0.0) s = 1.0;

    std::vector<std::vector<double>> ata(n, std::vector<double>(n, 0.0));
    std::vector<double> atb(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double aj = rows[i][j] / scale[j];
            atb[j] += aj * rhs[i];
            for (std::size_t k = j; k < n; ++k) ata[j][k] += aj * rows[i][k] / scale[k];
        }
    }
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < j; ++k) ata[j][k] = ata[k][j];

    // Gaussian elimination with partial pivoting.
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(ata[r][col]) > std::abs(ata[piv][col])) piv = r;
        if (std::abs(ata[piv][col]) < 1e-13 * static_cast<double>(m))
            throw std::runtime_error("lstsq: ill-conditioned system");
        std::swap(ata[col], ata[piv]);
        std::swap(atb[col], atb[piv]);
        for (std::size_t r = col + 1; r < n; ++r) {
            double fac = ata[r][col] / ata[col][col];
            for (std::size_t k = col; k < n; ++k) ata[r][k] -= fac * ata[col][k];
            atb[r] -= fac * atb[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = atb[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= ata[ii][k] * x[k];
        x[ii] = s / ata[ii][ii];
    }
    for (std::size_t j = 0; j < n; ++j) x[j] /= scale[j];

    if (residual_norm) {
        double rn = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double pred = 0.0;
            for (std::size_t j = 0; j < n; ++j) pred += rows[i][j] * x[j];
            rn += (pred - rhs[i]) * (pred - rhs[i]);
        }
        *residual_norm = std::sqrt(rn);
    }
    return x;
}

// Least-squares polynomial fit, coefficients in increasing order.
inline std::vector<double> polyfit(std::span<const double> x, std::span<const double> y,
                                   int degree) {
    std::vector<std::vector<double>> rows(x.size(), std::vector<double>(degree + 1));
    std::vector<double> rhs(y.begin(), y.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double p = 1.0;
        for (int j = 0; j <= degree; ++j) {
            rows[i][j] = p;
            p *= x[i];
        }
    }
    return lstsq(rows, rhs);
}

// ---------------------------------------------------------------------------
// Nelder-Mead simplex minimizer (dimension-generic, used in 2-D here).
// ---------------------------------------------------------------------------

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    int evals = 0;
    bool converged = false;
};

inline NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& fn,
                                    std::span<const double> x0, double scale, double ftol = 1e-14,
                                    double xtol = 1e-12, int max_evals = 4000) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> pts(n + 1, std::vector<double>(x0.begin(), x0.end()));
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += scale;
    std::vector<double> fv(n + 1);
    int evals = 0;
    auto eval = [&](std::span<const double> p) {
        ++evals;
        return fn(p);
    };
    for (std::size_t i = 0; i <= n; ++i) fv[i] = eval(pts[i]);

    NelderMeadResult out;
    while (evals < max_evals) {
        std::vector<std::size_t> idx(n + 1);
        for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> sp(n + 1);
        std::vector<double> sf(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            sp[i] = pts[idx[i]];
            sf[i] = fv[idx[i]];
        }
        pts = sp;
        fv = sf;

        double fspread = std::abs(fv[n] - fv[0]);
        double xspread = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            xspread = std::max(xspread, std::abs(pts[n][i] - pts[0][i]));
        if (fspread <= ftol * (std::abs(fv[0]) + 1e-300) && xspread <= xtol) {
            out.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j];
        }
        for (auto& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](double t) {
            std::vector<double> p(n);
            for (std::size_t j = 0; j < n; ++j) p[j] = centroid[j] + t * (pts[n][j] - centroid[j]);
            return p;
        };
        auto pr = blend(-1.0);
        double fr = eval(pr);
        if (fr < fv[0]) {
            auto pe = blend(-2.0);
            double fe = eval(pe);
            if (fe < fr) {
                pts[n] = pe;
                fv[n] = fe;
            } else {
                pts[n] = pr;
                fv[n] = fr;
            }
        } else if (fr < fv[n - 1]) {
            pts[n] = pr;
            fv[n] = fr;
        } else {
            auto pc = blend(fr < fv[n] ? -0.5 : 0.5);
            double fc = eval(pc);
            if (fc < std::min(fr, fv[n])) {
                pts[n] = pc;
                fv[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j)
                        pts[i][j] = pts[0][j] + 0.5 * (pts[i][j] - pts[0][j]);
                    fv[i] = eval(pts[i]);
                }
            }
        }
    }
    out.x = pts[0];
    out.f = fv[0];
    out.evals = evals;
    return out;
}

// Golden-section minimum refinement on [a, b].
inline double golden_min(const std::function<double(double)>& f, double a, double b,
                         double tol = 1e-12) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (std::abs(b - a) > tol * (std::abs(a) + std::abs(b) + 1.0)) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace ringberry
