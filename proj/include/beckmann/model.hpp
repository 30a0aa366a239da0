#pragma once

// Pointwise constitutive model of the regularized transport problem. The
// flux map sends a potential gradient p to a flux vector q; it splits into a
// power-law part (flux_alpha) that is dead below the threshold |p| <= w and a
// Huber part (flux_huber) that saturates above |p| >= w. Energy densities are
// the corresponding antiderivatives; energy_conjugate and flux_inverse give
// the convex-dual side in closed form.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace beckmann {

/// Regularization parameters. alpha_conj is the Holder conjugate
/// alpha/(alpha-1); alpha = 2 is self-conjugate.
struct RegParams {
    double epsilon = 0.5;
    double delta = 1e-2;
    double alpha = 2.0;
    double alpha_conj = 2.0;

    RegParams() = default;
    RegParams(double epsilon_, double delta_, double alpha_)
        : epsilon(epsilon_), delta(delta_), alpha(alpha_) {
        if (!(epsilon > 0.0))
            throw std::invalid_argument("RegParams: epsilon must be positive");
        if (!(delta >= 0.0))
            throw std::invalid_argument("RegParams: delta must be nonnegative");
        if (!(alpha > 1.0))
            throw std::invalid_argument("RegParams: alpha must exceed 1");
        alpha_conj = alpha / (alpha - 1.0);
    }
};

/// Power-law flux: ((|p|-w)_+ / epsilon)^(alpha_conj-1) * p/|p|.
/// Zero on the dead zone |p| <= w.
inline Eigen::Vector2d flux_alpha(double w, const Eigen::Vector2d& p, const RegParams& prm) {
    const double n = p.norm();
    if (n <= w) return Eigen::Vector2d::Zero();
    const double s = (n - w) / prm.epsilon;
    return std::pow(s, prm.alpha_conj - 1.0) / n * p;
}

/// Huber flux: delta * p / max(|p|, w). Linear inside |p| <= w, saturated
/// at magnitude delta outside.
inline Eigen::Vector2d flux_huber(double w, const Eigen::Vector2d& p, double delta) {
    return delta / std::max(p.norm(), w) * p;
}

/// Total flux map.
inline Eigen::Vector2d flux(double w, const Eigen::Vector2d& p, const RegParams& prm) {
    return flux_alpha(w, p, prm) + flux_huber(w, p, prm.delta);
}

/// Derivative of the total flux map with respect to p. Symmetric positive
/// semidefinite. At the kink |p| = w (and at p = 0) the inside limit
/// (delta/w) * I is used, which keeps the matrix uniformly definite.
inline Eigen::Matrix2d flux_jacobian(double w, const Eigen::Vector2d& p, const RegParams& prm) {
    const double n = p.norm();
    if (n <= w) return (prm.delta / w) * Eigen::Matrix2d::Identity();

    const Eigen::Vector2d u = p / n;
    const double s = (n - w) / prm.epsilon;
    const double radial =
        (prm.alpha_conj - 1.0) * std::pow(s, prm.alpha_conj - 2.0) / prm.epsilon;
    const double tangential = (std::pow(s, prm.alpha_conj - 1.0) + prm.delta) / n;
    const Eigen::Matrix2d uu = u * u.transpose();
    return radial * uu + tangential * (Eigen::Matrix2d::Identity() - uu);
}

/// Antiderivative of flux_alpha along rays:
/// (epsilon/alpha_conj) * ((|p|-w)_+ / epsilon)^alpha_conj.
inline double energy_alpha(double w, const Eigen::Vector2d& p, const RegParams& prm) {
    const double excess = std::max(p.norm() - w, 0.0);
    return prm.epsilon / prm.alpha_conj * std::pow(excess / prm.epsilon, prm.alpha_conj);
}

/// Antiderivative of flux_huber along rays:
/// delta * max(|p|, w) + (delta/2) * min(|p|^2/w, w).
inline double energy_huber(double w, const Eigen::Vector2d& p, double delta) {
    const double n = p.norm();
    return delta * std::max(n, w) + 0.5 * delta * std::min(n * n / w, w);
}

/// Density of the dual energy: energy_alpha + energy_huber.
inline double energy_density(double w, const Eigen::Vector2d& p, const RegParams& prm) {
    return energy_alpha(w, p, prm) + energy_huber(w, p, prm.delta);
}

/// Fenchel conjugate of energy_density in its vector argument:
///   |q| <= delta : |q|^2 w / (2 delta) - delta w
///   |q| >  delta : (epsilon/alpha) (|q|-delta)^alpha + |q| w - (3/2) delta w
/// Both branches meet at |q| = delta with value -delta w / 2.
inline double energy_conjugate(double w, const Eigen::Vector2d& q, const RegParams& prm) {
    const double n = q.norm();
    if (n <= prm.delta)
        return prm.delta > 0.0 ? n * n * w / (2.0 * prm.delta) - prm.delta * w : 0.0;
    return prm.epsilon / prm.alpha * std::pow(n - prm.delta, prm.alpha) + n * w -
           1.5 * prm.delta * w;
}

/// Inverse of the total flux map:
///   |z| <= delta : z w / delta
///   |z| >  delta : (epsilon (|z|-delta)^(alpha-1) + w) * z/|z|
/// For delta = 0 the map is set-valued at z = 0; the minimal-norm preimage
/// (zero) is returned.
inline Eigen::Vector2d flux_inverse(double w, const Eigen::Vector2d& z, const RegParams& prm) {
    const double n = z.norm();
    if (n <= prm.delta || n == 0.0)
        return prm.delta > 0.0 ? (w / prm.delta * z).eval() : Eigen::Vector2d::Zero();
    return (prm.epsilon * std::pow(n - prm.delta, prm.alpha - 1.0) + w) / n * z;
}

} // namespace beckmann
