#ifndef SBR_INVERSION_HPP
#define SBR_INVERSION_HPP

#include <complex>
#include <functional>
#include <span>
#include <vector>

namespace sbr {

using Complex = std::complex<double>;

/// Parameters of the Euler (Abate-Whitt) Fourier-series inversion.
///
/// The discretization error is roughly exp(-a_disc); n_terms is the length of
/// the base partial sum and m_euler the depth of binomial averaging applied to
/// the following partial sums.
struct EulerParams {
    double a_disc = 18.4;
    int n_terms = 15;
    int m_euler = 11;

    void validate() const;
};

/// F(s) for Re(s) > 0.
using Transform = std::function<Complex(Complex)>;
/// Component-wise transform, e.g. the solution of a linear system at s.
using VectorTransform = std::function<std::vector<Complex>(Complex)>;

/// One abscissa of the Euler rule: f(t) ~= sum_k weight_k * Re F(s_k).
struct EulerNode {
    Complex s;
    double weight;
};

std::vector<EulerNode> euler_nodes(double t, const EulerParams &params = {});

double invert(const Transform &transform, double t,
              const EulerParams &params = {});

/// Element-wise invert over a strictly increasing time grid.
std::vector<double> invert_many(const Transform &transform,
                                std::span<const double> ts,
                                const EulerParams &params = {});

/// Inverts every component of a vector-valued transform at one t. The
/// transform is evaluated once per node, possibly concurrently.
std::vector<double> invert_vector(const VectorTransform &transform, double t,
                                  const EulerParams &params = {});

} // namespace sbr

#endif
