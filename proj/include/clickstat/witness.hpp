#pragma once

// Inverse path: click statistics -> normally ordered moments of the click
// operator pi -> matrices of moments and their minors.
//
// Every classical state (non-negative P function) gives a positive
// semidefinite matrix of moments, so a negative principal minor or a
// negative eigenvalue certifies nonclassical light. The criteria are
// sufficient, not necessary.

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "clickstat/detector.hpp"

namespace clickstat {

// values[m] = <:pi^m:>, m = 0..max_order.
struct PiMoments {
    std::vector<double> values;

    unsigned max_order() const { return static_cast<unsigned>(values.size()) - 1; }
};

// values at (m1, m2), row-major with m_d = 0..max_d.
struct JointPiMoments {
    unsigned max1 = 0;
    unsigned max2 = 0;
    std::vector<double> values;

    double at(unsigned m1, unsigned m2) const { return values[m1 * (max2 + 1) + m2]; }
};

// Exponent multi-index of a row/column; single-mode matrices use (m, 0).
using MomentIndex = std::pair<unsigned, unsigned>;

struct MomentMatrix {
    Eigen::MatrixXd entries;
    std::vector<MomentIndex> index_basis;

    Eigen::Index size() const { return entries.rows(); }
};

enum class Verdict { Nonclassical, ConsistentWithClassical };

std::string_view to_string(Verdict verdict) noexcept;

// Standard errors of the reported quantities (sampled inputs only).
struct WitnessUncertainties {
    std::vector<double> leading_minors;
    double min_eigenvalue = 0.0;
    std::optional<double> qb;
    std::optional<double> cross_minor;
};

struct WitnessReport {
    std::vector<double> leading_minors;
    double min_eigenvalue = 0.0;
    std::optional<double> qb;           // single bank, undefined when <c> is 0 or N
    std::optional<double> cross_minor;  // two banks
    Verdict verdict = Verdict::ConsistentWithClassical;
    double threshold = 0.0;
    double threshold_sigmas = 0.0;      // > 0 when uncertainties drive the verdict
    std::optional<WitnessUncertainties> uncertainties;
};

inline constexpr double kDefaultWitnessThreshold = 1e-9;
inline constexpr double kDefaultThresholdSigmas = 3.0;

// sum_k k (k-1) ... (k-m+1) c_k
double factorial_moment(const ClickStatistics& stats, unsigned m);

// <:pi^m:> = (N-m)!/N! sum_k k^(m) c_k for m = 0..N.
PiMoments pi_moments(const ClickStatistics& stats);
JointPiMoments joint_pi_moments(const JointClickStatistics& stats);

// Hankel matrix (<:pi^(m+m'):>) for m, m' = 0..floor(N/2).
MomentMatrix moment_matrix(const PiMoments& moments, unsigned diodes);

// (<:pi1^(a1+b1) pi2^(a2+b2):>) over exponents a_d <= floor(N_d/2), ordered by
// total degree and, within a degree, by decreasing power of the first mode:
// 1, pi1, pi2, pi1^2, pi1 pi2, pi2^2, ...
MomentMatrix joint_moment_matrix(const JointPiMoments& moments, unsigned diodes1, unsigned diodes2);

// Determinants of the k x k top-left blocks, k = 1..size.
std::vector<double> leading_principal_minors(const MomentMatrix& matrix);

// Determinant of the principal submatrix on the given rows/columns.
double principal_minor(const MomentMatrix& matrix, std::span<const std::size_t> indices);

double min_eigenvalue(const MomentMatrix& matrix);

// Q_B = N Var(c) / (<c>(N - <c>)) - 1.
double qb_parameter(const ClickStatistics& stats);

// <:(dpi1)^2:><:(dpi2)^2:> - <:dpi1 dpi2:>^2, the leading 3x3 minor of the
// joint matrix of moments. Non-negative for classically correlated light.
double cross_correlation_minor(const JointClickStatistics& stats);

// Exact-input reports: nonclassical iff some criterion < -threshold.
WitnessReport witness_report(const ClickStatistics& stats, double threshold = kDefaultWitnessThreshold);
WitnessReport witness_report(const JointClickStatistics& stats, double threshold = kDefaultWitnessThreshold);

// Re-applies the verdict with uncertainties attached: nonclassical iff some
// criterion lies below -max(threshold_sigmas * stderr, threshold). The
// minimum eigenvalue is reported but not used here, since its plug-in
// estimate is biased low whenever the true matrix is singular.
void apply_uncertainty_verdict(WitnessReport& report, const WitnessUncertainties& errors, double threshold_sigmas,
                               double threshold);

} // namespace clickstat
