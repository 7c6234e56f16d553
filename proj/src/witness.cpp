#include "clickstat/witness.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace clickstat {

namespace {

using MatrixLD = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// N!/(N-m)!
double falling(unsigned n, unsigned m) {
    double out = 1.0;
    for (unsigned i = 0; i < m; ++i) out *= static_cast<double>(n - i);
    return out;
}

double determinant(const MatrixLD& block) {
    if (block.rows() == 0) return 1.0;
    return static_cast<double>(block.partialPivLu().determinant());
}

std::vector<MomentIndex> joint_basis(unsigned cap1, unsigned cap2) {
    std::vector<MomentIndex> basis;
    for (unsigned a1 = 0; a1 <= cap1; ++a1) {
        for (unsigned a2 = 0; a2 <= cap2; ++a2) basis.emplace_back(a1, a2);
    }
    std::stable_sort(basis.begin(), basis.end(), [](const MomentIndex& x, const MomentIndex& y) {
        const unsigned dx = x.first + x.second;
        const unsigned dy = y.first + y.second;
        if (dx != dy) return dx < dy;
        return x.first > y.first;
    });
    return basis;
}

bool below(double value, double bound) { return value < -bound; }

} // namespace

std::string_view to_string(Verdict verdict) noexcept {
    return verdict == Verdict::Nonclassical ? "nonclassical" : "consistent-with-classical";
}

double factorial_moment(const ClickStatistics& stats, unsigned m) {
    if (m > stats.diodes) {
        throw Error(ErrorCode::OrderExceedsDiodes,
                    "order " + std::to_string(m) + " exceeds " + std::to_string(stats.diodes) + " diodes");
    }
    double sum = 0.0;
    for (unsigned k = m; k <= stats.diodes; ++k) sum += falling(k, m) * stats.probs[k];
    return sum;
}

PiMoments pi_moments(const ClickStatistics& stats) {
    PiMoments out;
    out.values.resize(stats.diodes + 1);
    for (unsigned m = 0; m <= stats.diodes; ++m) {
        out.values[m] = factorial_moment(stats, m) / falling(stats.diodes, m);
    }
    return out;
}

JointPiMoments joint_pi_moments(const JointClickStatistics& stats) {
    JointPiMoments out;
    out.max1 = stats.diodes1;
    out.max2 = stats.diodes2;
    out.values.assign((out.max1 + 1) * (out.max2 + 1), 0.0);
    for (unsigned m1 = 0; m1 <= out.max1; ++m1) {
        for (unsigned m2 = 0; m2 <= out.max2; ++m2) {
            double sum = 0.0;
            for (unsigned k1 = m1; k1 <= stats.diodes1; ++k1) {
                for (unsigned k2 = m2; k2 <= stats.diodes2; ++k2) {
                    sum += falling(k1, m1) * falling(k2, m2) * stats.at(k1, k2);
                }
            }
            out.values[m1 * (out.max2 + 1) + m2] = sum / (falling(stats.diodes1, m1) * falling(stats.diodes2, m2));
        }
    }
    return out;
}

MomentMatrix moment_matrix(const PiMoments& moments, unsigned diodes) {
    const unsigned half = diodes / 2;
    if (moments.values.empty() || moments.max_order() < 2 * half) {
        throw Error(ErrorCode::InsufficientOrder, "moments up to order " + std::to_string(2 * half) + " required");
    }
    MomentMatrix out;
    out.entries.resize(half + 1, half + 1);
    for (unsigned i = 0; i <= half; ++i) {
        out.index_basis.emplace_back(i, 0);
        for (unsigned j = 0; j <= half; ++j) out.entries(i, j) = moments.values[i + j];
    }
    return out;
}

MomentMatrix joint_moment_matrix(const JointPiMoments& moments, unsigned diodes1, unsigned diodes2) {
    const unsigned cap1 = diodes1 / 2;
    const unsigned cap2 = diodes2 / 2;
    if (moments.max1 < 2 * cap1 || moments.max2 < 2 * cap2) {
        throw Error(ErrorCode::InsufficientOrder, "joint moments do not reach twice the per-mode caps");
    }
    MomentMatrix out;
    out.index_basis = joint_basis(cap1, cap2);
    const auto n = static_cast<Eigen::Index>(out.index_basis.size());
    out.entries.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& a = out.index_basis[i];
            const auto& b = out.index_basis[j];
            out.entries(i, j) = moments.at(a.first + b.first, a.second + b.second);
        }
    }
    return out;
}

std::vector<double> leading_principal_minors(const MomentMatrix& matrix) {
    const MatrixLD m = matrix.entries.cast<long double>();
    std::vector<double> out;
    for (Eigen::Index k = 1; k <= m.rows(); ++k) out.push_back(determinant(m.topLeftCorner(k, k)));
    return out;
}

double principal_minor(const MomentMatrix& matrix, std::span<const std::size_t> indices) {
    MatrixLD block(indices.size(), indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        for (std::size_t j = 0; j < indices.size(); ++j) {
            if (indices[i] >= static_cast<std::size_t>(matrix.size()) ||
                indices[j] >= static_cast<std::size_t>(matrix.size())) {
                throw Error(ErrorCode::InvalidArgument, "minor index outside the matrix");
            }
            block(i, j) = matrix.entries(indices[i], indices[j]);
        }
    }
    return determinant(block);
}

double min_eigenvalue(const MomentMatrix& matrix) {
    const MatrixLD m = matrix.entries.cast<long double>();
    Eigen::SelfAdjointEigenSolver<MatrixLD> solver(m, Eigen::EigenvaluesOnly);
    return static_cast<double>(solver.eigenvalues().minCoeff());
}

double qb_parameter(const ClickStatistics& stats) {
    const double n = stats.diodes;
    const double mean = stats.mean();
    const double slack = 1e-14 * std::max(1.0, n);
    if (!(mean > slack) || !(mean < n - slack)) {
        throw Error(ErrorCode::DegenerateMean, "Q_B is undefined for <c> = 0 or <c> = N");
    }
    return n * stats.variance() / (mean * (n - mean)) - 1.0;
}

double cross_correlation_minor(const JointClickStatistics& stats) {
    if (stats.diodes1 < 2 || stats.diodes2 < 2) {
        throw Error(ErrorCode::OrderExceedsDiodes, "second moments need at least two diodes per bank");
    }
    const JointPiMoments m = joint_pi_moments(stats);
    const double var1 = m.at(2, 0) - m.at(1, 0) * m.at(1, 0);
    const double var2 = m.at(0, 2) - m.at(0, 1) * m.at(0, 1);
    const double cov = m.at(1, 1) - m.at(1, 0) * m.at(0, 1);
    return var1 * var2 - cov * cov;
}

WitnessReport witness_report(const ClickStatistics& stats, double threshold) {
    WitnessReport report;
    report.threshold = threshold;
    const MomentMatrix matrix = moment_matrix(pi_moments(stats), stats.diodes);
    report.leading_minors = leading_principal_minors(matrix);
    report.min_eigenvalue = min_eigenvalue(matrix);
    try {
        report.qb = qb_parameter(stats);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateMean) throw;
    }
    bool flagged = below(report.min_eigenvalue, threshold);
    for (double minor : report.leading_minors) flagged = flagged || below(minor, threshold);
    if (report.qb) flagged = flagged || below(*report.qb, threshold);
    report.verdict = flagged ? Verdict::Nonclassical : Verdict::ConsistentWithClassical;
    return report;
}

WitnessReport witness_report(const JointClickStatistics& stats, double threshold) {
    WitnessReport report;
    report.threshold = threshold;
    const MomentMatrix matrix = joint_moment_matrix(joint_pi_moments(stats), stats.diodes1, stats.diodes2);
    report.leading_minors = leading_principal_minors(matrix);
    report.min_eigenvalue = min_eigenvalue(matrix);
    if (stats.diodes1 >= 2 && stats.diodes2 >= 2) report.cross_minor = cross_correlation_minor(stats);
    bool flagged = below(report.min_eigenvalue, threshold);
    for (double minor : report.leading_minors) flagged = flagged || below(minor, threshold);
    if (report.cross_minor) flagged = flagged || below(*report.cross_minor, threshold);
    report.verdict = flagged ? Verdict::Nonclassical : Verdict::ConsistentWithClassical;
    return report;
}

void apply_uncertainty_verdict(WitnessReport& report, const WitnessUncertainties& errors, double threshold_sigmas,
                               double threshold) {
    auto bound = [&](double stderr_value) { return std::max(threshold_sigmas * stderr_value, threshold); };
    bool flagged = false;
    for (std::size_t i = 0; i < report.leading_minors.size() && i < errors.leading_minors.size(); ++i) {
        flagged = flagged || below(report.leading_minors[i], bound(errors.leading_minors[i]));
    }
    if (report.qb && errors.qb) flagged = flagged || below(*report.qb, bound(*errors.qb));
    if (report.cross_minor && errors.cross_minor) {
        flagged = flagged || below(*report.cross_minor, bound(*errors.cross_minor));
    }
    report.uncertainties = errors;
    report.threshold = threshold;
    report.threshold_sigmas = threshold_sigmas;
    report.verdict = flagged ? Verdict::Nonclassical : Verdict::ConsistentWithClassical;
}

} // namespace clickstat
