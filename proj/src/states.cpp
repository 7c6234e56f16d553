#include "clickstat/states.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numeric>

namespace clickstat {

namespace {

void check_tolerance(double tol) {
    if (!(tol > 0.0 && tol < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "tail tolerance must lie in (0,1)");
    }
}

void check_non_negative(double value, const char* name) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be finite and non-negative");
    }
}

// Smallest K >= 0 with q^(K+1) <= tol, for 0 < q < 1.
unsigned geometric_cutoff(double q, double tol) {
    const double k = std::ceil(std::log(tol) / std::log(q)) - 1.0;
    return static_cast<unsigned>(std::max(0.0, k));
}

} // namespace

double PhotonNumberDistribution::mean() const {
    double m = 0.0;
    for (std::size_t n = 0; n < probs.size(); ++n) m += static_cast<double>(n) * probs[n];
    return m;
}

double PhotonNumberDistribution::total() const {
    return std::accumulate(probs.begin(), probs.end(), 0.0);
}

double CoherentSuperposition::max_intensity() const {
    double out = 0.0;
    for (const auto& t : terms) out = std::max(out, std::norm(t.amplitude));
    return out;
}

std::complex<double> coherent_overlap(std::complex<double> alpha, std::complex<double> beta) {
    return std::exp(-0.5 * std::norm(alpha) - 0.5 * std::norm(beta) + std::conj(alpha) * beta);
}

double superposition_norm(const CoherentSuperposition& state) {
    std::complex<double> total = 0.0;
    for (const auto& a : state.terms) {
        for (const auto& b : state.terms) {
            total += std::conj(a.coefficient) * b.coefficient * coherent_overlap(a.amplitude, b.amplitude);
        }
    }
    return total.real();
}

PhotonNumberDistribution JointPhotonDistribution::marginal(int mode) const {
    PhotonNumberDistribution out;
    out.tail_bound = tail_bound;
    out.probs.assign((mode == 0 ? cutoff1 : cutoff2) + 1, 0.0);
    for (unsigned n1 = 0; n1 <= cutoff1; ++n1) {
        for (unsigned n2 = 0; n2 <= cutoff2; ++n2) {
            out.probs[mode == 0 ? n1 : n2] += at(n1, n2);
        }
    }
    return out;
}

PhotonNumberDistribution coherent_distribution(double mean_photons, double tol) {
    check_non_negative(mean_photons, "mean photon number");
    check_tolerance(tol);
    PhotonNumberDistribution out;
    out.p_function = IntensityPFunction{mean_photons, {}};
    if (mean_photons == 0.0) {
        out.probs = {1.0};
        return out;
    }
    const double log_mu = std::log(mean_photons);
    for (unsigned n = 0;; ++n) {
        out.probs.push_back(std::exp(-mean_photons + n * log_mu - std::lgamma(n + 1.0)));
        // P(X > n) is the regularised lower incomplete gamma P(n+1, mu).
        const double tail = boost::math::gamma_p(n + 1.0, mean_photons);
        if (n >= mean_photons && tail <= tol) {
            out.tail_bound = tail;
            break;
        }
    }
    return out;
}

PhotonNumberDistribution thermal_distribution(double nbar, double tol) {
    check_non_negative(nbar, "mean photon number");
    check_tolerance(tol);
    PhotonNumberDistribution out;
    if (nbar == 0.0) {
        out.probs = {1.0};
        out.p_function = IntensityPFunction{0.0, {}};
        return out;
    }
    out.p_function = IntensityPFunction{nbar, {1.0 / nbar}};
    const double q = nbar / (nbar + 1.0);
    const unsigned cutoff = geometric_cutoff(q, tol);
    out.probs.resize(cutoff + 1);
    for (unsigned n = 0; n <= cutoff; ++n) out.probs[n] = std::pow(q, n) / (nbar + 1.0);
    out.tail_bound = std::pow(q, cutoff + 1);
    return out;
}

PhotonNumberDistribution spats_distribution(double nbar, double tol) {
    check_non_negative(nbar, "mean photon number");
    check_tolerance(tol);
    PhotonNumberDistribution out;
    if (nbar == 0.0) {
        out.probs = {0.0, 1.0};
        return out;
    }
    out.p_function = IntensityPFunction{nbar, {-1.0 / (nbar * nbar), (1.0 + nbar) / (nbar * nbar * nbar)}};
    const double q = nbar / (nbar + 1.0);
    const double norm = 1.0 / ((nbar + 1.0) * (nbar + 1.0));
    // Mass beyond K: q^K (K + 1 - K q).
    auto tail_after = [q](unsigned k) { return std::pow(q, k) * ((k + 1.0) - k * q); };
    unsigned cutoff = 1;
    while (tail_after(cutoff) > tol) ++cutoff;
    out.probs.resize(cutoff + 1, 0.0);
    for (unsigned n = 1; n <= cutoff; ++n) out.probs[n] = norm * n * std::pow(q, n - 1);
    out.tail_bound = tail_after(cutoff);
    return out;
}

PhotonNumberDistribution fock_distribution(unsigned n) {
    PhotonNumberDistribution out;
    out.probs.assign(n + 1, 0.0);
    out.probs[n] = 1.0;
    return out;
}

CoherentSuperposition coherent_state(std::complex<double> alpha) {
    return CoherentSuperposition{{{1.0, alpha}}};
}

CoherentSuperposition odd_coherent(std::complex<double> alpha) {
    const double intensity = std::norm(alpha);
    if (intensity == 0.0) {
        throw Error(ErrorCode::ZeroAmplitude, "odd coherent state is undefined at alpha = 0");
    }
    const double norm = 1.0 / std::sqrt(-2.0 * std::expm1(-2.0 * intensity));
    return CoherentSuperposition{{{norm, alpha}, {-norm, -alpha}}};
}

JointPhotonDistribution tmsv_joint(std::complex<double> xi, double tol) {
    check_tolerance(tol);
    const double x = std::norm(xi);
    if (!(x < 1.0)) {
        throw Error(ErrorCode::SqueezingOutOfRange, "|xi| must be below one");
    }
    JointPhotonDistribution out;
    const unsigned cutoff = x == 0.0 ? 0 : geometric_cutoff(x, tol);
    out.cutoff1 = out.cutoff2 = cutoff;
    out.probs.assign((cutoff + 1) * (cutoff + 1), 0.0);
    for (unsigned n = 0; n <= cutoff; ++n) out.at(n, n) = (1.0 - x) * std::pow(x, n);
    out.tail_bound = x == 0.0 ? 0.0 : std::pow(x, cutoff + 1);
    return out;
}

JointPhotonDistribution product_joint(const PhotonNumberDistribution& a, const PhotonNumberDistribution& b) {
    JointPhotonDistribution out;
    out.cutoff1 = a.cutoff();
    out.cutoff2 = b.cutoff();
    out.probs.resize(a.probs.size() * b.probs.size());
    for (unsigned n1 = 0; n1 <= out.cutoff1; ++n1) {
        for (unsigned n2 = 0; n2 <= out.cutoff2; ++n2) out.at(n1, n2) = a.probs[n1] * b.probs[n2];
    }
    // Mass outside the retained rectangle.
    out.tail_bound = a.tail_bound + b.tail_bound;
    return out;
}

JointPhotonDistribution mixture_joint(const std::vector<std::pair<double, JointPhotonDistribution>>& parts) {
    if (parts.empty()) throw Error(ErrorCode::InvalidArgument, "mixture needs at least one component");
    JointPhotonDistribution out;
    double weight_sum = 0.0;
    for (const auto& [w, d] : parts) {
        if (!(w >= 0.0)) throw Error(ErrorCode::InvalidArgument, "mixture weights must be non-negative");
        weight_sum += w;
        out.cutoff1 = std::max(out.cutoff1, d.cutoff1);
        out.cutoff2 = std::max(out.cutoff2, d.cutoff2);
    }
    if (std::abs(weight_sum - 1.0) > 1e-12) {
        throw Error(ErrorCode::InvalidArgument, "mixture weights must sum to one");
    }
    out.probs.assign((out.cutoff1 + 1) * (out.cutoff2 + 1), 0.0);
    for (const auto& [w, d] : parts) {
        for (unsigned n1 = 0; n1 <= d.cutoff1; ++n1) {
            for (unsigned n2 = 0; n2 <= d.cutoff2; ++n2) out.at(n1, n2) += w * d.at(n1, n2);
        }
        out.tail_bound += w * d.tail_bound;
    }
    return out;
}

double mandel_q(const PhotonNumberDistribution& dist) {
    double m1 = 0.0;
    double m2 = 0.0;
    for (std::size_t n = 0; n < dist.probs.size(); ++n) {
        const double x = static_cast<double>(n);
        m1 += x * dist.probs[n];
        m2 += x * x * dist.probs[n];
    }
    if (!(m1 > 0.0)) throw Error(ErrorCode::ZeroMeanPhotonNumber, "Mandel Q needs a positive mean");
    return (m2 - m1 * m1) / m1 - 1.0;
}

} // namespace clickstat
