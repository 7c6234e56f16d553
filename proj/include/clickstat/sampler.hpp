#pragma once

// Monte Carlo click measurements and plug-in estimation.
//
// Draws use std::mt19937_64 seeded with the 64-bit seed; uniform variates
// take the top 53 bits of each output, and outcomes are chosen by inverse
// CDF over the flattened outcome list in index order. Bootstrap resamples
// are multinomial, drawn as a chain of conditional binomials.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "clickstat/detector.hpp"
#include "clickstat/witness.hpp"

namespace clickstat {

struct RngSeed {
    std::uint64_t value = 0;
};

struct ClickHistogram {
    std::vector<unsigned> diodes;        // {N} or {N1, N2}
    std::vector<std::uint64_t> counts;   // row-major over click outcomes
    std::uint64_t total = 0;

    bool joint() const { return diodes.size() == 2; }
};

// Floor applied to every sampled criterion so that determinants that are
// zero up to rounding never count as violations.
inline constexpr double kSampledThresholdFloor = 1e-15;

ClickHistogram sample_clicks(const ClickStatistics& stats, std::uint64_t n_samples, RngSeed seed);
ClickHistogram sample_clicks(const JointClickStatistics& stats, std::uint64_t n_samples, RngSeed seed);

// c_k = counts_k / total with multinomial standard errors sqrt(c(1-c)/total).
ClickStatistics estimate_statistics(const ClickHistogram& hist);
JointClickStatistics estimate_joint_statistics(const ClickHistogram& hist);

// Plug-in witnesses from the histogram, with standard errors taken over
// `resamples` multinomial bootstrap replicates.
WitnessReport bootstrap_witness(const ClickHistogram& hist, unsigned resamples, RngSeed seed,
                                double threshold_sigmas = kDefaultThresholdSigmas,
                                double threshold = kSampledThresholdFloor);

// "k,count" or "k1,k2,count" with every outcome listed.
void write_histogram_csv(std::ostream& out, const ClickHistogram& hist);
ClickHistogram read_histogram_csv(std::istream& in);

} // namespace clickstat
