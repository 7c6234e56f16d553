#include "clickstat/sampler.hpp"

#include <boost/random/binomial_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace clickstat {

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

ClickHistogram sample_flat(const std::vector<double>& probs, std::vector<unsigned> diodes,
                           std::uint64_t n_samples, RngSeed seed) {
    if (n_samples < 1) throw Error(ErrorCode::InvalidArgument, "at least one sample is required");
    std::vector<double> cdf(probs.size());
    std::partial_sum(probs.begin(), probs.end(), cdf.begin());
    // Absorb rounding so that every uniform draw lands on an outcome.
    for (std::size_t i = probs.size(); i-- > 0;) {
        if (probs[i] > 0.0) {
            for (std::size_t j = i; j < cdf.size(); ++j) cdf[j] = 1.0;
            break;
        }
    }
    ClickHistogram hist;
    hist.diodes = std::move(diodes);
    hist.counts.assign(probs.size(), 0);
    hist.total = n_samples;
    std::mt19937_64 rng(seed.value);
    for (std::uint64_t i = 0; i < n_samples; ++i) {
        const double u = uniform01(rng);
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        ++hist.counts[std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1)];
    }
    return hist;
}

std::vector<double> frequencies(const ClickHistogram& hist) {
    if (hist.total == 0) throw Error(ErrorCode::EmptyHistogram, "histogram holds no events");
    std::vector<double> out(hist.counts.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<double>(hist.counts[i]) / static_cast<double>(hist.total);
    }
    return out;
}

std::vector<double> multinomial_errors(const std::vector<double>& freq, std::uint64_t total) {
    std::vector<double> out(freq.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::sqrt(freq[i] * (1.0 - freq[i]) / static_cast<double>(total));
    }
    return out;
}

// Multinomial(total, counts/total) as conditional binomials.
std::vector<std::uint64_t> multinomial_resample(const ClickHistogram& hist, std::mt19937_64& rng) {
    std::vector<std::uint64_t> out(hist.counts.size(), 0);
    std::int64_t remaining_events = static_cast<std::int64_t>(hist.total);
    std::uint64_t remaining_weight = hist.total;
    for (std::size_t i = 0; i < hist.counts.size() && remaining_events > 0; ++i) {
        if (hist.counts[i] == 0) continue;
        if (hist.counts[i] == remaining_weight) {
            out[i] = static_cast<std::uint64_t>(remaining_events);
            break;
        }
        const double p = static_cast<double>(hist.counts[i]) / static_cast<double>(remaining_weight);
        boost::random::binomial_distribution<std::int64_t, double> draw(remaining_events, p);
        const std::int64_t k = draw(rng);
        out[i] = static_cast<std::uint64_t>(k);
        remaining_events -= k;
        remaining_weight -= hist.counts[i];
    }
    return out;
}

struct Accumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t n = 0;

    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++n;
    }
    std::optional<double> stddev() const {
        if (n < 2) return std::nullopt;
        const double mean = sum / n;
        return std::sqrt(std::max(0.0, (sum_sq - n * mean * mean) / (n - 1)));
    }
};

WitnessReport report_for(const ClickHistogram& hist) {
    if (hist.joint()) return witness_report(estimate_joint_statistics(hist), 0.0);
    return witness_report(estimate_statistics(hist), 0.0);
}

} // namespace

ClickHistogram sample_clicks(const ClickStatistics& stats, std::uint64_t n_samples, RngSeed seed) {
    return sample_flat(stats.probs, {stats.diodes}, n_samples, seed);
}

ClickHistogram sample_clicks(const JointClickStatistics& stats, std::uint64_t n_samples, RngSeed seed) {
    return sample_flat(stats.probs, {stats.diodes1, stats.diodes2}, n_samples, seed);
}

ClickStatistics estimate_statistics(const ClickHistogram& hist) {
    if (hist.diodes.size() != 1) throw Error(ErrorCode::InvalidArgument, "expected a single-bank histogram");
    ClickStatistics out;
    out.diodes = hist.diodes[0];
    out.probs = frequencies(hist);
    out.stderrs = multinomial_errors(out.probs, hist.total);
    return out;
}

JointClickStatistics estimate_joint_statistics(const ClickHistogram& hist) {
    if (!hist.joint()) throw Error(ErrorCode::InvalidArgument, "expected a two-bank histogram");
    JointClickStatistics out;
    out.diodes1 = hist.diodes[0];
    out.diodes2 = hist.diodes[1];
    out.probs = frequencies(hist);
    out.stderrs = multinomial_errors(out.probs, hist.total);
    return out;
}

WitnessReport bootstrap_witness(const ClickHistogram& hist, unsigned resamples, RngSeed seed,
                                double threshold_sigmas, double threshold) {
    if (resamples < 100) throw Error(ErrorCode::InvalidArgument, "at least 100 bootstrap resamples are required");
    WitnessReport report = report_for(hist);

    std::vector<Accumulator> minors(report.leading_minors.size());
    Accumulator eig;
    Accumulator qb;
    Accumulator cross;
    std::mt19937_64 rng(seed.value);
    ClickHistogram replica = hist;
    for (unsigned r = 0; r < resamples; ++r) {
        replica.counts = multinomial_resample(hist, rng);
        const WitnessReport rep = report_for(replica);
        for (std::size_t i = 0; i < minors.size(); ++i) minors[i].add(rep.leading_minors[i]);
        eig.add(rep.min_eigenvalue);
        if (rep.qb) qb.add(*rep.qb);
        if (rep.cross_minor) cross.add(*rep.cross_minor);
    }

    WitnessUncertainties errors;
    for (const auto& m : minors) errors.leading_minors.push_back(m.stddev().value_or(0.0));
    errors.min_eigenvalue = eig.stddev().value_or(0.0);
    if (report.qb) errors.qb = qb.stddev();
    if (report.cross_minor) errors.cross_minor = cross.stddev();
    apply_uncertainty_verdict(report, errors, threshold_sigmas, threshold);
    return report;
}

void write_histogram_csv(std::ostream& out, const ClickHistogram& hist) {
    if (hist.joint()) {
        out << "k1,k2,count\n";
        const unsigned cols = hist.diodes[1] + 1;
        for (std::size_t i = 0; i < hist.counts.size(); ++i) {
            out << i / cols << ',' << i % cols << ',' << hist.counts[i] << '\n';
        }
    } else {
        out << "k,count\n";
        for (std::size_t i = 0; i < hist.counts.size(); ++i) out << i << ',' << hist.counts[i] << '\n';
    }
}

ClickHistogram read_histogram_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty histogram file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const bool joint = line == "k1,k2,count";
    if (!joint && line != "k,count") {
        throw Error(ErrorCode::ParseError, "histogram header must be 'k,count' or 'k1,k2,count'");
    }
    struct Row {
        unsigned k1 = 0;
        unsigned k2 = 0;
        std::uint64_t count = 0;
    };
    std::vector<Row> rows;
    unsigned max1 = 0;
    unsigned max2 = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string a, b, c;
        Row row;
        try {
            std::getline(fields, a, ',');
            if (joint) std::getline(fields, b, ',');
            std::getline(fields, c, ',');
            std::size_t used = 0;
            auto parse = [&used](const std::string& s) {
                if (s.empty() || s[0] == '-') throw std::invalid_argument("negative");
                const auto v = std::stoull(s, &used);
                if (used != s.size()) throw std::invalid_argument("trailing");
                return v;
            };
            row.k1 = static_cast<unsigned>(parse(a));
            if (joint) row.k2 = static_cast<unsigned>(parse(b));
            row.count = parse(c);
            std::string rest;
            if (std::getline(fields, rest)) throw std::invalid_argument("extra field");
        } catch (const std::exception&) {
            throw Error(ErrorCode::ParseError, "malformed histogram row " + std::to_string(line_no) + ": " + line);
        }
        max1 = std::max(max1, row.k1);
        max2 = std::max(max2, row.k2);
        rows.push_back(row);
    }
    if (rows.empty()) throw Error(ErrorCode::ParseError, "histogram has no rows");
    ClickHistogram hist;
    hist.diodes = joint ? std::vector<unsigned>{max1, max2} : std::vector<unsigned>{max1};
    hist.counts.assign(joint ? (max1 + 1) * (max2 + 1) : max1 + 1, 0);
    for (const auto& row : rows) {
        auto& slot = hist.counts[joint ? row.k1 * (max2 + 1) + row.k2 : row.k1];
        slot += row.count;
        hist.total += row.count;
    }
    return hist;
}

} // namespace clickstat
