#include "doctest.h"

#include <cmath>
#include <random>

#include "clickstat/detector.hpp"

using namespace clickstat;

namespace {

double binom(unsigned n, unsigned k, double p) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)) * std::pow(p, k) *
           std::pow(1 - p, n - k);
}

double sum(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s;
}

const std::vector<ResponseFunction>& all_responses() {
    static const std::vector<ResponseFunction> r = {
        LinearResponse{0.9},  AffineResponse{0.8, 0.3}, PowerResponse{3},
        PolynomialResponse{{0.0, 1.0, 0.25}}, NPhotonAbsorption{2}, NPhotonAbsorption{3},
    };
    return r;
}

// TMSV table at |xi|^2 = 0.5, N = 4, eta = 0.8 (independent 60-digit oracle).
const double kTmsvTable[5][5] = {
    {0.51020408163265306, 0.042517006802721088, 0.0027138514980460269, 0.00011799354339330552, 2.622078742073456e-6},
    {0.042517006802721088, 0.19225081336882579, 0.038551708632321821, 0.0042334653144749616, 0.00022478365943411536},
    {0.0027138514980460269, 0.038551708632321821, 0.059126538431737193, 0.016759764898896148, 0.0018957555866178588},
    {0.00011799354339330552, 0.0042334653144749616, 0.016759764898896148, 0.014843011532626092, 0.0037283043931491751},
    {2.622078742073456e-6, 0.00022478365943411536, 0.0018957555866178588, 0.0037283043931491751, 0.0020850422185647137},
};

} // namespace

TEST_CASE("response validation") {
    CHECK_NOTHROW(validate_response(LinearResponse{1.0}, 10));
    CHECK_THROWS_AS(validate_response(LinearResponse{0.0}, 10), Error);
    CHECK_THROWS_AS(validate_response(LinearResponse{1.5}, 10), Error);
    CHECK_THROWS_AS(validate_response(AffineResponse{0.5, -0.1}, 10), Error);
    CHECK_THROWS_AS(validate_response(PowerResponse{0}, 10), Error);
    CHECK_THROWS_AS(validate_response(NPhotonAbsorption{0}, 10), Error);
    CHECK_THROWS_AS(validate_response(PolynomialResponse{{-0.1, 1.0}}, 10), Error);
    CHECK_THROWS_AS(validate_response(PolynomialResponse{{0.0, 1.0, -0.5}}, 10), Error);
    CHECK_THROWS_AS(validate_response(PolynomialResponse{{0.0, 1.0, -1.0, 0.2}}, 10), Error);  // dips below 0
    CHECK_NOTHROW(validate_response(PolynomialResponse{{0.0, 1.0, 0.25}}, 10));
    CHECK(evaluate_response(AffineResponse{0.5, 2.0}, 0.0) == 2.0);
    CHECK(evaluate_response(NPhotonAbsorption{2}, 1.0) == doctest::Approx(1.0 - std::log(2.0)));
}

TEST_CASE("response series") {
    SUBCASE("linear") {
        const auto h = response_series<double>(LinearResponse{0.6}, 4, 1.0, 10);
        for (int k = 0; k <= 10; ++k) {
            CHECK(h[k] == doctest::Approx(std::pow(-0.15, k) / std::tgamma(k + 1.0)).epsilon(1e-14));
        }
    }
    SUBCASE("two-photon absorption, one diode") {
        const auto h = response_series<double>(NPhotonAbsorption{2}, 1, 1.0, 10);
        for (int k = 0; k <= 10; ++k) {
            CHECK(h[k] == doctest::Approx(std::pow(-1.0, k) * (1 - k) / std::tgamma(k + 1.0)).epsilon(1e-13));
        }
    }
    SUBCASE("affine with nu = 2") {
        const auto h = response_series<double>(AffineResponse{1.0, 2.0}, 1, 1.0, 10);
        for (int k = 0; k <= 10; ++k) {
            CHECK(h[k] == doctest::Approx(std::exp(-2.0) * std::pow(-1.0, k) / std::tgamma(k + 1.0)).epsilon(1e-14));
        }
    }
    SUBCASE("affine equals the matching polynomial") {
        const auto a = response_series<double>(AffineResponse{0.7, 0.4}, 3, 2.5, 12);
        const auto p = response_series<double>(PolynomialResponse{{0.4, 0.7}}, 3, 2.5, 12);
        for (int k = 0; k <= 12; ++k) CHECK(std::abs(a[k] - p[k]) < 1e-15);
    }
}

TEST_CASE("single-photon statistics") {
    for (unsigned n : {1u, 2u, 8u, 16u}) {
        for (double eta : {0.1, 0.5, 0.9, 1.0}) {
            const auto c = click_statistics(fock_distribution(1), DetectorConfig{n, LinearResponse{eta}});
            CHECK(std::abs(c.probs[0] - (1 - eta)) < 1e-14);
            CHECK(std::abs(c.probs[1] - eta) < 1e-14);
            for (unsigned k = 2; k <= n; ++k) CHECK(std::abs(c.probs[k]) < 1e-14);
        }
    }
}

TEST_CASE("vacuum never clicks") {
    for (const auto& r : all_responses()) {
        if (std::holds_alternative<AffineResponse>(r)) continue;
        const auto c = click_statistics(fock_distribution(0), DetectorConfig{6, r});
        CHECK(c.probs[0] == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("coherent light stays binomial for every response") {
    for (double mu : {0.25, 1.0, 4.0, 16.0}) {
        for (unsigned n : {4u, 16u}) {
            for (const auto& r : all_responses()) {
                const DetectorConfig det{n, r};
                const double p = 1 - std::exp(-evaluate_response(r, mu / n));
                const auto from_distribution = click_statistics(coherent_distribution(mu), det);
                const auto from_amplitude = click_statistics(coherent_state(std::sqrt(mu)), det);
                for (unsigned k = 0; k <= n; ++k) {
                    CHECK(std::abs(from_distribution.probs[k] - binom(n, k, p)) < 1e-10);
                    CHECK(std::abs(from_amplitude.probs[k] - binom(n, k, p)) < 1e-10);
                }
            }
        }
    }
    const auto c = click_statistics(coherent_state(2.0), DetectorConfig{16, LinearResponse{1.0}});
    CHECK(c.probs[0] == doctest::Approx(std::exp(-4.0)).epsilon(1e-12));
    CHECK(1 - std::exp(-0.25) == doctest::Approx(0.221199).epsilon(1e-6));
}

TEST_CASE("normalization across the test grid") {
    const std::vector<PhotonNumberDistribution> states = {
        coherent_distribution(3.0), thermal_distribution(1.5), spats_distribution(2.0), fock_distribution(7),
    };
    for (std::size_t i = 0; i < states.size(); ++i) {
        const auto& s = states[i];
        const bool classical = i < 2;
        for (unsigned n : {1u, 4u, 8u, 16u}) {
            for (const auto& r : all_responses()) {
                // Nonlinear responses are not no-click probabilities on nonclassical
                // light: SPATS with x^3 gives c_0 = -0.057 at N = 1.
                const bool nonlinear =
                    std::holds_alternative<PowerResponse>(r) || std::holds_alternative<PolynomialResponse>(r);
                if (nonlinear && !classical) {
                    try {
                        const auto c = click_statistics(s, DetectorConfig{n, r});
                        CHECK(std::abs(sum(c.probs) - 1) < 1e-10);
                    } catch (const Error& e) {
                        CHECK((e.code() == ErrorCode::NegativeProbability ||
                               e.code() == ErrorCode::DivergentPhotonSum));
                    }
                    continue;
                }
                const auto c = click_statistics(s, DetectorConfig{n, r});
                CHECK(std::abs(sum(c.probs) - 1) < 1e-10);
                for (double p : c.probs) CHECK(p >= 0.0);
            }
        }
    }
}

TEST_CASE("higher efficiency gives more clicks") {
    const auto state = thermal_distribution(2.0);
    double previous = -1;
    for (double eta = 0.1; eta <= 1.0; eta += 0.1) {
        const double mean = click_statistics(state, DetectorConfig{8, LinearResponse{eta}}).mean();
        CHECK(mean >= previous);
        previous = mean;
    }
}

TEST_CASE("joint statistics") {
    const DetectorConfig det{4, LinearResponse{0.8}};
    SUBCASE("two-mode vacuum") {
        const auto j = joint_click_statistics(tmsv_joint(0.0), det, det);
        CHECK(j.at(0, 0) == doctest::Approx(1.0));
    }
    SUBCASE("frozen TMSV table") {
        const auto j = joint_click_statistics(tmsv_joint(std::sqrt(0.5)), det, det);
        for (unsigned a = 0; a <= 4; ++a) {
            for (unsigned b = 0; b <= 4; ++b) CHECK(j.at(a, b) == doctest::Approx(kTmsvTable[a][b]).epsilon(1e-11));
        }
        const auto thermal = click_statistics(thermal_distribution(1.0), det);
        for (int mode : {0, 1}) {
            const auto m = j.marginal(mode);
            for (unsigned k = 0; k <= 4; ++k) CHECK(std::abs(m.probs[k] - thermal.probs[k]) < 1e-10);
        }
    }
    SUBCASE("product of coherent states factorizes") {
        const DetectorConfig det2{3, LinearResponse{0.5}};
        const auto j = joint_click_statistics(product_joint(coherent_distribution(1.5), coherent_distribution(3.0)),
                                              det, det2);
        const double p1 = 1 - std::exp(-0.8 * 1.5 / 4);
        const double p2 = 1 - std::exp(-0.5 * 3.0 / 3);
        for (unsigned a = 0; a <= 4; ++a) {
            for (unsigned b = 0; b <= 3; ++b) CHECK(std::abs(j.at(a, b) - binom(4, a, p1) * binom(3, b, p2)) < 1e-10);
        }
    }
    SUBCASE("marginals match single-bank statistics") {
        const auto a = spats_distribution(0.7);
        const auto b = thermal_distribution(1.2);
        const DetectorConfig det2{6, NPhotonAbsorption{2}};
        const auto j = joint_click_statistics(product_joint(a, b), det, det2);
        const auto ca = click_statistics(a, det);
        const auto cb = click_statistics(b, det2);
        for (unsigned k = 0; k <= 4; ++k) CHECK(std::abs(j.marginal(0).probs[k] - ca.probs[k]) < 1e-10);
        for (unsigned k = 0; k <= 6; ++k) CHECK(std::abs(j.marginal(1).probs[k] - cb.probs[k]) < 1e-10);
    }
}

TEST_CASE("generating function") {
    const auto c = click_statistics(thermal_distribution(1.0), DetectorConfig{8, LinearResponse{0.9}});
    CHECK(generating_function(c, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    const double eta = 0.35;
    const auto f = click_statistics(fock_distribution(1), DetectorConfig{5, LinearResponse{eta}});
    for (double z : {-1.0, 0.0, 0.4, 2.0}) CHECK(generating_function(f, z) == doctest::Approx(1 - eta + eta * z));
    const auto b = binomial_statistics(7, 0.3);
    for (double z : {-0.5, 0.5, 1.5}) CHECK(generating_function(b, z) == doctest::Approx(std::pow(0.7 + 0.3 * z, 7)));
}

TEST_CASE("multimode coherent light reduces to one effective mode") {
    CHECK(multimode_effective_intensity(std::vector<double>{0.4}, std::vector<double>{3.0}) == doctest::Approx(1.2));
    CHECK(multimode_effective_intensity(std::vector<double>{0.5, 0.5}, std::vector<double>{2.0, 2.0}) ==
          doctest::Approx(2.0));
    CHECK(multimode_effective_intensity(std::vector<double>{}, std::vector<double>{}) == 0.0);
    CHECK_THROWS_AS(multimode_effective_intensity(std::vector<double>{0.5}, std::vector<double>{}), Error);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> eta(0.1, 1.0), inten(0.0, 4.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> etas, intensities;
        std::vector<PhotonNumberDistribution> modes;
        for (int m = 0; m < 3; ++m) {
            etas.push_back(eta(rng));
            intensities.push_back(inten(rng));
            modes.push_back(coherent_distribution(intensities.back()));
        }
        const auto multi = multimode_click_statistics(modes, etas, 8);
        const auto single = click_statistics(coherent_distribution(multimode_effective_intensity(etas, intensities)),
                                             DetectorConfig{8, LinearResponse{1.0}});
        for (unsigned k = 0; k <= 8; ++k) CHECK(std::abs(multi.probs[k] - single.probs[k]) < 1e-12);
    }
}

TEST_CASE("precision settings") {
    const auto state = spats_distribution(3.0);
    const DetectorConfig det{8, LinearResponse{0.9}};
    const auto lo = click_statistics(state, det, Precision{128, true});
    const auto hi = click_statistics(state, det, Precision{1024, false});
    for (unsigned k = 0; k <= 8; ++k) CHECK(std::abs(lo.probs[k] - hi.probs[k]) < 1e-14);
    // Bright light makes the alternating Fock sums cancel heavily; the
    // automatic extension must land on the high-precision answer.
    const auto state2 = thermal_distribution(30.0);
    const DetectorConfig det2{16, LinearResponse{1.0}};
    const auto auto_ext = click_statistics(state2, det2, Precision{128, true});
    const auto fixed = click_statistics(state2, det2, Precision{1024, false});
    for (unsigned k = 0; k <= 16; ++k) CHECK(std::abs(auto_ext.probs[k] - fixed.probs[k]) < 1e-12);
}

TEST_CASE("direct moments against the closed form on coherent light") {
    for (double mu : {0.5, 3.0}) {
        const auto m = direct_pi_moments(coherent_distribution(mu), DetectorConfig{6, LinearResponse{0.7}});
        REQUIRE(m.size() == 7);
        for (unsigned k = 0; k <= 6; ++k) {
            CHECK(m[k] == doctest::Approx(std::pow(1 - std::exp(-0.7 * mu / 6), k)).epsilon(1e-11));
        }
    }
}

TEST_CASE("cubic response on thermal and SPATS light") {
    // Intensity integrals of P(I) against the diode kernel, 40-digit quadrature.
    const double thermal[5] = {0.85565993152476155, 0.086775225711039063, 0.031028035616691496,
                               0.01565199017534627, 0.010884816972161626};
    const double thermal_pi[5] = {1.0, 0.059831633839776842, 0.023882151329283343, 0.014797814515998193,
                                  0.010884816972161626};
    const double spats[5] = {0.38089469101197265, 0.26633977738378745, 0.14996827633211085, 0.10194066915285605,
                             0.100856586119273};
    const double spats_pi[5] = {1.0, 0.31888117049591732, 0.1768216334177195, 0.12634175340748701,
                                0.100856586119273};
    const DetectorConfig det{4, PowerResponse{3}};
    const auto ct = click_statistics(thermal_distribution(1.0), det);
    const auto cs = click_statistics(spats_distribution(1.0), det);
    const auto mt = direct_pi_moments(thermal_distribution(1.0), det);
    const auto ms = direct_pi_moments(spats_distribution(1.0), det);
    for (unsigned k = 0; k <= 4; ++k) {
        CHECK(ct.probs[k] == doctest::Approx(thermal[k]).epsilon(1e-12));
        CHECK(cs.probs[k] == doctest::Approx(spats[k]).epsilon(1e-12));
        CHECK(mt[k] == doctest::Approx(thermal_pi[k]).epsilon(1e-12));
        CHECK(ms[k] == doctest::Approx(spats_pi[k]).epsilon(1e-12));
    }
}

TEST_CASE("absorption series matches the logarithmic exponent") {
    for (unsigned n0 : {1u, 2u, 3u}) {
        const ResponseFunction r = NPhotonAbsorption{n0};
        for (unsigned s : {0u, 1u, 3u, 4u}) {
            const auto closed = response_series<long double>(r, 4, static_cast<long double>(s), 30);
            const auto f = series_rescale_argument(response_exponent_series<long double>(r, 30), 0.25L);
            const auto via_log = series_exp_neg(f, static_cast<long double>(s));
            for (std::size_t k = 0; k <= 30; ++k) {
                CHECK(std::abs(double(closed[k] - via_log[k])) < 1e-15);
            }
        }
    }
    // 16 photons on average, where the logarithm's series has long diverged.
    const auto c = click_statistics(coherent_state(4.0), DetectorConfig{4, NPhotonAbsorption{2}});
    const double p = 1 - std::exp(-evaluate_response(NPhotonAbsorption{2}, 4.0));
    for (unsigned k = 0; k <= 4; ++k) CHECK(std::abs(c.probs[k] - binom(4, k, p)) < 1e-10);
}

TEST_CASE("nonlinear response on a Fock state is rejected") {
    CHECK_THROWS_AS(click_statistics(fock_distribution(7), DetectorConfig{4, PowerResponse{3}}), Error);
    try {
        (void)click_statistics(fock_distribution(7), DetectorConfig{1, PowerResponse{3}});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DivergentPhotonSum);
        CHECK(is_numerical(e.code()));
    }
}
