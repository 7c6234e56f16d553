#include "clickstat/descriptors.hpp"

#include <cmath>
#include <complex>

namespace clickstat {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

const json& field(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) fail(std::string("missing field '") + key + "'");
    return *it;
}

double number(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_number()) fail(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

unsigned count(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_number_integer() && !v.is_number_unsigned()) fail(std::string("field '") + key + "' must be an integer");
    const auto value = v.get<long long>();
    if (value < 0) fail(std::string("field '") + key + "' must be non-negative");
    return static_cast<unsigned>(value);
}

std::complex<double> complex_number(const json& j, const char* key) {
    const json& v = field(j, key);
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    fail(std::string("field '") + key + "' must be a number or [re, im]");
}

json parse_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fail(std::string("invalid JSON: ") + e.what());
    }
}

double tolerance(const json& j) {
    if (!j.contains("tol")) return kDefaultTailTolerance;
    const double tol = number(j, "tol");
    if (!(tol > 0.0 && tol < 1.0)) throw Error(ErrorCode::InvalidArgument, "tol must lie in (0, 1)");
    return tol;
}

PhotonNumberDistribution as_distribution(const StateDescriptor& state, const char* context) {
    if (const auto* d = std::get_if<PhotonNumberDistribution>(&state)) return *d;
    if (const auto* s = std::get_if<CoherentSuperposition>(&state)) {
        if (s->terms.size() == 1) return coherent_distribution(std::norm(s->terms[0].amplitude));
    }
    fail(std::string(context) + " needs phase-insensitive single-mode states");
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Drops the sign of exact zeros so they print as 0.0.
std::vector<double> unsigned_zeros(std::vector<double> values) {
    for (double& v : values) v += 0.0;
    return values;
}

} // namespace

StateDescriptor parse_state(const json& j) {
    if (!j.is_object()) fail("state descriptor must be a JSON object");
    const json& kind_field = field(j, "kind");
    if (!kind_field.is_string()) fail("state 'kind' must be a string");
    const std::string kind = kind_field.get<std::string>();
    const double tol = tolerance(j);

    if (kind == "coherent") {
        if (j.contains("mean_photons")) return coherent_distribution(number(j, "mean_photons"), tol);
        return coherent_state(complex_number(j, "alpha"));
    }
    if (kind == "thermal") return thermal_distribution(number(j, "nbar"), tol);
    if (kind == "spats") return spats_distribution(number(j, "nbar"), tol);
    if (kind == "fock") return fock_distribution(count(j, "n"));
    if (kind == "odd_coherent") return odd_coherent(complex_number(j, "alpha"));
    if (kind == "tmsv") {
        if (j.contains("xi_abs2")) {
            const double x = number(j, "xi_abs2");
            if (!(x >= 0.0)) throw Error(ErrorCode::SqueezingOutOfRange, "xi_abs2 must be non-negative");
            return tmsv_joint(std::sqrt(x), tol);
        }
        return tmsv_joint(complex_number(j, "xi"), tol);
    }
    if (kind == "product") {
        const json& modes = field(j, "modes");
        if (!modes.is_array() || modes.size() != 2) fail("'modes' must list exactly two states");
        return product_joint(as_distribution(parse_state(modes[0]), "product"),
                             as_distribution(parse_state(modes[1]), "product"));
    }
    if (kind == "mixture") {
        const json& parts = field(j, "components");
        if (!parts.is_array() || parts.empty()) fail("'components' must be a non-empty array");
        std::vector<std::pair<double, JointPhotonDistribution>> joint;
        for (const auto& part : parts) {
            if (!part.is_object()) fail("mixture component must be an object");
            const StateDescriptor s = parse_state(field(part, "state"));
            const auto* js = std::get_if<JointPhotonDistribution>(&s);
            if (!js) fail("mixture components must be two-mode states");
            joint.emplace_back(number(part, "weight"), *js);
        }
        return mixture_joint(joint);
    }
    fail("unknown state kind '" + kind + "'");
}

StateDescriptor parse_state(const std::string& text) { return parse_state(parse_text(text)); }

DetectorConfig parse_detector(const json& j) {
    if (!j.is_object()) fail("detector descriptor must be a JSON object");
    DetectorConfig det;
    det.diodes = count(j, "N");
    if (det.diodes < 1) throw Error(ErrorCode::InvalidArgument, "a bank needs at least one diode");
    if (j.contains("response")) {
        const json& r = j["response"];
        if (!r.is_object()) fail("'response' must be an object");
        const json& kind_field = field(r, "kind");
        if (!kind_field.is_string()) fail("response 'kind' must be a string");
        const std::string kind = kind_field.get<std::string>();
        if (kind == "linear") {
            det.response = LinearResponse{r.contains("eta") ? number(r, "eta") : 1.0};
        } else if (kind == "affine") {
            det.response = AffineResponse{number(r, "eta"), number(r, "nu")};
        } else if (kind == "power") {
            det.response = PowerResponse{count(r, "n0")};
        } else if (kind == "poly") {
            const json& c = field(r, "coefficients");
            if (!c.is_array() || c.empty()) fail("'coefficients' must be a non-empty array");
            PolynomialResponse poly;
            for (const auto& v : c) {
                if (!v.is_number()) fail("polynomial coefficients must be numbers");
                poly.coefficients.push_back(v.get<double>());
            }
            det.response = poly;
        } else if (kind == "nabs") {
            det.response = NPhotonAbsorption{count(r, "n0")};
        } else {
            fail("unknown response kind '" + kind + "'");
        }
    }
    validate_response(det.response, 1.0);
    return det;
}

DetectorConfig parse_detector(const std::string& text) { return parse_detector(parse_text(text)); }

json to_json(const WitnessReport& report) {
    json out;
    out["minors"] = unsigned_zeros(report.leading_minors);
    out["min_eigenvalue"] = report.min_eigenvalue;
    out["qb"] = optional_number(report.qb);
    out["cross_minor"] = optional_number(report.cross_minor);
    out["verdict"] = std::string(to_string(report.verdict));
    out["threshold"] = report.threshold;
    if (report.uncertainties) {
        const auto& u = *report.uncertainties;
        out["threshold_sigmas"] = report.threshold_sigmas;
        out["stderr"] = {{"minors", unsigned_zeros(u.leading_minors)},
                         {"min_eigenvalue", u.min_eigenvalue},
                         {"qb", optional_number(u.qb)},
                         {"cross_minor", optional_number(u.cross_minor)}};
    }
    return out;
}

json to_json(const ClickStatistics& stats) {
    json out;
    out["N"] = stats.diodes;
    out["probs"] = stats.probs;
    if (!stats.stderrs.empty()) out["stderr"] = stats.stderrs;
    return out;
}

json to_json(const JointClickStatistics& stats) {
    json out;
    out["N1"] = stats.diodes1;
    out["N2"] = stats.diodes2;
    json rows = json::array();
    for (unsigned k1 = 0; k1 <= stats.diodes1; ++k1) {
        json row = json::array();
        for (unsigned k2 = 0; k2 <= stats.diodes2; ++k2) row.push_back(stats.at(k1, k2));
        rows.push_back(row);
    }
    out["probs"] = rows;
    return out;
}

ClickStatistics single_mode_statistics(const StateDescriptor& state, const DetectorConfig& det,
                                       const Precision& precision) {
    if (const auto* d = std::get_if<PhotonNumberDistribution>(&state)) return click_statistics(*d, det, precision);
    if (const auto* s = std::get_if<CoherentSuperposition>(&state)) return click_statistics(*s, det, precision);
    throw Error(ErrorCode::InvalidArgument, "two-mode state needs two detector banks");
}

} // namespace clickstat
