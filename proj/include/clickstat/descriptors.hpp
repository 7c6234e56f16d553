#pragma once

// JSON descriptors for states, detectors and witness reports.
//
// States:    {"kind": "coherent", "alpha": 2} or {"kind": "coherent", "mean_photons": 4}
//            {"kind": "thermal" | "spats", "nbar": 1.0}
//            {"kind": "fock", "n": 1}
//            {"kind": "odd_coherent", "alpha": 1.0 | [re, im]}
//            {"kind": "tmsv", "xi": 0.7 | [re, im]} or {"kind": "tmsv", "xi_abs2": 0.5}
//            {"kind": "product", "modes": [state, state]}
//            {"kind": "mixture", "components": [{"weight": w, "state": state}, ...]}
//            with an optional "tol" for the truncation of infinite distributions.
// Detectors: {"N": 8, "response": {"kind": "linear", "eta": 0.9}}, response kinds
//            linear(eta), affine(eta, nu), power(n0), poly(coefficients), nabs(n0).

#include <json.hpp>

#include <string>
#include <variant>

#include "clickstat/detector.hpp"
#include "clickstat/sampler.hpp"
#include "clickstat/states.hpp"
#include "clickstat/witness.hpp"

namespace clickstat {

using StateDescriptor = std::variant<PhotonNumberDistribution, CoherentSuperposition, JointPhotonDistribution>;

inline bool is_joint(const StateDescriptor& state) {
    return std::holds_alternative<JointPhotonDistribution>(state);
}

// Throws Error(ParseError) for malformed input and the state/detector error
// codes for out-of-range parameters.
StateDescriptor parse_state(const nlohmann::json& j);
StateDescriptor parse_state(const std::string& text);
DetectorConfig parse_detector(const nlohmann::json& j);
DetectorConfig parse_detector(const std::string& text);

nlohmann::json to_json(const WitnessReport& report);
nlohmann::json to_json(const ClickStatistics& stats);
nlohmann::json to_json(const JointClickStatistics& stats);

// Dispatch on the descriptor variant.
ClickStatistics single_mode_statistics(const StateDescriptor& state, const DetectorConfig& det,
                                       const Precision& precision = {});

} // namespace clickstat
