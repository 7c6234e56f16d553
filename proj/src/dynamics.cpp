#include "clickstat/dynamics.hpp"

#include <cmath>

#include "clickstat/error.hpp"

namespace clickstat {

void validate(const DecayModel& model) {
    if (!(model.gamma > 0.0) || !std::isfinite(model.gamma)) {
        throw Error(ErrorCode::InvalidArgument, "decay rate must be positive and finite");
    }
    if (!(model.prefactor > 0.0) || !std::isfinite(model.prefactor)) {
        throw Error(ErrorCode::InvalidArgument, "coupling prefactor must be positive and finite");
    }
}

double b_function(const DecayModel& model, double t, double dt) {
    validate(model);
    if (!(t >= 0.0) || !(dt >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "measurement time and window must be non-negative");
    }
    const double survival = std::exp(-2.0 * model.gamma * t);
    if (std::isinf(dt)) return survival;
    return survival * -std::expm1(-2.0 * model.gamma * dt);
}

double decay_minor(const DecayModel& model, double t, double dt) {
    if (model.diodes < 2) {
        throw Error(ErrorCode::DegenerateBank, "the second-order minor needs at least two diodes");
    }
    const double n = model.diodes;
    return -model.prefactor / (2.0 * model.gamma * n * n * (n - 1.0)) * b_function(model, t, dt);
}

} // namespace clickstat
