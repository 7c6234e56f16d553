#pragma once

// A single photon leaking into a bath, observed by one bank of N diodes over
// the window [t, t + dt]. With field amplitude decaying as exp(-gamma t), the
// probability that the photon is still present in the window is
//
//   b(t, dt) = exp(-2 gamma t) (1 - exp(-2 gamma dt)),
//
// and the leading 2x2 minor of the matrix of moments is proportional to -b.
// Times are in the same (arbitrary) unit as 1/gamma; only gamma t and
// gamma dt matter.

namespace clickstat {

struct DecayModel {
    double gamma = 1.0;      // amplitude decay rate
    double prefactor = 1.0;  // dipole coupling times |E(r)|^2
    unsigned diodes = 2;
};

// Checks gamma > 0 and prefactor > 0.
void validate(const DecayModel& model);

// dt may be +infinity (an unbounded window).
double b_function(const DecayModel& model, double t, double dt);

// -prefactor / (2 gamma N^2 (N-1)) * b(t, dt); negative exactly when b > 0.
double decay_minor(const DecayModel& model, double t, double dt);

} // namespace clickstat
