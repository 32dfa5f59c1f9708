#pragma once

#include <stdexcept>
#include <string>

namespace semsat {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// geometry
struct DisplacementTooFast : Error {
  using Error::Error;
};
struct AltitudeViolation : Error {
  using Error::Error;
};
struct NonPositiveDistance : Error {
  using Error::Error;
};

// semantic link
struct InvalidChoice : Error {
  using Error::Error;
};
struct ZeroRateHop : Error {
  using Error::Error;
};
struct BadWeights : Error {
  using Error::Error;
};

// environment
struct IllegalAction : Error {
  using Error::Error;
};

// training
struct GroupTooSmall : Error {
  using Error::Error;
};
struct StaleTrajectories : Error {
  using Error::Error;
};
struct FullyMaskedHead : Error {
  using Error::Error;
};

// configuration and io
struct BadConfig : Error {
  using Error::Error;
};
struct IoFailure : Error {
  using Error::Error;
};

}  // namespace semsat
