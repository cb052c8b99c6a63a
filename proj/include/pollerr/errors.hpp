#pragma once

#include <stdexcept>
#include <string>

namespace pollerr {

// Poll carries no usable two-party information (e.g. rep + dem == 0).
class InvalidPollError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A poll's total variance collapsed to zero (tau == 0 and p in {0,1}).
class DegenerateLikelihoodError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// SPD factorization failed even after the jitter ladder.
class IllConditionedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Target density non-finite at the sampler's starting point.
class InitializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every scalar proposal rejected across consecutive adaptation windows.
class SamplerStalledError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical breakdown inside a sampling pass (e.g. non-positive
// innovation variance in the latent filter).
class SamplerNumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fatal problem reading or joining input files.
class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid dataset or configuration handed to a library entry point.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pollerr
