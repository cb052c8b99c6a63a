#pragma once

#include <string>
#include <vector>

#include "pollerr/errors.hpp"

namespace pollerr {

// One survey observation. y is the two-party Republican share among
// respondents naming either major party; n is the effective two-party
// sample size; t counts days before the election (0 = election day).
struct Poll {
  std::string contest_id;
  int t = 0;
  double y = 0.5;
  long long n = 1;
  std::string pollster;
};

// A state-year race and its realized two-party Republican share v.
struct ElectionContest {
  std::string contest_id;
  std::string state;
  int year = 0;
  double v = 0.5;
};

struct PollDataset {
  std::vector<ElectionContest> contests;
  std::vector<Poll> polls;
};

// Inclusion window: only polls with t <= T enter an analysis.
struct WindowConfig {
  int T = 100;
};

// Throws ConfigError on any invariant violation (bad ranges, dangling
// contest_id, duplicate (state, year) pairs).
void validate_dataset(const PollDataset& data);

// Keeps exactly the polls with t <= window.T; every contest is retained
// even when it ends up with zero polls.
PollDataset filter_window(const PollDataset& data, const WindowConfig& window);

// rep / (rep + dem); inputs are nonnegative percentages (or vote counts,
// the share is scale invariant). Throws InvalidPollError when rep+dem == 0.
double two_party_share(double rep, double dem);

}  // namespace pollerr
