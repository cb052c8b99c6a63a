#include "pollerr/domain.hpp"

#include <set>
#include <unordered_set>

namespace pollerr {

void validate_dataset(const PollDataset& data) {
  std::unordered_set<std::string> ids;
  std::set<std::pair<std::string, int>> state_years;
  for (const auto& c : data.contests) {
    if (c.contest_id.empty())
      throw ConfigError("contest with empty contest_id");
    if (!(c.v > 0.0 && c.v < 1.0))
      throw ConfigError("contest " + c.contest_id +
                        ": v must lie strictly in (0,1)");
    if (!ids.insert(c.contest_id).second)
      throw ConfigError("duplicate contest_id " + c.contest_id);
    if (!state_years.insert({c.state, c.year}).second)
      throw ConfigError("duplicate (state, year) pair " + c.state + "-" +
                        std::to_string(c.year));
  }
  for (const auto& p : data.polls) {
    if (ids.find(p.contest_id) == ids.end())
      throw ConfigError("poll references unknown contest_id " + p.contest_id);
    if (!(p.y >= 0.0 && p.y <= 1.0))
      throw ConfigError("poll in " + p.contest_id + ": y outside [0,1]");
    if (p.n < 1)
      throw ConfigError("poll in " + p.contest_id + ": n must be >= 1");
    if (p.t < 0)
      throw ConfigError("poll in " + p.contest_id + ": t must be >= 0");
  }
}

PollDataset filter_window(const PollDataset& data, const WindowConfig& window) {
  PollDataset out;
  out.contests = data.contests;
  out.polls.reserve(data.polls.size());
  for (const auto& p : data.polls)
    if (p.t <= window.T) out.polls.push_back(p);
  return out;
}

double two_party_share(double rep, double dem) {
  if (rep < 0.0 || dem < 0.0)
    throw InvalidPollError("two_party_share: negative input");
  const double total = rep + dem;
  if (total <= 0.0)
    throw InvalidPollError("two_party_share: no two-party support");
  return rep / total;
}

}  // namespace pollerr
