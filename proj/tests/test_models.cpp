#include <doctest.h>

#include <cmath>

#include "pollerr/math.hpp"
#include "pollerr/models.hpp"

using namespace pollerr;

namespace {

// One RW contest, two polls on distinct days plus one election-day poll.
PollDataset rw_fixture() {
  PollDataset d;
  d.contests = {{"NV-2022", "NV", 2022, 0.48}};
  d.polls = {{"NV-2022", 0, 0.50, 1000, ""},
             {"NV-2022", 3, 0.47, 800, ""},
             {"NV-2022", 5, 0.49, 1200, ""}};
  return d;
}

ParamState single_contest_state(ContestParams cp, int theta_len) {
  ParamState st;
  cp.theta.resize(static_cast<std::size_t>(theta_len), 0.48);
  st.contests = {std::move(cp)};
  return st;
}

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("family names round-trip and accept aliases") {
    for (auto f : {ModelFamily::Static, ModelFamily::Linear,
                   ModelFamily::RandomWalk})
      CHECK(family_from_name(family_name(f)) == f);
    CHECK(family_from_name("M1") == ModelFamily::Static);
    CHECK(family_from_name("M2") == ModelFamily::Linear);
    CHECK(family_from_name("M3") == ModelFamily::RandomWalk);
    CHECK(family_from_name("random_walk") == ModelFamily::RandomWalk);
    CHECK_THROWS_AS(family_from_name("m4"), ConfigError);
  }

  TEST_CASE("ModelData groups polls per contest and per day") {
    const auto md = ModelData::build(rw_fixture());
    REQUIRE(md.contests.size() == 1);
    const auto& cd = md.contests[0];
    CHECK(md.n_polls == 3);
    CHECK(cd.theta_len == 5);  // max poll day
    REQUIRE(cd.polls_by_day.size() == 6);
    CHECK(cd.polls_by_day[0].size() == 1);
    CHECK(cd.polls_by_day[3].size() == 1);
    CHECK(cd.polls_by_day[4].empty());
    CHECK(cd.polls[cd.polls_by_day[5][0]].n == 1200);
    CHECK(md.contest_index("NV-2022") == 0);
    CHECK(md.contest_index("XX-1900") == -1);
  }

  TEST_CASE("ModelData rejects invalid datasets") {
    auto d = rw_fixture();
    d.polls[0].y = 1.5;
    CHECK_THROWS_AS(ModelData::build(d), ConfigError);
  }

  TEST_CASE("poll_mean decomposes per family") {
    ContestParams cp;
    cp.alpha = 0.04;
    cp.beta = 0.002;
    cp.theta = {0.47, 0.46};
    const double v = 0.48;
    Poll day0{"c", 0, 0.5, 100, ""};
    Poll day2{"c", 2, 0.5, 100, ""};

    SUBCASE("static: result plus error") {
      ModelSpec spec;
      spec.family = ModelFamily::Static;
      CHECK(poll_mean(spec, cp, day0, v) == doctest::Approx(0.52));
      CHECK(poll_mean(spec, cp, day2, v) == doctest::Approx(0.52));
    }
    SUBCASE("linear: logit-scale error plus drift times day") {
      ModelSpec spec;
      spec.family = ModelFamily::Linear;
      CHECK(poll_mean(spec, cp, day0, v) ==
            doctest::Approx(inv_logit(logit(v) + 0.04)));
      CHECK(poll_mean(spec, cp, day2, v) ==
            doctest::Approx(inv_logit(logit(v) + 0.04 + 0.002 * 2)));
    }
    SUBCASE("random walk: latent level plus error, anchored at v on day 0") {
      ModelSpec spec;
      spec.family = ModelFamily::RandomWalk;
      CHECK(poll_mean(spec, cp, day0, v) == doctest::Approx(v + 0.04));
      CHECK(poll_mean(spec, cp, day2, v) == doctest::Approx(0.46 + 0.04));
    }
  }

  TEST_CASE("poll_mean clamps to [0,1] and counts activations") {
    ModelSpec spec;
    spec.family = ModelFamily::Static;
    ContestParams cp;
    cp.alpha = 0.9;
    Poll p{"c", 0, 0.5, 100, ""};
    long hits = 0;
    CHECK(poll_mean(spec, cp, p, 0.48, &hits) == doctest::Approx(1.0));
    CHECK(hits == 1);
    cp.alpha = -0.9;
    CHECK(poll_mean(spec, cp, p, 0.48, &hits) == doctest::Approx(0.0));
    CHECK(hits == 2);
    cp.alpha = 0.01;
    CHECK(poll_mean(spec, cp, p, 0.48, &hits) == doctest::Approx(0.49));
    CHECK(hits == 2);  // interior values leave the counter alone
  }

  TEST_CASE("linear family never clamps") {
    ModelSpec spec;
    spec.family = ModelFamily::Linear;
    ContestParams cp;
    cp.alpha = 25.0;  // extreme logit shift
    Poll p{"c", 0, 0.5, 100, ""};
    long hits = 0;
    const double m = poll_mean(spec, cp, p, 0.48, &hits);
    CHECK(m > 0.99);
    CHECK(m <= 1.0);
    CHECK(hits == 0);
  }

  TEST_CASE("poll_variance adds excess variance to the binomial term") {
    CHECK(poll_variance(0.5, 1000, 0.0) == doctest::Approx(0.25 / 1000));
    CHECK(poll_variance(0.5, 1000, 0.02) ==
          doctest::Approx(0.25 / 1000 + 4e-4));
    CHECK(poll_variance(1.0, 1000, 0.0) == doctest::Approx(0.0));
  }

  TEST_CASE("log_likelihood matches a hand-computed sum") {
    const auto md = ModelData::build(rw_fixture());
    ModelSpec spec;
    spec.family = ModelFamily::RandomWalk;
    ContestParams cp;
    cp.alpha = 0.01;
    cp.tau = 0.02;
    auto st = single_contest_state(cp, 5);
    st.contests[0].theta = {0.48, 0.475, 0.47, 0.47, 0.465};

    double expect = 0.0;
    const auto& cd = md.contests[0];
    for (const auto& poll : cd.polls) {
      const double theta_t = poll.t == 0
                                 ? cd.v
                                 : st.contests[0].theta[poll.t - 1];
      const double p = clamp01(theta_t + 0.01);
      expect += normal_lpdf_var(poll.y, p, poll_variance(p, poll.n, 0.02));
    }
    CHECK(log_likelihood(spec, st, md) == doctest::Approx(expect));
  }

  TEST_CASE("plug-in switch moves the binomial term to the observed share") {
    const auto md = ModelData::build(rw_fixture());
    ModelSpec exact;
    exact.family = ModelFamily::Static;
    ModelSpec plug = exact;
    plug.plug_in_likelihood = true;

    ContestParams cp;
    cp.alpha = 0.03;
    cp.tau = 0.01;
    const auto st = single_contest_state(cp, 0);

    const double ll_exact = log_likelihood(exact, st, md);
    const double ll_plug = log_likelihood(plug, st, md);
    CHECK(ll_exact != doctest::Approx(ll_plug));

    double expect = 0.0;
    for (const auto& poll : md.contests[0].polls) {
      const double p = clamp01(md.contests[0].v + 0.03);
      expect +=
          normal_lpdf_var(poll.y, p, poll_variance(poll.y, poll.n, 0.01));
    }
    CHECK(ll_plug == doctest::Approx(expect));
  }

  TEST_CASE("zero total variance throws, or yields -inf on the safe path") {
    PollDataset d;
    d.contests = {{"X-2020", "X", 2020, 0.5}};
    d.polls = {{"X-2020", 0, 1.0, 100, ""}};  // y(1-y)/n = 0
    const auto md = ModelData::build(d);
    ModelSpec spec;
    spec.family = ModelFamily::Static;
    spec.plug_in_likelihood = true;
    ContestParams cp;
    cp.tau = 0.0;
    const auto st = single_contest_state(cp, 0);
    CHECK_THROWS_AS(log_likelihood(spec, st, md), DegenerateLikelihoodError);
    CHECK(log_likelihood_safe(spec, st, md) == neg_inf);
  }

  TEST_CASE("log_prior matches a hand-computed random-walk decomposition") {
    const auto md = ModelData::build(rw_fixture());
    ModelSpec spec;
    spec.family = ModelFamily::RandomWalk;
    const auto& hp = spec.hyperpriors;

    ParamState st;
    ContestParams cp;
    cp.alpha = -0.01;
    cp.tau = 0.015;
    cp.gamma = 0.004;
    cp.theta = {0.479, 0.481, 0.48, 0.478, 0.477};
    st.contests = {cp};
    st.mu_alpha = -0.005;
    st.sigma_alpha = 0.05;
    st.sigma_tau = 0.02;
    st.sigma_gamma = 0.006;

    double expect = normal_lpdf(cp.alpha, st.mu_alpha, st.sigma_alpha) +
                    half_normal_lpdf(cp.tau, st.sigma_tau) +
                    half_normal_lpdf(cp.gamma, st.sigma_gamma);
    double prev = 0.48;  // anchor theta_0 = v
    for (double th : cp.theta) {
      expect += normal_lpdf(th, prev, cp.gamma);
      prev = th;
    }
    expect += normal_lpdf(st.mu_alpha, 0.0, hp.mu_alpha_sd) +
              half_normal_lpdf(st.sigma_alpha, hp.sigma_alpha_scale) +
              half_normal_lpdf(st.sigma_tau, hp.sigma_tau_scale) +
              half_normal_lpdf(st.sigma_gamma, hp.sigma_gamma_scale);
    CHECK(log_prior(spec, st, md) == doctest::Approx(expect));
  }

  TEST_CASE("fixed parameters contribute nothing to the prior") {
    const auto md = ModelData::build(rw_fixture());
    ModelSpec spec;
    spec.family = ModelFamily::RandomWalk;
    ParamState st;
    ContestParams cp;
    cp.tau = 0.02;
    cp.gamma = 0.005;
    cp.theta = {0.48, 0.48, 0.48, 0.48, 0.48};
    st.contests = {cp};

    const double base = log_prior(spec, st, md);
    ModelSpec pinned = spec;
    pinned.fixed.tau = 0.02;
    pinned.fixed.sigma_tau = st.sigma_tau;
    const double reduced = log_prior(pinned, st, md);
    CHECK(base == doctest::Approx(
                      reduced + half_normal_lpdf(cp.tau, st.sigma_tau) +
                      half_normal_lpdf(st.sigma_tau,
                                       spec.hyperpriors.sigma_tau_scale)));
  }

  TEST_CASE("negative variance-like parameters give an impossible prior") {
    const auto md = ModelData::build(rw_fixture());
    ModelSpec spec;
    spec.family = ModelFamily::RandomWalk;
    ParamState st;
    ContestParams cp;
    cp.theta = {0.48, 0.48, 0.48, 0.48, 0.48};
    st.contests = {cp};
    st.contests[0].tau = -0.01;
    CHECK(log_prior(spec, st, md) == neg_inf);
    st.contests[0].tau = 0.02;
    st.sigma_alpha = -0.1;
    CHECK(log_prior(spec, st, md) == neg_inf);
  }

  TEST_CASE("election_day_error is 100*alpha except for the linear family") {
    ModelSpec st_spec;
    st_spec.family = ModelFamily::Static;
    CHECK(election_day_error(st_spec, -0.021, 0.48) == doctest::Approx(-2.1));

    ModelSpec rw_spec;
    rw_spec.family = ModelFamily::RandomWalk;
    CHECK(election_day_error(rw_spec, 0.03, 0.70) == doctest::Approx(3.0));

    ModelSpec lin;
    lin.family = ModelFamily::Linear;
    CHECK(election_day_error(lin, 0.0, 0.37) == doctest::Approx(0.0));
    const double v = 0.48, a = 0.1;
    CHECK(election_day_error(lin, a, v) ==
          doctest::Approx(100.0 * (inv_logit(logit(v) + a) - v)));
    // Same logit shift moves the share less away from v = 0.5.
    CHECK(std::abs(election_day_error(lin, a, 0.9)) <
          std::abs(election_day_error(lin, a, 0.5)));
  }

  TEST_CASE("excess_moe doubles tau in percentage points") {
    CHECK(excess_moe(0.025) == doctest::Approx(5.0));
    CHECK(excess_moe(0.0) == doctest::Approx(0.0));
  }
}
