#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dhash/fluid.hpp"
#include "dhash/queuesim.hpp"

using namespace dhash;

namespace {

QueueSimConfig make(std::uint32_t n, double lambda, std::uint32_t d, Scheme scheme, double horizon, double burn_in,
                    QueueEngine engine = QueueEngine::race) {
  QueueSimConfig c;
  c.n = n;
  c.lambda = lambda;
  c.d = d;
  c.scheme = scheme;
  c.horizon = horizon;
  c.burn_in = burn_in;
  c.engine = engine;
  return c;
}

}  // namespace

TEST_CASE("engine tags") {
  CHECK(parse_engine("event") == QueueEngine::event);
  CHECK(parse_engine(engine_tag(QueueEngine::race)) == QueueEngine::race);
  CHECK_FALSE(parse_engine("batch").has_value());
}

TEST_CASE("light traffic: sojourn is one service time") {
  for (auto engine : {QueueEngine::race, QueueEngine::event}) {
    RandomStream r(1);
    const auto res = simulate_queues(make(1024, 0.01, 2, Scheme::random_distinct, 3000, 100, engine), r);
    CAPTURE(engine_tag(engine));
    CHECK(res.jobs_counted > 20000);
    CHECK(std::abs(res.mean_sojourn - 1.0) <= 0.02);
  }
}

TEST_CASE("job conservation and stability") {
  for (auto engine : {QueueEngine::race, QueueEngine::event}) {
    for (auto scheme : {Scheme::random_distinct, Scheme::double_hash, Scheme::random_wr}) {
      RandomStream r(7);
      const auto res = simulate_queues(make(256, 0.9, 3, scheme, 500, 100, engine), r);
      CHECK(res.arrivals == res.departures + res.in_system);
      CHECK(std::accumulate(res.queue_lengths.begin(), res.queue_lengths.end(), std::uint64_t{0}) == res.in_system);
      REQUIRE(res.window_jobs.size() == 10);
      // Equilibrium holds about 2 jobs per queue; nothing drifts off.
      for (std::size_t w = 1; w < res.window_jobs.size(); ++w) CHECK(res.window_jobs[w] < 4.0 * 256);
      for (std::size_t i = 1; i < kTailLevels; ++i) CHECK(res.tail[i] <= res.tail[i - 1]);
    }
  }
}

TEST_CASE("same seed, same run") {
  const auto cfg = make(128, 0.8, 2, Scheme::double_hash, 200, 20);
  RandomStream a(3), b(3);
  const auto x = simulate_queues(cfg, a);
  const auto y = simulate_queues(cfg, b);
  CHECK(x.mean_sojourn == y.mean_sojourn);
  CHECK(x.queue_lengths == y.queue_lengths);
}

TEST_CASE("event and race engines agree in distribution") {
  // Means over independent seeds; standard error of each is about 0.004.
  const auto base = make(64, 0.7, 2, Scheme::random_distinct, 2000, 200);
  double sum[2] = {0, 0};
  const int seeds = 8;
  for (int e = 0; e < 2; ++e) {
    auto cfg = base;
    cfg.engine = e == 0 ? QueueEngine::race : QueueEngine::event;
    for (int s = 0; s < seeds; ++s) {
      auto r = RandomStream::for_trial(100 + e, s);
      sum[e] += simulate_queues(cfg, r).mean_sojourn;
    }
  }
  CHECK(std::abs(sum[0] - sum[1]) / seeds < 0.03);
}

TEST_CASE("time-averaged tails sit near the fluid fixed point") {
  RandomStream r(11);
  const auto res = simulate_queues(make(1 << 12, 0.9, 3, Scheme::double_hash, 1500, 300), r);
  const auto s = fluid::queue_fixed_point<double>(3, 0.9, 3);
  for (int i = 1; i <= 3; ++i) {
    CAPTURE(i);
    CHECK(std::abs(res.tail[i - 1] - s(i)) <= 0.02 * s(i));
  }
  CHECK(std::abs(res.mean_sojourn - fluid::equilibrium_sojourn(3, 0.9)) < 0.03);
}

TEST_CASE("invalid configurations") {
  RandomStream r(1);
  CHECK_THROWS_AS(simulate_queues(make(0, 0.5, 2, Scheme::random_distinct, 10, 1), r), std::domain_error);
  CHECK_THROWS_AS(simulate_queues(make(8, 1.0, 2, Scheme::random_distinct, 10, 1), r), std::domain_error);
  CHECK_THROWS_AS(simulate_queues(make(8, 0.5, 2, Scheme::random_distinct, 0, 0), r), std::domain_error);
  CHECK_THROWS_AS(simulate_queues(make(8, 0.5, 2, Scheme::random_distinct, 10, 10), r), std::domain_error);
  CHECK_THROWS_AS(simulate_queues(make(8, 0.5, 9, Scheme::random_distinct, 10, 1), r), std::domain_error);
}
