#include "dhash/queuesim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include "dhash/allocator.hpp"

namespace dhash {

std::string_view engine_tag(QueueEngine e) noexcept { return e == QueueEngine::event ? "event" : "race"; }

std::optional<QueueEngine> parse_engine(std::string_view tag) noexcept {
  if (tag == "event") return QueueEngine::event;
  if (tag == "race") return QueueEngine::race;
  return std::nullopt;
}

void validate(const QueueSimConfig& cfg) {
  if (cfg.n < 1) throw std::domain_error("queues: n must be at least 1");
  if (!(cfg.lambda > 0.0 && cfg.lambda < 1.0)) throw std::domain_error("queues: lambda must lie in (0, 1)");
  if (!(cfg.horizon > 0.0)) throw std::domain_error("queues: horizon must be positive");
  if (!(cfg.burn_in >= 0.0 && cfg.burn_in < cfg.horizon))
    throw std::domain_error("queues: burn_in must lie in [0, horizon)");
  if (cfg.windows < 1) throw std::domain_error("queues: windows must be at least 1");
  validate(ChooserConfig{cfg.scheme, cfg.n, cfg.d, NClass::general});
}

namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

// Queue lengths, per-queue FIFO job lists over a pooled free list, the busy
// set, and the time integrals behind the reported averages.
class QueueSystem {
 public:
  explicit QueueSystem(const QueueSimConfig& cfg)
      : cfg_(cfg),
        lengths_(cfg.n, 0),
        head_(cfg.n, kNone),
        tail_(cfg.n, kNone),
        busy_pos_(cfg.n, kNone),
        window_area_(cfg.windows, 0.0),
        window_width_(cfg.horizon / cfg.windows) {
    busy_.reserve(cfg.n);
  }

  double clock() const noexcept { return clock_; }
  std::uint64_t busy() const noexcept { return busy_.size(); }
  std::uint32_t busy_queue(std::uint64_t i) const noexcept { return busy_[i]; }
  const std::vector<std::uint32_t>& lengths() const noexcept { return lengths_; }

  // Integrates the piecewise-constant state over [clock, t] and moves the
  // clock to t.
  void advance_to(double t) {
    const double lo = std::max(clock_, cfg_.burn_in);
    if (t > lo) {
      const double dt = t - lo;
      for (std::size_t i = 0; i < kTailLevels; ++i) tail_area_[i] += dt * static_cast<double>(at_least_[i]);
    }
    double from = clock_;
    while (t > window_end()) {
      window_area_[window_] += (window_end() - from) * static_cast<double>(jobs_);
      from = window_end();
      if (window_ + 1 >= window_area_.size()) break;
      ++window_;
    }
    window_area_[window_] += (std::min(t, window_end()) - from) * static_cast<double>(jobs_);
    clock_ = t;
  }

  // Returns true when q went from idle to busy.
  bool arrive(std::uint32_t q) {
    const std::uint32_t job = allocate(clock_);
    if (tail_[q] == kNone) {
      head_[q] = job;
    } else {
      next_[tail_[q]] = job;
    }
    tail_[q] = job;
    const std::uint32_t len = ++lengths_[q];
    if (len <= kTailLevels) ++at_least_[len - 1];
    ++jobs_;
    ++arrivals_;
    if (len == 1) {
      busy_pos_[q] = static_cast<std::uint32_t>(busy_.size());
      busy_.push_back(q);
      return true;
    }
    return false;
  }

  // Completes the head job of q. Returns true when q is still busy.
  bool depart(std::uint32_t q) {
    const std::uint32_t job = head_[q];
    const double arrived = arrival_[job];
    if (arrived >= cfg_.burn_in) {
      sojourn_sum_ += clock_ - arrived;
      ++counted_;
    }
    head_[q] = next_[job];
    if (head_[q] == kNone) tail_[q] = kNone;
    release(job);
    const std::uint32_t len = lengths_[q]--;
    if (len <= kTailLevels) --at_least_[len - 1];
    --jobs_;
    ++departures_;
    if (len == 1) {
      const std::uint32_t pos = busy_pos_[q];
      busy_[pos] = busy_.back();
      busy_pos_[busy_[pos]] = pos;
      busy_.pop_back();
      busy_pos_[q] = kNone;
      return false;
    }
    return true;
  }

  QueueSimResult finish() {
    advance_to(cfg_.horizon);
    QueueSimResult r;
    r.jobs_counted = counted_;
    r.mean_sojourn = counted_ == 0 ? 0.0 : sojourn_sum_ / static_cast<double>(counted_);
    const double span = (cfg_.horizon - cfg_.burn_in) * static_cast<double>(cfg_.n);
    for (std::size_t i = 0; i < kTailLevels; ++i) r.tail[i] = tail_area_[i] / span;
    r.arrivals = arrivals_;
    r.departures = departures_;
    r.in_system = jobs_;
    r.window_jobs.resize(window_area_.size());
    for (std::size_t w = 0; w < window_area_.size(); ++w) r.window_jobs[w] = window_area_[w] / window_width_;
    r.queue_lengths = lengths_;
    return r;
  }

 private:
  double window_end() const noexcept {
    return window_ + 1 == window_area_.size() ? cfg_.horizon : window_width_ * static_cast<double>(window_ + 1);
  }

  std::uint32_t allocate(double arrival) {
    std::uint32_t job;
    if (free_ != kNone) {
      job = free_;
      free_ = next_[job];
      arrival_[job] = arrival;
    } else {
      job = static_cast<std::uint32_t>(arrival_.size());
      arrival_.push_back(arrival);
      next_.push_back(kNone);
    }
    next_[job] = kNone;
    return job;
  }

  void release(std::uint32_t job) {
    next_[job] = free_;
    free_ = job;
  }

  const QueueSimConfig& cfg_;
  std::vector<std::uint32_t> lengths_;
  std::vector<std::uint32_t> head_;
  std::vector<std::uint32_t> tail_;
  std::vector<double> arrival_;
  std::vector<std::uint32_t> next_;
  std::uint32_t free_ = kNone;
  std::vector<std::uint32_t> busy_;
  std::vector<std::uint32_t> busy_pos_;

  double clock_ = 0.0;
  std::uint64_t jobs_ = 0;
  std::uint64_t arrivals_ = 0;
  std::uint64_t departures_ = 0;
  std::array<std::uint64_t, kTailLevels> at_least_{};
  std::array<double, kTailLevels> tail_area_{};
  std::vector<double> window_area_;
  double window_width_;
  std::size_t window_ = 0;
  double sojourn_sum_ = 0.0;
  std::uint64_t counted_ = 0;
};

std::uint32_t pick_queue(const QueueSystem& sys, const ChooserConfig& chooser, RandomStream& stream) {
  const ChoiceSet c = draw_choices(stream, chooser);
  return least_loaded(sys.lengths(), c, TieBreak::random, stream);
}

QueueSimResult run_race(const QueueSimConfig& cfg, const ChooserConfig& chooser, RandomStream& stream) {
  QueueSystem sys(cfg);
  const double arrival_rate = cfg.lambda * cfg.n;
  for (;;) {
    const double busy = static_cast<double>(sys.busy());
    const double total = arrival_rate + busy;
    const double t = sys.clock() + sample_exponential(stream, total);
    if (t > cfg.horizon) break;
    sys.advance_to(t);
    if (uniform_open_closed(stream) * total <= arrival_rate) {
      sys.arrive(pick_queue(sys, chooser, stream));
    } else {
      sys.depart(sys.busy_queue(uniform_below(stream, sys.busy())));
    }
  }
  return sys.finish();
}

struct Event {
  double time;
  std::uint64_t seq;
  std::uint32_t queue;  // kNone marks the arrival stream

  bool operator>(const Event& o) const noexcept { return time != o.time ? time > o.time : seq > o.seq; }
};

QueueSimResult run_event(const QueueSimConfig& cfg, const ChooserConfig& chooser, RandomStream& stream) {
  QueueSystem sys(cfg);
  const double arrival_rate = cfg.lambda * cfg.n;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> schedule;
  std::uint64_t seq = 0;
  schedule.push({sample_exponential(stream, arrival_rate), seq++, kNone});
  while (!schedule.empty()) {
    const Event ev = schedule.top();
    if (ev.time > cfg.horizon) break;
    schedule.pop();
    sys.advance_to(ev.time);
    if (ev.queue == kNone) {
      const std::uint32_t q = pick_queue(sys, chooser, stream);
      if (sys.arrive(q)) schedule.push({ev.time + sample_exponential(stream, 1.0), seq++, q});
      schedule.push({ev.time + sample_exponential(stream, arrival_rate), seq++, kNone});
    } else if (sys.depart(ev.queue)) {
      schedule.push({ev.time + sample_exponential(stream, 1.0), seq++, ev.queue});
    }
  }
  return sys.finish();
}

}  // namespace

QueueSimResult simulate_queues(const QueueSimConfig& cfg, RandomStream& stream) {
  validate(cfg);
  const ChooserConfig chooser = ChooserConfig::make(cfg.scheme, cfg.n, cfg.d);
  return cfg.engine == QueueEngine::event ? run_event(cfg, chooser, stream) : run_race(cfg, chooser, stream);
}

}  // namespace dhash
