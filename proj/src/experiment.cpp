#include "dhash/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "dhash/allocator.hpp"
#include "dhash/fluid.hpp"
#include "dhash/queuesim.hpp"
#include "dhash/stats.hpp"

#ifndef DHASH_VERSION
#define DHASH_VERSION "dev"
#endif

namespace dhash {

using json = nlohmann::ordered_json;

bool RunOutput::all_checks_pass() const noexcept {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

void parallel_for(std::uint64_t count, unsigned threads, const std::function<void(std::uint64_t)>& fn) {
  threads = std::max(1u, threads);
  if (threads == 1 || count < 2) {
    for (std::uint64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const auto workers = static_cast<unsigned>(std::min<std::uint64_t>(threads, count));
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::uint64_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::domain_error("fit_line: need at least two points");
  Eigen::MatrixXd design(static_cast<Eigen::Index>(x.size()), 2);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    design(static_cast<Eigen::Index>(i), 0) = 1.0;
    design(static_cast<Eigen::Index>(i), 1) = x[i];
    rhs(static_cast<Eigen::Index>(i)) = y[i];
  }
  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(rhs);
  return {coef(0), coef(1)};
}

namespace {

std::string fmt(const char* spec, double v) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), spec, v);
  return buf.data();
}

std::string f5(double v) { return fmt("%.5f", v); }

// ---------------------------------------------------------------------------
// Published reference values, keyed by configuration.

struct LoadReference {
  Scheme scheme;
  std::uint32_t n;
  std::uint64_t m;
  std::uint32_t d;
  std::uint32_t first_load;
  std::vector<double> fractions;
  double desk_tol;
  double paper_tol;
};

const std::vector<LoadReference>& load_references() {
  constexpr std::uint32_t n14 = 1u << 14, n16 = 1u << 16, n18 = 1u << 18;
  static const std::vector<LoadReference> refs{
      {Scheme::random_distinct, n14, n14, 3, 0, {0.17693, 0.64664, 0.17592, 0.00051}, 0.002, 0.0005},
      {Scheme::double_hash, n14, n14, 3, 0, {0.17691, 0.64670, 0.17589, 0.00051}, 0.002, 0.0005},
      {Scheme::random_distinct, n14, n14, 4, 0, {0.14081, 0.71840, 0.14077, 2.25e-5}, 0.002, 0.0005},
      {Scheme::double_hash, n14, n14, 4, 0, {0.14081, 0.71841, 0.14076, 2.29e-5}, 0.002, 0.0005},
      {Scheme::random_distinct, n16, n16, 3, 0, {0.17695, 0.64661, 0.17593, 0.00051}, 0.002, 0.0005},
      {Scheme::double_hash, n16, n16, 3, 0, {0.17693, 0.64664, 0.17592, 0.00051}, 0.002, 0.0005},
      {Scheme::random_distinct, n16, n16, 4, 0, {0.14081, 0.71841, 0.14076, 2.32e-5}, 0.002, 0.0005},
      {Scheme::double_hash, n16, n16, 4, 0, {0.14083, 0.71835, 0.14079, 2.30e-5}, 0.002, 0.0005},
      {Scheme::random_distinct, n18, n18, 3, 0, {0.17696, 0.64658, 0.17595, 0.00051}, 0.002, 0.0005},
      {Scheme::double_hash, n18, n18, 3, 0, {0.17696, 0.64648, 0.17595, 0.00051}, 0.002, 0.0005},
      {Scheme::random_distinct, n18, n18, 4, 0, {0.14083, 0.71837, 0.14078, 2.31e-5}, 0.002, 0.0005},
      {Scheme::double_hash, n18, n18, 4, 0, {0.14082, 0.71838, 0.14078, 2.32e-5}, 0.002, 0.0005},
      // Heavy load, m = 16 n: loads 15, 16, 17.
      {Scheme::random_distinct, n14, n18, 3, 15, {0.16885, 0.62220, 0.19482}, 0.003, 0.003},
      {Scheme::double_hash, n14, n18, 3, 15, {0.16877, 0.62234, 0.19475}, 0.003, 0.003},
      {Scheme::random_distinct, n14, n18, 4, 15, {0.13908, 0.71110, 0.14622}, 0.003, 0.003},
      {Scheme::double_hash, n14, n18, 4, 15, {0.13906, 0.71114, 0.14620}, 0.003, 0.003},
      // d-left, four subtables.
      {Scheme::dleft_random, n14, n14, 4, 0, {0.12420, 0.75160, 0.12420}, 0.002, 0.0005},
      {Scheme::dleft_double, n14, n14, 4, 0, {0.12421, 0.75158, 0.12421}, 0.002, 0.0005},
      {Scheme::dleft_random, n18, n18, 4, 0, {0.12421, 0.75159, 0.12421}, 0.002, 0.0005},
      {Scheme::dleft_double, n18, n18, 4, 0, {0.12421, 0.75158, 0.12421}, 0.002, 0.0005},
  };
  return refs;
}

// Windows for the fraction of trials whose maximum load is 3.
struct MaxLoadWindow {
  std::uint32_t n;
  std::uint32_t d;
  double lo;
  double hi;
};

constexpr std::array<MaxLoadWindow, 2> kMaxLoadWindows{{
    {1u << 13, 3, 0.955, 1.0},
    {1u << 14, 4, 0.25, 0.38},
}};

struct SojournReference {
  double lambda;
  std::uint32_t d;
  double random;
  double double_hash;
};

constexpr std::array<SojournReference, 4> kSojournReferences{{
    {0.9, 3, 2.02805, 2.02813},
    {0.9, 4, 1.77788, 1.77792},
    {0.99, 3, 3.85967, 3.86073},
    {0.99, 4, 3.24347, 3.24410},
}};

// Fluid limit, d = 3, T = 1: tail fractions at levels 1..3.
constexpr std::array<double, 3> kFluidD3T1{0.8231, 0.1765, 0.00051};

Check make_check(std::string name, double value, double lo, double hi) {
  return {std::move(name), value, lo, hi, value >= lo && value <= hi};
}

Check around(std::string name, double value, double expected, double tol) {
  return make_check(std::move(name), value, expected - tol, expected + tol);
}

json checks_json(const std::vector<Check>& checks) {
  json arr = json::array();
  for (const auto& c : checks)
    arr.push_back({{"name", c.name}, {"value", c.value}, {"lo", c.lo}, {"hi", c.hi}, {"pass", c.pass}});
  return arr;
}

std::string checks_text(const std::vector<Check>& checks) {
  if (checks.empty()) return {};
  std::ostringstream out;
  out << "\nreference checks:\n";
  for (const auto& c : checks)
    out << "  [" << (c.pass ? "PASS" : "FAIL") << "] " << c.name << ": " << fmt("%.6g", c.value) << " in ["
        << fmt("%.6g", c.lo) << ", " << fmt("%.6g", c.hi) << "]\n";
  return out.str();
}

json base_meta(const ExperimentConfig& cfg) {
  json config = json::object();
  for (const auto& [k, v] : canonical(cfg)) config[k] = v;
  return {
      {"artifact", "dhash"},
      {"version", DHASH_VERSION},
      {"generator_id", std::string(RandomStream::generator_id)},
      {"master_seed", cfg.master_seed},
      {"seed_derivation", "trial seed = mix(master_seed ^ mix(trial_index + 0x9E3779B97F4A7C15)), mix = splitmix64 finalizer"},
      {"config", config},
  };
}

// ---------------------------------------------------------------------------
// balls / compare

struct SchemeRun {
  Scheme scheme;
  TieBreak tie_break;
  std::vector<TrialSummary> rows;
  std::vector<std::uint64_t> seeds;
  TrialAggregate agg;
};

SchemeRun run_scheme(const ExperimentConfig& cfg, Scheme scheme, unsigned threads) {
  SchemeRun run{scheme, cfg.tie_break_for(scheme), {}, {}, {}};
  const ChooserConfig chooser = ChooserConfig::make(scheme, cfg.n, cfg.d);
  run.rows.resize(cfg.trials);
  run.seeds.resize(cfg.trials);
  parallel_for(cfg.trials, threads, [&](std::uint64_t i) {
    const std::uint64_t seed = derive_seed(cfg.master_seed, i);
    RandomStream stream(seed);
    const LoadState state = run_trial(cfg.n, cfg.m, chooser, run.tie_break, stream);
    run.rows[i] = TrialSummary::of(state, scheme, cfg.d);
    run.seeds[i] = seed;
  });
  run.agg = aggregate(run.rows);
  return run;
}

json per_load_json(const SchemeRun& run) {
  json arr = json::array();
  const auto fractions = run.agg.fractions();
  for (std::uint32_t l = 0; l <= run.agg.max_load(); ++l) {
    const auto& acc = run.agg.at(l);
    arr.push_back({{"scheme", scheme_tag(run.scheme)},
                   {"load", l},
                   {"min", acc.min},
                   {"mean", run.agg.mean_count(l)},
                   {"max", acc.max},
                   {"std", run.agg.std_count(l)},
                   {"fraction", fractions(l)}});
  }
  return arr;
}

json tail_json(const SchemeRun& run) {
  json arr = json::array();
  const auto tail = run.agg.tail();
  for (Eigen::Index i = 0; i < tail.size(); ++i)
    arr.push_back({{"scheme", scheme_tag(run.scheme)}, {"level", i}, {"fraction", tail(i)}});
  return arr;
}

json max_hist_json(const SchemeRun& run) {
  json arr = json::array();
  for (const auto& [value, count] : run.agg.max_load_counts())
    arr.push_back({{"scheme", scheme_tag(run.scheme)},
                   {"max_load", value},
                   {"trials", count},
                   {"fraction", static_cast<double>(count) / static_cast<double>(run.agg.trials())}});
  return arr;
}

std::string trials_csv(const ExperimentConfig& cfg, const std::vector<SchemeRun>& runs) {
  std::uint32_t width = 0;
  for (const auto& r : runs) width = std::max(width, r.agg.max_load());
  std::ostringstream out;
  out << "trial_id,scheme,n,m,d,tie_break,seed,max_load";
  for (std::uint32_t l = 0; l <= width; ++l) out << ",count_load_" << l;
  out << "\n";
  for (const auto& r : runs) {
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      const auto& row = r.rows[i];
      out << i << ',' << scheme_tag(r.scheme) << ',' << cfg.n << ',' << cfg.m << ',' << cfg.d << ','
          << tie_break_tag(r.tie_break) << ',' << r.seeds[i] << ',' << row.max_load();
      for (std::uint32_t l = 0; l <= width; ++l) out << ',' << (l < row.counts.size() ? row.counts[l] : 0);
      out << "\n";
    }
  }
  return out.str();
}

std::string load_table(const std::vector<SchemeRun>& runs) {
  std::uint32_t width = 0;
  for (const auto& r : runs) width = std::max(width, r.agg.max_load());
  std::ostringstream out;
  out << "load";
  for (const auto& r : runs) out << "  " << scheme_tag(r.scheme);
  out << "\n";
  std::vector<Eigen::ArrayXd> fr;
  for (const auto& r : runs) fr.push_back(r.agg.fractions());
  for (std::uint32_t l = 0; l <= width; ++l) {
    out << fmt("%4.0f", l);
    for (const auto& f : fr) out << "  " << (l < f.size() ? (f(l) >= 1e-4 || f(l) == 0 ? f5(f(l)) : fmt("%.3g", f(l))) : f5(0));
    out << "\n";
  }
  out << "\nper-load counts (min / avg / max / sample std):\n";
  for (const auto& r : runs) {
    out << "  " << scheme_tag(r.scheme) << "\n";
    for (std::uint32_t l = 0; l <= r.agg.max_load(); ++l) {
      const auto& acc = r.agg.at(l);
      out << "    " << l << ": " << acc.min << " / " << fmt("%.2f", r.agg.mean_count(l)) << " / " << acc.max << " / "
          << fmt("%.2f", r.agg.std_count(l)) << "\n";
    }
  }
  out << "\nmaximum load across trials:\n";
  for (const auto& r : runs) {
    out << "  " << scheme_tag(r.scheme) << ":";
    for (const auto& [v, frac] : r.agg.max_load_distribution()) out << "  " << v << " -> " << fmt("%.2f%%", 100 * frac);
    out << "\n";
  }
  return out.str();
}

void load_checks(const ExperimentConfig& cfg, const SchemeRun& run, std::vector<Check>& checks) {
  const bool paper_scale = cfg.trials >= 10000;
  const auto fractions = run.agg.fractions();
  for (const auto& ref : load_references()) {
    if (ref.scheme != run.scheme || ref.n != cfg.n || ref.m != cfg.m || ref.d != cfg.d) continue;
    const double tol = paper_scale ? ref.paper_tol : ref.desk_tol;
    for (std::size_t k = 0; k < ref.fractions.size(); ++k) {
      const std::uint32_t load = ref.first_load + static_cast<std::uint32_t>(k);
      const double v = load < fractions.size() ? fractions(load) : 0.0;
      checks.push_back(around(std::string(scheme_tag(run.scheme)) + " fraction at load " + std::to_string(load), v,
                              ref.fractions[k], tol));
    }
  }
  if (cfg.m == cfg.n && (run.scheme == Scheme::random_distinct || run.scheme == Scheme::double_hash)) {
    for (const auto& w : kMaxLoadWindows) {
      if (w.n != cfg.n || w.d != cfg.d) continue;
      const auto dist = run.agg.max_load_distribution();
      const double frac = dist.count(3) ? dist.at(3) : 0.0;
      checks.push_back(make_check(std::string(scheme_tag(run.scheme)) + " fraction of trials with max load 3", frac,
                                  w.lo, w.hi));
    }
    if (cfg.n == (1u << 18) && cfg.d == 4 && run.agg.max_load() >= 3) {
      // Load-3 bin counts: mean 6.04 / 6.06 and sample std 2.42 / 2.44.
      const bool random = run.scheme == Scheme::random_distinct;
      const double mean_ref = random ? 6.04 : 6.06;
      const double std_ref = random ? 2.42 : 2.44;
      const double se = std_ref / std::sqrt(static_cast<double>(run.agg.trials()));
      checks.push_back(around(std::string(scheme_tag(run.scheme)) + " mean count at load 3", run.agg.mean_count(3),
                              mean_ref, 4 * se + 0.005));
      checks.push_back(around(std::string(scheme_tag(run.scheme)) + " sample std of count at load 3",
                              run.agg.std_count(3), std_ref, 0.1 * std_ref));
    }
  }
}

fluid::Trajectory<double> bins_reference(const ExperimentConfig& cfg, double T) {
  fluid::Options opt;
  opt.step = cfg.h;
  opt.truncation = std::max(cfg.K, static_cast<int>(std::ceil(T)) + 16);
  opt.record_every = std::max<int>(1, static_cast<int>(T / cfg.h));
  return fluid::integrate_bins<double>(static_cast<int>(cfg.d), T, opt);
}

RunOutput run_balls(const ExperimentConfig& cfg, const RunOptions& options) {
  RunOutput out;
  std::vector<SchemeRun> runs;
  for (auto s : cfg.schemes) runs.push_back(run_scheme(cfg, s, options.threads));

  json meta = base_meta(cfg);
  meta["conventions"] = {
      {"std", "sample standard deviation (divisor trials - 1)"},
      {"tie_break", "random unless configured; d-left schemes always leftmost"},
      {"dleft_double", "subtable k holds bins [k n/d, (k+1) n/d); choice k = k n/d + ((f + k g) mod n/d), gcd(g, n/d) = 1"},
      {"double", "choice k = (f + k g) mod n, f uniform, g uniform over residues coprime to n"},
  };
  json per_load = json::array(), tail = json::array(), hist = json::array();
  for (const auto& r : runs) {
    for (auto& e : per_load_json(r)) per_load.push_back(e);
    for (auto& e : tail_json(r)) tail.push_back(e);
    for (auto& e : max_hist_json(r)) hist.push_back(e);
    load_checks(cfg, r, out.checks);
  }

  json comparison = json::array();
  std::ostringstream summary;
  summary << "kind=" << kind_tag(cfg.kind) << " n=" << cfg.n << " m=" << cfg.m << " d=" << cfg.d
          << " trials=" << cfg.trials << " master_seed=" << cfg.master_seed << " generator=" << RandomStream::generator_id
          << "\n\n";

  if (cfg.kind == Kind::compare) {
    const double T = static_cast<double>(cfg.m) / cfg.n;
    const auto traj = bins_reference(cfg, T);
    const Eigen::VectorXd ref = traj.final_state();
    const Comparison c = compare(runs[0].agg, runs[1].agg, ref);
    const auto ta = runs[0].agg.tail();
    const auto tb = runs[1].agg.tail();
    summary << "tail   fluid     " << scheme_tag(runs[0].scheme) << "  " << scheme_tag(runs[1].scheme) << "\n";
    const Eigen::Index levels = std::max<Eigen::Index>({ta.size(), tb.size()}) - 1;
    for (Eigen::Index i = 1; i <= levels; ++i) {
      const double a = i < ta.size() ? ta(i) : 0.0;
      const double b = i < tb.size() ? tb(i) : 0.0;
      const double x = i < ref.size() ? ref(i) : 0.0;
      comparison.push_back({{"level", i},
                            {"fluid", x},
                            {std::string(scheme_tag(runs[0].scheme)), a},
                            {std::string(scheme_tag(runs[1].scheme)), b},
                            {"abs_diff_schemes", std::abs(a - b)},
                            {"abs_diff_" + std::string(scheme_tag(runs[0].scheme)) + "_fluid", std::abs(a - x)},
                            {"abs_diff_" + std::string(scheme_tag(runs[1].scheme)) + "_fluid", std::abs(b - x)}});
      summary << ">=" << i << "    " << (x >= 1e-4 ? fmt("%.4f", x) : fmt("%.2g", x)) << "    "
              << (a >= 1e-4 ? fmt("%.4f", a) : fmt("%.2g", a)) << "    " << (b >= 1e-4 ? fmt("%.4f", b) : fmt("%.2g", b))
              << "\n";
      if (i <= 3) {
        out.checks.push_back(make_check(std::string(scheme_tag(runs[0].scheme)) + " tail >= " + std::to_string(i) +
                                            " vs fluid, abs diff",
                                        std::abs(a - x), 0.0, 0.005));
        out.checks.push_back(make_check(std::string(scheme_tag(runs[1].scheme)) + " tail >= " + std::to_string(i) +
                                            " vs fluid, abs diff",
                                        std::abs(b - x), 0.0, 0.005));
      }
    }
    if (cfg.d == 3 && cfg.m == cfg.n) {
      for (std::size_t i = 0; i < kFluidD3T1.size(); ++i)
        out.checks.push_back(around("fluid tail >= " + std::to_string(i + 1) + " (4 decimals)", ref(static_cast<Eigen::Index>(i + 1)),
                                    kFluidD3T1[i], 5e-5));
    }
    meta["fluid_reference"] = {{"T", T}, {"K", traj.truncation}, {"h", traj.step}, {"method", "classical RK4"}};
    summary << "\nmax |fraction difference| between schemes: " << fmt("%.3g", c.max_load_diff()) << "\n\n";
  }

  summary << load_table(runs);
  summary << checks_text(out.checks);

  out.report = {{"meta", meta},
                {"per_load", per_load},
                {"tail", tail},
                {"max_load_hist", hist},
                {"comparison", comparison},
                {"checks", checks_json(out.checks)}};
  out.csv_name = "trials.csv";
  out.csv = trials_csv(cfg, runs);
  out.summary = summary.str();
  return out;
}

// ---------------------------------------------------------------------------
// queue

RunOutput run_queue(const ExperimentConfig& cfg, const RunOptions& options) {
  RunOutput out;
  struct Row {
    std::uint64_t seed;
    QueueSimResult result;
  };
  std::ostringstream csv;
  csv << "scheme,n,lambda,d,seed,horizon,burn_in,mean_sojourn,jobs_counted,s1,s2,s3,s4\n";
  json per_scheme = json::array();
  std::ostringstream summary;
  summary << "kind=queue n=" << cfg.n << " lambda=" << cfg.lambda << " d=" << cfg.d << " horizon=" << cfg.horizon
          << " burn_in=" << cfg.burn_in << " seeds=" << cfg.trials << " engine=" << engine_tag(cfg.engine)
          << " master_seed=" << cfg.master_seed << "\n\n";

  const double equilibrium = fluid::equilibrium_sojourn(static_cast<int>(cfg.d), cfg.lambda);
  const auto fixed = fluid::queue_fixed_point<double>(static_cast<int>(cfg.d), cfg.lambda, static_cast<int>(kTailLevels));

  for (auto scheme : cfg.schemes) {
    QueueSimConfig q;
    q.n = cfg.n;
    q.lambda = cfg.lambda;
    q.d = cfg.d;
    q.scheme = scheme;
    q.horizon = cfg.horizon;
    q.burn_in = cfg.burn_in;
    q.engine = cfg.engine;
    std::vector<Row> rows(cfg.trials);
    parallel_for(cfg.trials, options.threads, [&](std::uint64_t i) {
      const std::uint64_t seed = derive_seed(cfg.master_seed, i);
      RandomStream stream(seed);
      rows[i] = {seed, simulate_queues(q, stream)};
    });

    double sum = 0.0, sum_sq = 0.0;
    std::array<double, kTailLevels> tails{};
    std::uint64_t jobs = 0;
    bool conserved = true;
    for (const auto& row : rows) {
      const auto& r = row.result;
      sum += r.mean_sojourn;
      sum_sq += r.mean_sojourn * r.mean_sojourn;
      jobs += r.jobs_counted;
      conserved &= r.arrivals == r.departures + r.in_system;
      for (std::size_t i = 0; i < kTailLevels; ++i) tails[i] += r.tail[i];
      csv << scheme_tag(scheme) << ',' << cfg.n << ',' << fmt("%.17g", cfg.lambda) << ',' << cfg.d << ',' << row.seed
          << ',' << fmt("%.17g", cfg.horizon) << ',' << fmt("%.17g", cfg.burn_in) << ',' << fmt("%.17g", r.mean_sojourn)
          << ',' << r.jobs_counted;
      for (double s : r.tail) csv << ',' << fmt("%.17g", s);
      csv << "\n";
    }
    const double k = static_cast<double>(rows.size());
    const double mean = sum / k;
    const double sd = rows.size() > 1 ? std::sqrt(std::max(0.0, (sum_sq - k * mean * mean) / (k - 1))) : 0.0;
    for (auto& t : tails) t /= k;

    json tail_arr = json::array();
    for (std::size_t i = 0; i < kTailLevels; ++i)
      tail_arr.push_back({{"level", i + 1}, {"fraction", tails[i]}, {"fixed_point", fixed(static_cast<Eigen::Index>(i + 1))}});
    per_scheme.push_back({{"scheme", scheme_tag(scheme)},
                          {"mean_sojourn", mean},
                          {"std_across_seeds", sd},
                          {"jobs_counted", jobs},
                          {"job_conservation", conserved},
                          {"tail", tail_arr}});
    summary << scheme_tag(scheme) << ": mean sojourn " << f5(mean) << " (std across seeds "
            << fmt("%.2g", sd) << ")  s1..s4 " << f5(tails[0]) << " " << f5(tails[1]) << " " << f5(tails[2]) << " "
            << f5(tails[3]) << "\n";

    if (cfg.n == (1u << 14) && cfg.horizon == 10000.0 && cfg.burn_in == 1000.0) {
      for (const auto& ref : kSojournReferences) {
        if (std::abs(ref.lambda - cfg.lambda) > 1e-12 || ref.d != cfg.d) continue;
        if (scheme != Scheme::random_distinct && scheme != Scheme::double_hash) continue;
        const double expected = scheme == Scheme::double_hash ? ref.double_hash : ref.random;
        out.checks.push_back(around(std::string(scheme_tag(scheme)) + " mean sojourn (1%)", mean, expected,
                                    0.01 * expected));
      }
    }
    out.checks.push_back(make_check(std::string(scheme_tag(scheme)) + " job conservation", conserved ? 1 : 0, 1, 1));
  }
  summary << "\nequilibrium (fluid fixed point, Little's law): " << f5(equilibrium) << "\n";
  summary << checks_text(out.checks);

  json meta = base_meta(cfg);
  meta["conventions"] = {
      {"tie_break", "uniform random among shortest queues"},
      {"sojourn", "jobs arriving at or after burn_in and completing by horizon; per-run means averaged across seeds"},
      {"tail", "time-averaged fraction of queues with at least i jobs over [burn_in, horizon]"},
      {"engine", cfg.engine == QueueEngine::race
                     ? "competing exponential clocks (memoryless service)"
                     : "time-ordered event schedule, service drawn at service start"},
  };
  out.report = {{"meta", meta},
                {"queues", per_scheme},
                {"equilibrium", {{"mean_sojourn", equilibrium}, {"method", "sum_{i>=1} lambda^((d^i-1)/(d-1)) / lambda"}}},
                {"checks", checks_json(out.checks)}};
  out.csv_name = "queues.csv";
  out.csv = csv.str();
  out.summary = summary.str();
  return out;
}

// ---------------------------------------------------------------------------
// fluid

RunOutput run_fluid(const ExperimentConfig& cfg) {
  RunOutput out;
  fluid::Options opt;
  opt.step = cfg.h;
  opt.truncation = cfg.K;
  opt.record_every = std::max<int>(1, static_cast<int>(cfg.T / cfg.h));
  const bool queues = cfg.system == "queues";
  const auto traj = queues ? fluid::integrate_queues<double>(static_cast<int>(cfg.d), cfg.lambda, cfg.T, opt)
                           : fluid::integrate_bins<double>(static_cast<int>(cfg.d), cfg.T, opt);
  const Eigen::VectorXd x = traj.final_state();

  json header = {{"d", cfg.d},
                 {"T", cfg.T},
                 {"K", cfg.K},
                 {"h", traj.step},
                 {"method", "classical RK4"},
                 {"system", cfg.system}};
  if (queues) header["lambda"] = cfg.lambda;

  std::ostringstream csv;
  csv << "# " << header.dump() << "\n";
  csv << "i,x_i(T)\n";
  json rows = json::array();
  std::ostringstream summary;
  summary << "fluid limit (" << cfg.system << "), d=" << cfg.d << " T=" << cfg.T << " K=" << cfg.K << " h=" << traj.step
          << "\n\n";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    csv << i << ',' << fmt("%.17g", x(i)) << "\n";
    rows.push_back({{"i", i}, {"x", x(i)}});
    if (i >= 1 && x(i) > 1e-12) summary << ">=" << i << "  " << (x(i) >= 1e-4 ? fmt("%.4f", x(i)) : fmt("%.3g", x(i))) << "\n";
  }
  if (!queues && cfg.d == 3 && std::abs(cfg.T - 1.0) < 1e-15) {
    for (std::size_t i = 0; i < kFluidD3T1.size(); ++i)
      out.checks.push_back(around("tail >= " + std::to_string(i + 1) + " (4 decimals)", x(static_cast<Eigen::Index>(i + 1)),
                                  kFluidD3T1[i], 5e-5));
  }
  if (!queues) out.checks.push_back(around("mass sum_{i>=1} x_i(T) = T", x.tail(x.size() - 1).sum(), cfg.T, 1e-6));
  summary << checks_text(out.checks);

  json meta = base_meta(cfg);
  out.report = {{"meta", meta}, {"fluid", header}, {"x", rows}, {"checks", checks_json(out.checks)}};
  out.csv_name = "fluid.csv";
  out.csv = csv.str();
  out.summary = summary.str();
  return out;
}

// ---------------------------------------------------------------------------
// coupled

RunOutput run_coupled_kind(const ExperimentConfig& cfg, const RunOptions& options) {
  RunOutput out;
  struct Row {
    std::uint64_t seed;
    std::uint64_t steps;
    std::uint64_t violations;
    std::uint32_t x_max;
    std::uint32_t y_max;
  };
  std::vector<Row> rows(cfg.trials);
  parallel_for(cfg.trials, options.threads, [&](std::uint64_t i) {
    const std::uint64_t seed = derive_seed(cfg.master_seed, i);
    RandomStream stream(seed);
    const auto trace = run_coupled(cfg.n, cfg.m, cfg.d, stream);
    rows[i] = {seed, trace.steps, trace.violations, trace.final_state.x_loads.max_load(),
               trace.final_state.y_loads.max_load()};
  });
  std::uint64_t steps = 0, violations = 0;
  double x_max = 0, y_max = 0;
  std::ostringstream csv;
  csv << "trial_id,seed,n,m,d,steps,violations,x_max_load,y_max_load\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    steps += r.steps;
    violations += r.violations;
    x_max += r.x_max;
    y_max += r.y_max;
    csv << i << ',' << r.seed << ',' << cfg.n << ',' << cfg.m << ',' << cfg.d << ',' << r.steps << ',' << r.violations
        << ',' << r.x_max << ',' << r.y_max << "\n";
  }
  const double k = static_cast<double>(rows.size());
  out.checks.push_back(make_check("majorization violations", static_cast<double>(violations), 0, 0));

  json meta = base_meta(cfg);
  meta["conventions"] = {{"coupling",
                          "X: two distinct uniform sorted positions a, b; Y: sorted positions a, b, 2b-a, ... mod n; "
                          "each places at its deepest (least loaded) chosen position"}};
  out.report = {{"meta", meta},
                {"coupled",
                 {{"trials", cfg.trials},
                  {"steps_checked", steps},
                  {"majorization_violations", violations},
                  {"mean_max_load_two_random", x_max / k},
                  {"mean_max_load_double_hash", y_max / k}}},
                {"checks", checks_json(out.checks)}};
  out.csv_name = "coupled.csv";
  out.csv = csv.str();
  std::ostringstream summary;
  summary << "coupled runs: n=" << cfg.n << " m=" << cfg.m << " d=" << cfg.d << " trials=" << cfg.trials << "\n"
          << "steps_checked = " << steps << "\n"
          << "majorization_violations = " << violations << "\n"
          << "mean max load: two random " << fmt("%.3f", x_max / k) << ", double hashing " << fmt("%.3f", y_max / k)
          << "\n"
          << checks_text(out.checks);
  out.summary = summary.str();
  return out;
}

// ---------------------------------------------------------------------------
// ancestry

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

RunOutput run_ancestry(const ExperimentConfig& cfg, const RunOptions& options) {
  RunOutput out;
  const Scheme scheme = cfg.schemes.front();
  std::ostringstream csv;
  csv << "n,trial_id,seed,max_size,mean_size\n";
  json per_n = json::array();
  std::vector<double> log_n, medians;
  std::ostringstream summary;
  summary << "ancestry lists: scheme=" << scheme_tag(scheme) << " d=" << cfg.d << " T=" << cfg.T
          << " trials=" << cfg.trials << "\n\n       n   median max   mean max   mean size\n";

  for (auto n : cfg.ns) {
    const auto m = static_cast<std::uint64_t>(std::llround(cfg.T * n));
    const ChooserConfig chooser = ChooserConfig::make(scheme, n, cfg.d);
    struct Row {
      std::uint64_t seed;
      double max_size;
      double mean_size;
    };
    std::vector<Row> rows(cfg.trials);
    parallel_for(cfg.trials, options.threads, [&](std::uint64_t i) {
      const std::uint64_t seed = derive_seed(cfg.master_seed, i);
      RandomStream stream(seed);
      const auto sizes = ancestry_sizes(n, m, chooser, cfg.tie_break_for(scheme), stream);
      double total = 0;
      for (auto s : sizes) total += s;
      rows[i] = {seed, static_cast<double>(*std::max_element(sizes.begin(), sizes.end())), total / n};
    });
    std::vector<double> maxima;
    double mean_max = 0, mean_size = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      maxima.push_back(r.max_size);
      mean_max += r.max_size;
      mean_size += r.mean_size;
      csv << n << ',' << i << ',' << r.seed << ',' << fmt("%.0f", r.max_size) << ',' << fmt("%.17g", r.mean_size) << "\n";
    }
    const double k = static_cast<double>(rows.size());
    const double med = median(maxima);
    log_n.push_back(std::log(static_cast<double>(n)));
    medians.push_back(med);
    per_n.push_back({{"n", n}, {"m", m}, {"median_max_size", med}, {"mean_max_size", mean_max / k}, {"mean_size", mean_size / k}});
    summary << fmt("%8.0f", n) << "   " << fmt("%10.1f", med) << "   " << fmt("%8.1f", mean_max / k) << "   "
            << fmt("%9.2f", mean_size / k) << "\n";
  }

  json fit = json::object();
  if (medians.size() >= 2) {
    const auto [a, b] = fit_line(log_n, medians);
    std::vector<double> log_med;
    for (double v : medians) log_med.push_back(std::log(v));
    const auto [la, lb] = fit_line(log_n, log_med);
    const double ratio = medians.back() / medians.front();
    fit = {{"median_max_vs_ln_n", {{"intercept", a}, {"slope", b}}},
           {"ln_median_max_vs_ln_n", {{"intercept", la}, {"slope", lb}}},
           {"ratio_last_to_first", ratio}};
    summary << "\nfit median_max = a + b ln n: b = " << fmt("%.2f", b) << "\n"
            << "log-log slope d ln(median_max) / d ln n: " << fmt("%.3f", lb) << "\n"
            << "median_max(" << cfg.ns.back() << ") / median_max(" << cfg.ns.front() << ") = " << fmt("%.3f", ratio)
            << "\n";
    if (cfg.d == 3 && std::abs(cfg.T - 1.0) < 1e-15 && cfg.ns.front() == (1u << 10) && cfg.ns.back() == (1u << 14))
      out.checks.push_back(make_check("median max ancestry size ratio 2^14 / 2^10 below 3", ratio, 0.0, 3.0 - 1e-12));
  }
  summary << "\nexpected size from the backward branching bound: e^(T d (d-1)) = "
          << fmt("%.1f", std::exp(cfg.T * cfg.d * (cfg.d - 1.0))) << "\n";
  summary << checks_text(out.checks);

  json meta = base_meta(cfg);
  meta["conventions"] = {{"size", "distinct bins in the ancestry list, the bin itself included"}};
  out.report = {{"meta", meta}, {"ancestry", per_n}, {"fit", fit}, {"checks", checks_json(out.checks)}};
  out.csv_name = "ancestry.csv";
  out.csv = csv.str();
  out.summary = summary.str();
  return out;
}

}  // namespace

RunOutput run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  switch (cfg.kind) {
    case Kind::balls:
    case Kind::compare:
      return run_balls(cfg, options);
    case Kind::queue:
      return run_queue(cfg, options);
    case Kind::fluid:
      return run_fluid(cfg);
    case Kind::coupled:
      return run_coupled_kind(cfg, options);
    case Kind::ancestry:
      return run_ancestry(cfg, options);
  }
  throw std::logic_error("run_experiment: unhandled kind");
}

void write_outputs(const RunOutput& out, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
  auto write = [&](const std::string& name, const std::string& text) {
    const fs::path path = fs::path(dir) / name;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
  };
  write("report.json", out.report.dump(2) + "\n");
  write(out.csv_name, out.csv);
}

}  // namespace dhash
