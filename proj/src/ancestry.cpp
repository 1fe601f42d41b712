#include <stdexcept>

#include "dhash/allocator.hpp"

namespace dhash {

std::vector<std::uint32_t> ancestry_sizes(const AncestryLog& log) {
  if (!log.enabled) throw std::logic_error("ancestry_sizes: ancestry tracking was not enabled for this run");
  const std::uint32_t n = log.n;
  const std::uint64_t m = log.balls();

  // CSR of ball ids per bin.
  std::vector<std::uint64_t> begin(std::size_t{n} + 1, 0);
  for (auto b : log.choices) ++begin[b + 1];
  for (std::size_t i = 1; i < begin.size(); ++i) begin[i] += begin[i - 1];
  std::vector<std::uint64_t> end(begin.begin(), begin.end() - 1);
  std::vector<std::uint64_t> by_bin(log.choices.size());
  for (std::uint64_t j = 0; j < m; ++j) {
    const auto c = log.ball(j);
    for (std::size_t k = 0; k < c.size(); ++k) {
      bool repeat = false;
      for (std::size_t q = 0; q < k; ++q) repeat |= (c[q] == c[k]);
      if (!repeat) by_bin[end[c[k]]++] = j;
    }
  }

  // Memo per query: explored[c] is the time up to which bin c's balls have
  // already been expanded. Asking for (c, t) with t <= explored[c] is free.
  std::vector<std::uint64_t> explored(n, 0);
  std::vector<std::uint64_t> cursor(n, 0);
  std::vector<std::uint8_t> in_list(n, 0);
  std::vector<std::uint32_t> touched;
  std::vector<std::pair<std::uint32_t, std::uint64_t>> stack;
  std::vector<std::uint32_t> sizes(n, 0);

  for (std::uint32_t root = 0; root < n; ++root) {
    std::uint32_t size = 0;
    auto admit = [&](std::uint32_t bin) {
      if (!in_list[bin]) {
        in_list[bin] = 1;
        touched.push_back(bin);
        cursor[bin] = begin[bin];
        ++size;
      }
    };
    admit(root);
    stack.emplace_back(root, m);
    while (!stack.empty()) {
      const auto [bin, limit] = stack.back();
      stack.pop_back();
      if (limit <= explored[bin]) continue;
      explored[bin] = limit;
      auto& cur = cursor[bin];
      while (cur < end[bin] && by_bin[cur] < limit) {
        const std::uint64_t ball = by_bin[cur++];
        for (auto other : log.ball(ball)) {
          admit(other);
          if (other != bin) stack.emplace_back(other, ball);
        }
      }
    }
    sizes[root] = size;
    for (auto b : touched) {
      in_list[b] = 0;
      explored[b] = 0;
    }
    touched.clear();
  }
  return sizes;
}

std::vector<std::uint32_t> ancestry_sizes(std::uint32_t n, std::uint64_t m, const ChooserConfig& cfg,
                                          TieBreak policy, RandomStream& stream) {
  AncestryLog log;
  log.enabled = true;
  run_trial(n, m, cfg, policy, stream, &log);
  return ancestry_sizes(log);
}

}  // namespace dhash
