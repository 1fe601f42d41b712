#include "dhash/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "preset_data.hpp"

namespace dhash {

namespace {

constexpr std::array<std::pair<Kind, std::string_view>, 6> kKinds{{
    {Kind::balls, "balls"},
    {Kind::queue, "queue"},
    {Kind::fluid, "fluid"},
    {Kind::coupled, "coupled"},
    {Kind::ancestry, "ancestry"},
    {Kind::compare, "compare"},
}};

// Every key resolve() understands. `description` and `seed`/`output` are
// accepted as aliases or annotations.
constexpr std::array<std::string_view, 21> kKnownKeys{
    "kind",  "schemes", "n",  "m", "d",      "trials",     "paper_trials", "master_seed", "seed",        "tie_break",
    "lambda", "horizon", "burn_in", "engine", "T", "K", "h", "system", "ns", "output_path", "table_preset"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Accepts plain integers and powers written as base^exp (e.g. 2^14).
std::uint64_t parse_uint(const std::string& field, const std::string& text) {
  auto plain = [&](std::string_view s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
      throw ConfigError(field, "expected a non-negative integer, got '" + text + "'");
    return v;
  };
  const auto caret = text.find('^');
  if (caret == std::string::npos) return plain(text);
  const std::uint64_t base = plain(std::string_view(text).substr(0, caret));
  const std::uint64_t exp = plain(std::string_view(text).substr(caret + 1));
  std::uint64_t v = 1;
  for (std::uint64_t i = 0; i < exp; ++i) {
    if (base != 0 && v > ~std::uint64_t{0} / base) throw ConfigError(field, "value overflows: '" + text + "'");
    v *= base;
  }
  return v;
}

std::uint32_t parse_u32(const std::string& field, const std::string& text) {
  const std::uint64_t v = parse_uint(field, text);
  if (v > 0xFFFFFFFFULL) throw ConfigError(field, "value exceeds 32-bit range: '" + text + "'");
  return static_cast<std::uint32_t>(v);
}

double parse_real(const std::string& field, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty() || !std::isfinite(v))
    throw ConfigError(field, "expected a real number, got '" + text + "'");
  return v;
}

std::string format_real(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

const std::string* get(const ConfigMap& map, const std::string& key) {
  auto it = map.find(key);
  return it == map.end() ? nullptr : &it->second;
}

const std::string& require(const ConfigMap& map, const std::string& key, Kind kind) {
  const auto* v = get(map, key);
  if (v == nullptr) throw ConfigError(key, "required for kind '" + std::string(kind_tag(kind)) + "'");
  return *v;
}

}  // namespace

std::string_view kind_tag(Kind k) noexcept {
  for (const auto& [kind, tag] : kKinds)
    if (kind == k) return tag;
  return "unknown";
}

std::optional<Kind> parse_kind(std::string_view tag) noexcept {
  for (const auto& [kind, name] : kKinds)
    if (name == tag) return kind;
  return std::nullopt;
}

ConfigMap parse_config_text(std::string_view text, std::string_view origin) {
  ConfigMap map;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError(std::string(origin) + ":" + std::to_string(lineno), "expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError(std::string(origin) + ":" + std::to_string(lineno), "empty key");
    map[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return map;
}

ConfigMap load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    // A report written by `run`: replay the configuration in its header.
    nlohmann::json report;
    try {
      report = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config", "invalid JSON report '" + path + "': " + e.what());
    }
    if (!report.contains("meta") || !report["meta"].contains("config"))
      throw ConfigError("config", "report '" + path + "' has no meta.config section");
    ConfigMap map;
    for (const auto& [key, value] : report["meta"]["config"].items()) map[key] = value.get<std::string>();
    return map;
  }
  return parse_config_text(text, path);
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = [] {
    std::vector<Preset> out;
    for (const auto& file : detail::embedded_presets()) {
      Preset p;
      p.name = file.name;
      p.settings = parse_config_text(file.text, file.name);
      if (auto it = p.settings.find("description"); it != p.settings.end()) {
        p.description = it->second;
        p.settings.erase(it);
      }
      out.push_back(std::move(p));
    }
    std::sort(out.begin(), out.end(), [](const Preset& a, const Preset& b) { return a.name < b.name; });
    return out;
  }();
  return all;
}

const Preset* find_preset(std::string_view name) {
  for (const auto& p : presets())
    if (p.name == name) return &p;
  return nullptr;
}

TieBreak ExperimentConfig::tie_break_for(Scheme s) const noexcept {
  if (is_dleft(s)) return TieBreak::leftmost;
  return tie_break.value_or(TieBreak::random);
}

ExperimentConfig resolve(const ConfigMap& map) {
  for (const auto& [key, value] : map) {
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end())
      throw ConfigError(key, "unknown setting");
  }

  ExperimentConfig cfg;
  const auto* kind_text = get(map, "kind");
  if (kind_text == nullptr) throw ConfigError("kind", "missing; one of balls, queue, fluid, coupled, ancestry, compare");
  const auto kind = parse_kind(*kind_text);
  if (!kind) throw ConfigError("kind", "unknown kind '" + *kind_text + "'");
  cfg.kind = *kind;

  if (const auto* v = get(map, "master_seed")) {
    cfg.master_seed = parse_uint("master_seed", *v);
  } else if (const auto* s = get(map, "seed")) {
    cfg.master_seed = parse_uint("seed", *s);
  }
  if (const auto* v = get(map, "output_path")) cfg.output_path = *v;
  if (const auto* v = get(map, "table_preset")) cfg.table_preset = *v;
  if (const auto* v = get(map, "tie_break")) {
    const auto t = parse_tie_break(*v);
    if (!t) throw ConfigError("tie_break", "expected random or leftmost, got '" + *v + "'");
    cfg.tie_break = *t;
  }
  if (const auto* v = get(map, "schemes")) {
    for (const auto& tag : split_list(*v)) {
      const auto s = parse_scheme(tag);
      if (!s) throw ConfigError("schemes", "unknown scheme '" + tag + "'");
      cfg.schemes.push_back(*s);
    }
    if (cfg.schemes.empty()) throw ConfigError("schemes", "list is empty");
  }
  if (const auto* v = get(map, "engine")) {
    const auto e = parse_engine(*v);
    if (!e) throw ConfigError("engine", "expected race or event, got '" + *v + "'");
    cfg.engine = *e;
  }
  if (const auto* v = get(map, "n")) cfg.n = parse_u32("n", *v);
  if (const auto* v = get(map, "d")) cfg.d = parse_u32("d", *v);
  if (const auto* v = get(map, "trials")) cfg.trials = parse_uint("trials", *v);
  if (const auto* v = get(map, "paper_trials")) cfg.paper_trials = parse_uint("paper_trials", *v);
  if (const auto* v = get(map, "T")) cfg.T = parse_real("T", *v);
  if (const auto* v = get(map, "K")) cfg.K = static_cast<int>(parse_u32("K", *v));
  if (const auto* v = get(map, "h")) cfg.h = parse_real("h", *v);
  if (const auto* v = get(map, "lambda")) cfg.lambda = parse_real("lambda", *v);
  if (const auto* v = get(map, "horizon")) cfg.horizon = parse_real("horizon", *v);
  if (const auto* v = get(map, "burn_in")) cfg.burn_in = parse_real("burn_in", *v);
  if (const auto* v = get(map, "system")) cfg.system = *v;
  if (const auto* v = get(map, "ns"))
    for (const auto& item : split_list(*v)) cfg.ns.push_back(parse_u32("ns", item));

  auto need_trials = [&] {
    require(map, "trials", cfg.kind);
    if (cfg.trials == 0) throw ConfigError("trials", "must be at least 1");
  };
  auto need_nd = [&] {
    require(map, "n", cfg.kind);
    require(map, "d", cfg.kind);
    if (cfg.n == 0) throw ConfigError("n", "must be at least 1");
    if (cfg.d == 0) throw ConfigError("d", "must be at least 1");
    if (cfg.d > kMaxChoices) throw ConfigError("d", "must be at most " + std::to_string(kMaxChoices));
  };
  auto need_schemes = [&](std::size_t exactly) {
    require(map, "schemes", cfg.kind);
    if (exactly != 0 && cfg.schemes.size() != exactly)
      throw ConfigError("schemes", "kind '" + std::string(kind_tag(cfg.kind)) + "' needs exactly " +
                                       std::to_string(exactly) + " schemes");
  };
  auto check_schemes = [&] {
    for (auto s : cfg.schemes) {
      try {
        validate(ChooserConfig{s, cfg.n, cfg.d, NClass::general});
      } catch (const std::domain_error& e) {
        throw ConfigError("schemes", std::string(scheme_tag(s)) + ": " + e.what());
      }
      if (is_dleft(s) && cfg.tie_break == TieBreak::random)
        throw ConfigError("tie_break", "d-left schemes break ties to the left");
    }
  };
  auto check_fluid = [&] {
    if (!(cfg.T > 0.0)) throw ConfigError("T", "must be positive");
    if (!(cfg.h > 0.0)) throw ConfigError("h", "must be positive");
    if (cfg.K < 1) throw ConfigError("K", "must be at least 1");
  };

  switch (cfg.kind) {
    case Kind::balls:
    case Kind::compare: {
      need_nd();
      need_trials();
      need_schemes(cfg.kind == Kind::compare ? 2 : 0);
      cfg.m = cfg.n;
      if (const auto* v = get(map, "m")) cfg.m = parse_uint("m", *v);
      check_schemes();
      if (cfg.kind == Kind::compare) check_fluid();
      break;
    }
    case Kind::queue: {
      need_nd();
      need_trials();
      need_schemes(0);
      require(map, "lambda", cfg.kind);
      require(map, "horizon", cfg.kind);
      require(map, "burn_in", cfg.kind);
      if (!(cfg.lambda > 0.0 && cfg.lambda < 1.0)) throw ConfigError("lambda", "must lie in (0, 1)");
      if (!(cfg.horizon > 0.0)) throw ConfigError("horizon", "must be positive");
      if (!(cfg.burn_in >= 0.0 && cfg.burn_in < cfg.horizon)) throw ConfigError("burn_in", "must lie in [0, horizon)");
      check_schemes();
      break;
    }
    case Kind::fluid: {
      require(map, "d", cfg.kind);
      if (cfg.d == 0) throw ConfigError("d", "must be at least 1");
      require(map, "T", cfg.kind);
      check_fluid();
      if (cfg.system != "bins" && cfg.system != "queues")
        throw ConfigError("system", "expected bins or queues, got '" + cfg.system + "'");
      if (cfg.system == "queues") {
        require(map, "lambda", cfg.kind);
        if (!(cfg.lambda > 0.0 && cfg.lambda < 1.0)) throw ConfigError("lambda", "must lie in (0, 1)");
      }
      break;
    }
    case Kind::coupled: {
      need_nd();
      need_trials();
      if (!is_prime(cfg.n)) throw ConfigError("n", "coupled runs need a prime number of bins");
      if (cfg.d < 2 || cfg.d > cfg.n) throw ConfigError("d", "must lie in [2, n]");
      cfg.m = cfg.n;
      if (const auto* v = get(map, "m")) cfg.m = parse_uint("m", *v);
      break;
    }
    case Kind::ancestry: {
      require(map, "d", cfg.kind);
      need_trials();
      if (cfg.ns.empty()) {
        require(map, "n", cfg.kind);
        cfg.ns.push_back(cfg.n);
      }
      if (cfg.schemes.empty()) cfg.schemes.push_back(Scheme::double_hash);
      if (cfg.schemes.size() != 1) throw ConfigError("schemes", "ancestry runs take a single scheme");
      if (!(cfg.T > 0.0)) throw ConfigError("T", "must be positive");
      for (auto n : cfg.ns) {
        try {
          validate(ChooserConfig{cfg.schemes[0], n, cfg.d, NClass::general});
        } catch (const std::domain_error& e) {
          throw ConfigError("ns", "n=" + std::to_string(n) + ": " + e.what());
        }
      }
      if (cfg.n == 0) cfg.n = cfg.ns.front();
      break;
    }
  }
  if (cfg.paper_trials == 0) cfg.paper_trials = cfg.trials;
  return cfg;
}

ConfigMap canonical(const ExperimentConfig& cfg) {
  ConfigMap out;
  out["kind"] = std::string(kind_tag(cfg.kind));
  out["master_seed"] = std::to_string(cfg.master_seed);
  if (!cfg.table_preset.empty()) out["table_preset"] = cfg.table_preset;
  auto schemes = [&] {
    std::string s;
    for (auto sc : cfg.schemes) {
      if (!s.empty()) s += ",";
      s += scheme_tag(sc);
    }
    return s;
  };
  auto fluid_keys = [&] {
    out["T"] = format_real(cfg.T);
    out["K"] = std::to_string(cfg.K);
    out["h"] = format_real(cfg.h);
  };
  if (cfg.tie_break) out["tie_break"] = std::string(tie_break_tag(*cfg.tie_break));
  switch (cfg.kind) {
    case Kind::balls:
    case Kind::compare:
      out["schemes"] = schemes();
      out["n"] = std::to_string(cfg.n);
      out["m"] = std::to_string(cfg.m);
      out["d"] = std::to_string(cfg.d);
      out["trials"] = std::to_string(cfg.trials);
      if (cfg.kind == Kind::compare) fluid_keys();
      break;
    case Kind::queue:
      out["schemes"] = schemes();
      out["n"] = std::to_string(cfg.n);
      out["d"] = std::to_string(cfg.d);
      out["trials"] = std::to_string(cfg.trials);
      out["lambda"] = format_real(cfg.lambda);
      out["horizon"] = format_real(cfg.horizon);
      out["burn_in"] = format_real(cfg.burn_in);
      out["engine"] = std::string(engine_tag(cfg.engine));
      break;
    case Kind::fluid:
      out["d"] = std::to_string(cfg.d);
      out["system"] = cfg.system;
      if (cfg.system == "queues") out["lambda"] = format_real(cfg.lambda);
      fluid_keys();
      break;
    case Kind::coupled:
      out["n"] = std::to_string(cfg.n);
      out["m"] = std::to_string(cfg.m);
      out["d"] = std::to_string(cfg.d);
      out["trials"] = std::to_string(cfg.trials);
      break;
    case Kind::ancestry: {
      out["schemes"] = schemes();
      out["d"] = std::to_string(cfg.d);
      out["trials"] = std::to_string(cfg.trials);
      out["T"] = format_real(cfg.T);
      std::string ns;
      for (auto n : cfg.ns) {
        if (!ns.empty()) ns += ",";
        ns += std::to_string(n);
      }
      out["ns"] = ns;
      break;
    }
  }
  return out;
}

ConfigMap layer(const std::optional<std::string>& preset, const std::optional<std::string>& config_path,
                const ConfigMap& overrides, bool paper_scale) {
  ConfigMap map;
  if (preset) {
    const Preset* p = find_preset(*preset);
    if (p == nullptr) throw ConfigError("preset", "unknown preset '" + *preset + "'");
    map = p->settings;
    map["table_preset"] = p->name;
  }
  if (config_path) {
    for (const auto& [k, v] : load_config_file(*config_path)) map[k] = v;
  }
  for (const auto& [k, v] : overrides) map[k] = v;
  if (paper_scale) {
    if (overrides.count("trials") == 0) {
      if (auto it = map.find("paper_trials"); it != map.end()) map["trials"] = it->second;
    }
  }
  return map;
}

}  // namespace dhash
