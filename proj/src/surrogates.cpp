#include "betrun/surrogates.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cctype>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "betrun/rng.hpp"

namespace betrun {
namespace {

constexpr std::uint64_t kFaultSalt = 0xFA17FA17FA17FA17ull;
constexpr std::uint64_t kQualitySalt = 0x9A11E77E0DDC0FFEull;
constexpr std::int64_t kFaultWindowUs = 40000;  // faults fire within 40 ms

std::uint64_t instance_base(const SubjectSpec& spec, std::uint64_t seed) {
  return mix64(spec.structure_seed ^ mix64(seed));
}

Micros to_micros(Millis ms) {
  return std::chrono::duration_cast<Micros>(ms);
}

// ---------------------------------------------------------------------------
// Problem structure builders (structure_seed fixes the instance data)

std::vector<std::pair<int, int>> build_mvc_edges(const SubjectSpec& spec) {
  SplitMix64 rng(spec.structure_seed);
  std::vector<std::pair<int, int>> edges;
  for (int a = 0; a < spec.vertices; ++a)
    for (int b = a + 1; b < spec.vertices; ++b)
      if (rng.next_unit() < spec.edge_density) edges.emplace_back(a, b);
  if (edges.empty()) edges.emplace_back(0, 1);  // keep the problem non-trivial
  return edges;
}

std::vector<std::pair<double, double>> build_tsp_cities(const SubjectSpec& spec) {
  if (spec.unit_square)
    return {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
  SplitMix64 rng(spec.structure_seed);
  std::vector<std::pair<double, double>> cities(spec.cities);
  for (auto& [x, y] : cities) {
    x = rng.next_unit();
    y = rng.next_unit();
  }
  return cities;
}

// ---------------------------------------------------------------------------
// Minimum vertex cover via a small generational GA with an elitist archive.

class MvcProcess : public AnytimeProcess {
 public:
  MvcProcess(const SubjectSpec& spec, std::uint64_t seed)
      : spec_(spec), edges_(build_mvc_edges(spec)),
        rng_(instance_base(spec, seed)) {}

  Micros initialize() override {
    full_mask_ = spec_.vertices == 64 ? ~0ull : ((1ull << spec_.vertices) - 1);
    population_.resize(spec_.population);
    for (auto& mask : population_) mask = rng_.next() & full_mask_;
    best_mask_ = population_[0];
    best_fitness_ = fitness(best_mask_);
    for (std::uint64_t mask : population_) consider(mask);
    return Micros{0};
  }

  Micros step_cost() const override { return spec_.step_cost; }

  void step() override {
    std::vector<std::pair<std::int64_t, std::uint64_t>> ranked;
    ranked.reserve(population_.size());
    for (std::uint64_t mask : population_) ranked.emplace_back(fitness(mask), mask);
    std::sort(ranked.begin(), ranked.end());

    std::vector<std::uint64_t> next;
    next.reserve(population_.size());
    for (int i = 0; i < spec_.elites && i < (int)ranked.size(); ++i)
      next.push_back(ranked[i].second);
    while (next.size() < population_.size()) {
      std::uint64_t a = tournament(ranked);
      std::uint64_t b = tournament(ranked);
      std::uint64_t pick = rng_.next();
      std::uint64_t child = (a & pick) | (b & ~pick);
      for (int v = 0; v < spec_.vertices; ++v)
        if (rng_.next_unit() < spec_.mutation_rate) child ^= 1ull << v;
      next.push_back(child & full_mask_);
    }
    population_ = std::move(next);

    std::uint64_t champion = greedy_trim(ranked[0].second);
    population_[0] = champion;
    for (std::uint64_t mask : population_) consider(mask);
  }

  double best_score() const override { return (double)best_fitness_; }

  std::vector<std::pair<std::string, double>> metrics() const override {
    double covered = (double)(edges_.size() - uncovered(best_mask_));
    return {{"coverage", covered / (double)edges_.size()}};
  }

 private:
  std::int64_t uncovered(std::uint64_t mask) const {
    std::int64_t count = 0;
    for (auto [a, b] : edges_)
      if (!((mask >> a | mask >> b) & 1ull)) ++count;
    return count;
  }

  // Any feasible cover beats any infeasible candidate under this
  // scalarization, so elitism cannot favor cheap-but-broken covers.
  std::int64_t fitness(std::uint64_t mask) const {
    return uncovered(mask) * spec_.vertices + std::popcount(mask);
  }

  // Drops redundant vertices from a feasible cover, lowest index first.
  std::uint64_t greedy_trim(std::uint64_t mask) const {
    if (uncovered(mask) > 0) return mask;
    for (int v = 0; v < spec_.vertices; ++v) {
      std::uint64_t without = mask & ~(1ull << v);
      if ((mask >> v & 1ull) && uncovered(without) == 0) mask = without;
    }
    return mask;
  }

  std::uint64_t tournament(
      const std::vector<std::pair<std::int64_t, std::uint64_t>>& ranked) {
    const auto& a = ranked[rng_.next_index(ranked.size())];
    const auto& b = ranked[rng_.next_index(ranked.size())];
    return std::min(a, b).second;
  }

  void consider(std::uint64_t mask) {
    std::int64_t f = fitness(mask);
    if (f < best_fitness_) {
      best_fitness_ = f;
      best_mask_ = mask;
    }
  }

  SubjectSpec spec_;
  std::vector<std::pair<int, int>> edges_;
  SplitMix64 rng_;
  std::uint64_t full_mask_ = 0;
  std::vector<std::uint64_t> population_;
  std::uint64_t best_mask_ = 0;
  std::int64_t best_fitness_ = 0;
};

// ---------------------------------------------------------------------------
// TSP 2-opt with internal random restarts at local optima.

class TspProcess : public AnytimeProcess {
 public:
  TspProcess(const SubjectSpec& spec, std::uint64_t seed)
      : spec_(spec), cities_(build_tsp_cities(spec)),
        rng_(instance_base(spec, seed)) {}

  Micros initialize() override {
    tour_.resize(cities_.size());
    for (std::size_t i = 0; i < tour_.size(); ++i) tour_[i] = (int)i;
    shuffle_tour();
    best_length_ = tour_length();
    return Micros{0};
  }

  Micros step_cost() const override { return spec_.step_cost; }

  void step() override {
    const int c = (int)cities_.size();
    for (int i = 1; i < c - 1; ++i) {
      for (int j = i + 1; j < c; ++j) {
        int a = tour_[i - 1], b = tour_[i];
        int d = tour_[j], e = tour_[(j + 1) % c];
        double delta = dist(a, d) + dist(b, e) - dist(a, b) - dist(d, e);
        if (delta < -1e-12) {
          std::reverse(tour_.begin() + i, tour_.begin() + j + 1);
          best_length_ = std::min(best_length_, tour_length());
          return;  // first improvement per step
        }
      }
    }
    shuffle_tour();  // local optimum: restart, archive keeps the best tour
    best_length_ = std::min(best_length_, tour_length());
  }

  double best_score() const override { return best_length_; }

  std::vector<std::pair<std::string, double>> metrics() const override {
    return {};
  }

 private:
  double dist(int a, int b) const {
    double dx = cities_[a].first - cities_[b].first;
    double dy = cities_[a].second - cities_[b].second;
    return std::sqrt(dx * dx + dy * dy);
  }

  double tour_length() const {
    double total = 0.0;
    for (std::size_t i = 0; i < tour_.size(); ++i)
      total += dist(tour_[i], tour_[(i + 1) % tour_.size()]);
    return total;
  }

  void shuffle_tour() {
    for (std::size_t i = tour_.size(); i > 1; --i)
      std::swap(tour_[i - 1], tour_[rng_.next_index(i)]);
  }

  SubjectSpec spec_;
  std::vector<std::pair<double, double>> cities_;
  SplitMix64 rng_;
  std::vector<int> tour_;
  double best_length_ = 0.0;
};

// ---------------------------------------------------------------------------
// Synthetic plateau: fitness decays from 100 toward a seed-dependent ceiling
// q, so early fitness predicts the final one. q is drawn from {10,...,90};
// the discrete levels produce genuine ties across seeds.

double plateau_quality(std::uint64_t base) {
  return 10.0 * (double)(1 + mix64(base ^ kQualitySalt) % 9);
}

class PlateauProcess : public AnytimeProcess {
 public:
  PlateauProcess(const SubjectSpec& spec, std::uint64_t seed)
      : spec_(spec), quality_(plateau_quality(instance_base(spec, seed))) {}

  Micros initialize() override { return Micros{0}; }
  Micros step_cost() const override { return spec_.step_cost; }
  void step() override { ++steps_; }

  double best_score() const override {
    double work_ms = (double)(steps_ * spec_.step_cost.count()) / 1000.0;
    return quality_ + (100.0 - quality_) * std::exp(-spec_.decay_rate * work_ms);
  }

  std::vector<std::pair<std::string, double>> metrics() const override {
    return {{"coverage", (100.0 - best_score()) / 100.0}};
  }

 private:
  SubjectSpec spec_;
  double quality_;
  std::int64_t steps_ = 0;
};

// ---------------------------------------------------------------------------
// Lagged coverage: emits nothing before its initialization lag, then covers
// nested targets (child targets unlock once the parent is covered).

class LaggedProcess : public AnytimeProcess {
 public:
  LaggedProcess(const SubjectSpec& spec, std::uint64_t seed)
      : spec_(spec), rng_(instance_base(spec, seed)),
        covered_(spec.targets, false) {}

  Micros initialize() override { return to_micros(spec_.lag); }
  Micros step_cost() const override { return spec_.step_cost; }

  void step() override {
    // Decide reachability before flipping anything so a freshly covered
    // parent unlocks its children only on the next step.
    std::vector<int> reachable;
    for (int i = 0; i < spec_.targets; ++i)
      if (!covered_[i] && (i == 0 || covered_[(i - 1) / 2]))
        reachable.push_back(i);
    for (int i : reachable)
      if (rng_.next_unit() < spec_.cover_prob) {
        covered_[i] = true;
        ++covered_count_;
      }
  }

  double best_score() const override {
    return (double)(spec_.targets - covered_count_);
  }

  std::vector<std::pair<std::string, double>> metrics() const override {
    return {{"coverage", (double)covered_count_ / (double)spec_.targets}};
  }

 private:
  SubjectSpec spec_;
  SplitMix64 rng_;
  std::vector<bool> covered_;
  int covered_count_ = 0;
};

// ---------------------------------------------------------------------------
// Fault injection: a decay core where some (subject, seed) pairs are drawn
// faulty and die with an error within the first 40 ms. Re-running the same
// seed reproduces the fault; a different seed can avoid it.

class FaultProcess : public AnytimeProcess {
 public:
  FaultProcess(const SubjectSpec& spec, std::uint64_t seed)
      : spec_(spec), quality_(plateau_quality(instance_base(spec, seed))) {
    SplitMix64 draw(mix64(instance_base(spec, seed) ^ kFaultSalt));
    if (draw.next_unit() < spec.fault_rate)
      fault_at_ = Micros{(std::int64_t)draw.next_below(kFaultWindowUs)};
  }

  Micros initialize() override { return Micros{0}; }
  Micros step_cost() const override { return spec_.step_cost; }
  void step() override { ++steps_; }

  double best_score() const override {
    double work_ms = (double)(steps_ * spec_.step_cost.count()) / 1000.0;
    return quality_ + (100.0 - quality_) * std::exp(-spec_.decay_rate * work_ms);
  }

  std::vector<std::pair<std::string, double>> metrics() const override {
    return {{"coverage", (100.0 - best_score()) / 100.0}};
  }

  std::optional<Micros> fault_at() const override { return fault_at_; }

 private:
  SubjectSpec spec_;
  double quality_;
  std::int64_t steps_ = 0;
  std::optional<Micros> fault_at_;
};

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::Mvc:     return "mvc";
    case Family::Tsp:     return "tsp";
    case Family::Plateau: return "plateau";
    case Family::Lagged:  return "lagged";
    case Family::Fault:   return "fault";
  }
  return "unknown";
}

const SubjectSpec* SubjectSuite::find(const SubjectId& id) const {
  for (const SubjectSpec& spec : subjects)
    if (spec.id == id) return &spec;
  return nullptr;
}

std::vector<SubjectId> SubjectSuite::ids() const {
  std::vector<SubjectId> out;
  out.reserve(subjects.size());
  for (const SubjectSpec& spec : subjects) out.push_back(spec.id);
  return out;
}

std::unique_ptr<AnytimeProcess> make_process(const SubjectSpec& spec,
                                             std::uint64_t seed) {
  switch (spec.family) {
    case Family::Mvc:     return std::make_unique<MvcProcess>(spec, seed);
    case Family::Tsp:     return std::make_unique<TspProcess>(spec, seed);
    case Family::Plateau: return std::make_unique<PlateauProcess>(spec, seed);
    case Family::Lagged:  return std::make_unique<LaggedProcess>(spec, seed);
    case Family::Fault:   return std::make_unique<FaultProcess>(spec, seed);
  }
  throw ConfigError("unknown subject family");
}

double reference_optimum(const SubjectSpec& spec) {
  if (spec.family == Family::Mvc) {
    if (spec.vertices > 20)
      throw SubjectTooLargeError(spec.id + ": brute force capped at 20 vertices");
    auto edges = build_mvc_edges(spec);
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (std::uint64_t mask = 0; mask < (1ull << spec.vertices); ++mask) {
      std::int64_t uncovered = 0;
      for (auto [a, b] : edges)
        if (!((mask >> a | mask >> b) & 1ull)) ++uncovered;
      best = std::min(best, uncovered * spec.vertices + std::popcount(mask));
    }
    return (double)best;
  }
  if (spec.family == Family::Tsp) {
    auto cities = build_tsp_cities(spec);
    if (cities.size() > 10)
      throw SubjectTooLargeError(spec.id + ": brute force capped at 10 cities");
    auto dist = [&](int a, int b) {
      double dx = cities[a].first - cities[b].first;
      double dy = cities[a].second - cities[b].second;
      return std::sqrt(dx * dx + dy * dy);
    };
    std::vector<int> rest;
    for (std::size_t i = 1; i < cities.size(); ++i) rest.push_back((int)i);
    double best = std::numeric_limits<double>::infinity();
    do {
      double total = dist(0, rest.front()) + dist(rest.back(), 0);
      for (std::size_t i = 0; i + 1 < rest.size(); ++i)
        total += dist(rest[i], rest[i + 1]);
      best = std::min(best, total);
    } while (std::next_permutation(rest.begin(), rest.end()));
    return best;
  }
  throw SubjectTooLargeError("no enumerable optimum for family " +
                             to_string(spec.family));
}

// ---------------------------------------------------------------------------
// Suite configuration

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_str(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = text.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

Family family_from_string(const std::string& s) {
  if (s == "mvc") return Family::Mvc;
  if (s == "tsp") return Family::Tsp;
  if (s == "plateau") return Family::Plateau;
  if (s == "lagged") return Family::Lagged;
  if (s == "fault") return Family::Fault;
  throw ConfigError("unknown subject family: " + s);
}

std::int64_t parse_int_field(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    std::int64_t value = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for " + what + ": '" + text + "'");
  }
}

double parse_real_field(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw ConfigError("bad number for " + what + ": '" + text + "'");
  }
}

void apply_param(SubjectSpec& spec, const std::string& key,
                 const std::string& value) {
  const Family f = spec.family;
  if (key == "step_cost_us") {
    spec.step_cost = Micros{parse_int_field(value, key)};
  } else if (key == "vertices" && f == Family::Mvc) {
    spec.vertices = (int)parse_int_field(value, key);
  } else if (key == "density" && f == Family::Mvc) {
    spec.edge_density = parse_real_field(value, key);
  } else if (key == "population" && f == Family::Mvc) {
    spec.population = (int)parse_int_field(value, key);
  } else if (key == "mutation" && f == Family::Mvc) {
    spec.mutation_rate = parse_real_field(value, key);
  } else if (key == "elites" && f == Family::Mvc) {
    spec.elites = (int)parse_int_field(value, key);
  } else if (key == "cities" && f == Family::Tsp) {
    spec.cities = (int)parse_int_field(value, key);
  } else if (key == "layout" && f == Family::Tsp) {
    if (value == "unit-square") spec.unit_square = true;
    else if (value != "random") throw ConfigError("unknown tsp layout: " + value);
  } else if (key == "decay" && (f == Family::Plateau || f == Family::Fault)) {
    spec.decay_rate = parse_real_field(value, key);
  } else if (key == "targets" && f == Family::Lagged) {
    spec.targets = (int)parse_int_field(value, key);
  } else if (key == "lag_ms" && f == Family::Lagged) {
    spec.lag = Millis{parse_int_field(value, key)};
  } else if (key == "cover" && f == Family::Lagged) {
    spec.cover_prob = parse_real_field(value, key);
  } else if (key == "rate" && f == Family::Fault) {
    spec.fault_rate = parse_real_field(value, key);
  } else {
    throw ConfigError("unknown parameter '" + key + "' for family " +
                      to_string(f));
  }
}

void validate_spec(const SubjectSpec& spec) {
  auto fail = [&](const std::string& why) {
    throw ConfigError(spec.id + ": " + why);
  };
  if (spec.step_cost.count() <= 0) fail("step_cost_us must be positive");
  switch (spec.family) {
    case Family::Mvc:
      if (spec.vertices < 2 || spec.vertices > 64)
        fail("vertices must be in [2, 64]");
      if (spec.edge_density <= 0.0 || spec.edge_density > 1.0)
        fail("density must be in (0, 1]");
      if (spec.population < 2) fail("population must be at least 2");
      if (spec.elites < 0 || spec.elites >= spec.population)
        fail("elites must be in [0, population)");
      if (spec.mutation_rate < 0.0 || spec.mutation_rate > 1.0)
        fail("mutation must be in [0, 1]");
      break;
    case Family::Tsp:
      if (spec.unit_square && spec.cities != 4)
        fail("unit-square layout has exactly 4 cities");
      if (spec.cities < 3) fail("cities must be at least 3");
      break;
    case Family::Plateau:
      if (spec.decay_rate <= 0.0) fail("decay must be positive");
      break;
    case Family::Lagged:
      if (spec.targets < 1) fail("targets must be at least 1");
      if (spec.lag.count() < 0) fail("lag_ms must be non-negative");
      if (spec.cover_prob <= 0.0 || spec.cover_prob > 1.0)
        fail("cover must be in (0, 1]");
      break;
    case Family::Fault:
      if (spec.fault_rate < 0.0 || spec.fault_rate > 1.0)
        fail("rate must be in [0, 1]");
      if (spec.decay_rate <= 0.0) fail("decay must be positive");
      break;
  }
}

std::string subject_id(const SubjectSpec& spec, int index) {
  char tail[16];
  std::snprintf(tail, sizeof tail, "%02d", index);
  switch (spec.family) {
    case Family::Mvc:
      return "mvc-v" + std::to_string(spec.vertices) + "-" + tail;
    case Family::Tsp:
      return (spec.unit_square ? std::string("tsp-square-")
                               : "tsp-c" + std::to_string(spec.cities) + "-") +
             tail;
    case Family::Plateau: return std::string("plateau-") + tail;
    case Family::Lagged:  return std::string("lagged-") + tail;
    case Family::Fault:   return std::string("fault-") + tail;
  }
  return tail;
}

}  // namespace

SubjectSuite make_subject_suite(const std::vector<std::string>& lines) {
  SubjectSuite suite;
  std::map<Family, int> next_index;
  std::set<SubjectId> seen;

  for (const std::string& raw : lines) {
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;

    std::vector<std::string> fields = split_str(line, ',');
    if (fields.size() < 2)
      throw ConfigError("suite line needs at least family,count: " + line);
    Family family = family_from_string(trim(fields[0]));
    std::int64_t count = parse_int_field(trim(fields[1]), "count");
    if (count < 1) throw ConfigError("subject count must be at least 1");

    std::vector<std::pair<std::string, std::vector<std::string>>> params;
    for (std::size_t i = 2; i < fields.size(); ++i) {
      std::string field = trim(fields[i]);
      std::size_t eq = field.find('=');
      if (eq == std::string::npos || eq == 0)
        throw ConfigError("expected param=value, got: " + field);
      params.emplace_back(field.substr(0, eq),
                          split_str(field.substr(eq + 1), ':'));
    }

    for (int k = 0; k < count; ++k) {
      SubjectSpec spec;
      spec.family = family;
      for (const auto& [key, values] : params)
        apply_param(spec, key, trim(values[k % values.size()]));
      spec.id = subject_id(spec, next_index[family]++);
      validate_spec(spec);
      spec.structure_seed = mix64(fnv1a64(spec.id));
      if (!seen.insert(spec.id).second)
        throw ConfigError("duplicate subject id: " + spec.id);
      suite.subjects.push_back(std::move(spec));
    }
  }
  return suite;
}

SubjectSuite load_subject_suite(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open suite file " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return make_subject_suite(lines);
}

// ---------------------------------------------------------------------------
// Instance driver

namespace {

struct Snapshot {
  double score = 0.0;
  std::vector<std::pair<std::string, double>> metrics;
};

class SurrogateInstance : public InstanceHandle {
 public:
  SurrogateInstance(const SubjectSpec& spec, std::uint64_t seed, Millis timeout,
                    const std::filesystem::path& path, MetricSchema schema,
                    SurrogateOptions options)
      : InstanceHandle(spec.id, seed, timeout, path),
        spec_(spec),
        schema_(std::move(schema)),
        options_(options),
        spawned_(std::chrono::steady_clock::now()) {
    driver_ = std::thread([this] { drive(); });
  }

  ~SurrogateInstance() override {
    kill_requested_.store(true);
    join_driver();
  }

  State await() override {
    {
      std::unique_lock<std::mutex> lock(mu_);
      if (!done_ && options_.pace > 0.0) {
        // Wall-clock watchdog: virtual work paced at `pace` must finish by
        // timeout * pace, plus the grace allowance; past that, force a kill.
        auto budget = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double, std::milli>(
                (double)timeout().count() * options_.pace) +
            options_.grace);
        if (!cv_.wait_until(lock, spawned_ + budget, [&] { return done_; }))
          kill_requested_.store(true);
      }
      cv_.wait(lock, [&] { return done_; });
    }
    join_driver();
    return state();
  }

  void kill() override {
    kill_requested_.store(true);
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_.wait(lock, [&] { return done_; });
    }
    join_driver();
  }

  State state() const override {
    std::lock_guard<std::mutex> lock(mu_);
    return state_;
  }

  Micros startup_wall() const override { return startup_wall_; }

 private:
  void drive() {
    State terminal = State::Finished;
    try {
      terminal = drive_checked();
    } catch (...) {
      terminal = State::Faulted;  // unwritable path, allocation failure, ...
    }
    std::lock_guard<std::mutex> lock(mu_);
    state_ = terminal;
    done_ = true;
    cv_.notify_all();
  }

  State drive_checked() {
    CheckpointWriter writer(checkpoint_path(),
                            CheckpointHeader{subject(), seed(), schema_});
    std::unique_ptr<AnytimeProcess> process = make_process(spec_, seed());
    const Micros lag = process->initialize();
    startup_wall_ = std::chrono::duration_cast<Micros>(
        std::chrono::steady_clock::now() - spawned_);

    const Micros timeout_us = to_micros(timeout());
    const Micros interval = to_micros(options_.checkpoint_interval);
    const Micros cost = process->step_cost();
    const std::optional<Micros> fault = process->fault_at();

    // Work halts at the timeout, or earlier at the fault time.
    Micros halt = timeout_us;
    bool faulting = fault && *fault <= timeout_us;
    if (faulting) halt = *fault;

    std::int64_t errors = 0;
    auto emit = [&](Micros at, const Snapshot& snap) {
      CheckpointRecord record;
      record.elapsed = std::chrono::duration_cast<Millis>(at);
      record.score = snap.score;
      record.error_count = errors;
      record.metrics = snap.metrics;
      writer.append(record);
    };
    auto capture = [&] { return Snapshot{process->best_score(), process->metrics()}; };

    // The best-so-far trajectory is a step function of virtual time: `state`
    // holds on [v, v + cost) while the next step runs. Checkpoints land on
    // interval marks only; nothing can be written before the lag.
    Micros v = lag;
    Snapshot state = capture();
    Micros mark = interval;
    while (mark < lag) mark += interval;

    while (v + cost <= halt) {
      if (kill_requested_.load()) return State::Killed;
      while (mark < v + cost) {
        emit(mark, state);
        mark += interval;
      }
      process->step();
      v += cost;
      state = capture();
      if (options_.pace > 0.0 && !paced_sleep(cost)) return State::Killed;
    }

    // No further step completes before the halt; later marks repeat the
    // final best-so-far, like a real checkpointer idling until termination.
    while (mark <= halt) {
      emit(mark, state);
      mark += interval;
    }
    if (faulting) {
      errors = 1;
      emit(halt, state);
      return State::Faulted;
    }
    return State::Finished;
  }

  // Sleeps cost * pace of wall time in small slices so kills stay prompt.
  bool paced_sleep(Micros work) {
    auto remaining = std::chrono::duration<double, std::micro>(
        (double)work.count() * options_.pace);
    while (remaining.count() > 0.0) {
      if (kill_requested_.load()) return false;
      auto slice = std::min(remaining, std::chrono::duration<double, std::micro>(2000.0));
      std::this_thread::sleep_for(slice);
      remaining -= slice;
    }
    return !kill_requested_.load();
  }

  void join_driver() {
    std::lock_guard<std::mutex> lock(join_mu_);
    if (driver_.joinable()) driver_.join();
  }

  SubjectSpec spec_;
  MetricSchema schema_;
  SurrogateOptions options_;
  std::chrono::steady_clock::time_point spawned_;
  Micros startup_wall_{0};

  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool done_ = false;
  State state_ = State::Running;
  std::atomic<bool> kill_requested_{false};

  std::mutex join_mu_;
  std::thread driver_;
};

}  // namespace

SurrogateAdapter::SurrogateAdapter(SubjectSuite suite, SurrogateOptions options)
    : suite_(std::move(suite)), options_(options) {}

MetricSchema surrogate_metric_schema() {
  return MetricSchema{{{MetricSchema::kFitnessScore, Direction::LowerIsBetter},
                       {"coverage", Direction::HigherIsBetter}}};
}

MetricSchema SurrogateAdapter::metric_schema() const {
  return surrogate_metric_schema();
}

std::unique_ptr<InstanceHandle> SurrogateAdapter::spawn(
    const SubjectId& subject, std::uint64_t seed, Millis timeout,
    const std::filesystem::path& checkpoint_path) {
  const SubjectSpec* spec = suite_.find(subject);
  if (!spec) throw SpawnError("unknown subject: " + subject);
  if (timeout.count() <= 0) throw SpawnError("timeout must be positive");
  try {
    return std::make_unique<SurrogateInstance>(*spec, seed, timeout,
                                               checkpoint_path, metric_schema(),
                                               options_);
  } catch (const std::system_error& e) {
    throw SpawnError(std::string("cannot start instance thread: ") + e.what());
  }
}

}  // namespace betrun
