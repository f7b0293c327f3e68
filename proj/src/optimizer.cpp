#include "mif/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mif/error.hpp"

namespace mif {

void MetricsConfig::validate() const {
  if (!(reference_time > 0.0)) throw ConfigError("reference time must be positive");
}

AlarmCounts count_alarms(const DetectionOutcome& outcome, const std::vector<bool>& labels,
                         const MetricsConfig& cfg) {
  cfg.validate();
  if (labels.size() != outcome.alarm.size()) throw DataError("labels and alarms differ in length");
  AlarmCounts c;
  if (!outcome.times.empty()) c.duration = outcome.times.back() - outcome.times.front();
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] && !c.onset) c.onset = outcome.times[k];
  }
  for (std::size_t k = cfg.training_frames; k < labels.size(); ++k) {
    if (!outcome.statistic[k]) continue;
    if (labels[k]) {
      ++c.total_abnormal;
      if (outcome.alarm[k]) ++c.detected_abnormal;
    } else {
      ++c.total_normal;
      if (outcome.alarm[k]) ++c.false_alarms;
    }
  }
  if (c.onset) {
    if (auto k = outcome.first_alarm_after(*c.onset)) c.detection = outcome.times[*k];
  }
  return c;
}

double objective(double adr, double far, double relative_delay) {
  if (!(adr > 0.0)) return std::numeric_limits<double>::infinity();
  return 1.0 / adr + far + relative_delay;
}

EvaluationResult evaluate(std::span<const AlarmCounts> runs, const MetricsConfig& cfg) {
  cfg.validate();
  std::size_t da = 0, ta = 0, f = 0, tn = 0;
  double delay_sum = 0.0;
  std::size_t faulted = 0;
  EvaluationResult r;
  for (const AlarmCounts& c : runs) {
    da += c.detected_abnormal;
    ta += c.total_abnormal;
    f += c.false_alarms;
    tn += c.total_normal;
    if (!c.onset || c.total_abnormal == 0) continue;
    ++faulted;
    if (c.detection) {
      delay_sum += (*c.detection - *c.onset) / cfg.reference_time;
      if (runs.size() == 1) r.delay = *c.detection - *c.onset;
    } else {
      delay_sum += c.duration / cfg.reference_time;
    }
  }
  if (ta == 0 || tn == 0) throw DataError("unusable scenario labeling");
  r.adr = static_cast<double>(da) / static_cast<double>(ta);
  r.far = static_cast<double>(f) / static_cast<double>(tn);
  r.relative_delay = delay_sum / static_cast<double>(faulted);
  r.objective = objective(r.adr, r.far, r.relative_delay);
  return r;
}

EvaluationResult compute_metrics(const DetectionOutcome& outcome, const std::vector<bool>& labels,
                                 const MetricsConfig& cfg) {
  const AlarmCounts c = count_alarms(outcome, labels, cfg);
  return evaluate(std::span<const AlarmCounts>(&c, 1), cfg);
}

std::vector<bool> frame_labels(std::span<const TelemetryFrame> frames) {
  std::vector<bool> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.abnormal);
  return out;
}

std::array<double, 3> project_to_simplex(const std::array<double, 3>& v) {
  std::array<double, 3> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumsum += u[j];
    const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) out[i] = std::max(v[i] - theta, 0.0);
  // Put the rounding residue on the largest weight so the sum is 1.
  const auto big = static_cast<std::size_t>(std::max_element(out.begin(), out.end()) - out.begin());
  double rest = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    if (i != big) rest += out[i];
  }
  out[big] = 1.0 - rest;
  return out;
}

bool feasible(const Candidate& c, std::size_t window_min, std::size_t window_max) {
  if (c.window < window_min || c.window > window_max) return false;
  double sum = 0.0;
  for (double a : c.weights) {
    if (!(a >= 0.0 && a <= 1.0)) return false;
    sum += a;
  }
  return std::abs(sum - 1.0) <= 1e-9;
}

FitnessEvaluator::FitnessEvaluator(std::vector<std::vector<TelemetryFrame>> runs,
                                   std::vector<Point> sensors, DetectorParams base,
                                   MetricsConfig metrics)
    : runs_(std::move(runs)), sensors_(std::move(sensors)), base_(base), metrics_(metrics) {
  if (runs_.empty()) throw ConfigError("fitness evaluation needs at least one run");
  for (const auto& run : runs_) {
    labels_.push_back(frame_labels(run));
    times_.push_back(frame_times(run));
    for (std::size_t k = 0; k < std::min(metrics_.training_frames, run.size()); ++k) {
      if (run[k].abnormal) throw DataError("abnormal frame inside the training segment");
    }
  }
}

const std::vector<EntropyStreams>& FitnessEvaluator::streams_for(std::size_t window) {
  auto it = cache_.find(window);
  if (it != cache_.end()) return it->second;
  PipelineConfig pc;
  pc.window = window;
  pc.order = base_.order;
  std::vector<EntropyStreams> streams;
  streams.reserve(runs_.size());
  for (const auto& run : runs_) streams.push_back(compute_entropy_streams(run, pc, sensors_));
  return cache_.emplace(window, std::move(streams)).first->second;
}

DetectorParams FitnessEvaluator::params_for(const Candidate& c) const {
  DetectorParams p = base_;
  p.window = c.window;
  p.weights = c.weights;
  return p;
}

EvaluationResult FitnessEvaluator::evaluate(const Candidate& c) {
  const auto& streams = streams_for(c.window);
  std::vector<AlarmCounts> counts;
  counts.reserve(runs_.size());
  for (std::size_t i = 0; i < runs_.size(); ++i) {
    DetectorParams p;
    try {
      const EntropyStreams* one[] = {&streams[i]};
      p = fit_detector(one, metrics_.training_frames, params_for(c));
    } catch (const DataError&) {
      return {};
    }
    const auto h = fuse(streams[i], p);
    const DetectionOutcome out = detect(h, times_[i], p.threshold);
    counts.push_back(count_alarms(out, labels_[i], metrics_));
  }
  return mif::evaluate(counts, metrics_);
}

void GaConfig::validate() const {
  if (population < 4) throw ConfigError("population must be at least 4");
  if (elite + immigrants >= population) throw ConfigError("elite plus immigrants must be below population");
  if (tournament < 1) throw ConfigError("tournament size must be positive");
  if (window_min < 1 || window_min > window_max) throw ConfigError("invalid window bounds");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) throw ConfigError("crossover rate must lie in [0, 1]");
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw ConfigError("mutation rate must lie in [0, 1]");
}

Candidate random_candidate(std::mt19937_64& rng, std::size_t window_min, std::size_t window_max) {
  std::uniform_int_distribution<std::size_t> w(window_min, window_max);
  std::exponential_distribution<double> e(1.0);
  Candidate c;
  c.window = w(rng);
  std::array<double, 3> raw{};
  for (double& a : raw) a = e(rng);
  const double sum = raw[0] + raw[1] + raw[2];
  for (double& a : raw) a /= sum;
  c.weights = project_to_simplex(raw);
  return c;
}

namespace {

struct Scored {
  Candidate c;
  double f = std::numeric_limits<double>::infinity();
};

bool better(const Scored& a, const Scored& b) { return a.f < b.f; }

GenerationLog summarize(std::size_t gen, const std::vector<Scored>& pop) {
  GenerationLog g;
  g.generation = gen;
  const auto best = std::min_element(pop.begin(), pop.end(), better);
  g.best = best->f;
  g.best_candidate = best->c;
  double sum = 0.0;
  std::size_t finite = 0;
  for (const auto& s : pop) {
    if (std::isfinite(s.f)) {
      sum += s.f;
      ++finite;
    }
  }
  g.mean = finite ? sum / static_cast<double>(finite) : std::numeric_limits<double>::infinity();
  return g;
}

}  // namespace

GaResult mga_optimize(const Fitness& fitness, const GaConfig& cfg,
                      const std::function<void(const Candidate&)>& on_emit) {
  cfg.validate();
  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto score = [&](const Candidate& c) {
    if (on_emit) on_emit(c);
    return Scored{c, fitness(c)};
  };
  auto clamp_window = [&](long w) {
    return static_cast<std::size_t>(std::clamp<long>(w, static_cast<long>(cfg.window_min),
                                                     static_cast<long>(cfg.window_max)));
  };

  std::vector<Scored> pop;
  pop.reserve(cfg.population);
  Candidate defaults;
  defaults.window = clamp_window(static_cast<long>(defaults.window));
  pop.push_back(score(defaults));
  while (pop.size() < cfg.population) {
    pop.push_back(score(random_candidate(rng, cfg.window_min, cfg.window_max)));
  }

  GaResult result;
  result.log.push_back(summarize(0, pop));

  auto select = [&]() -> const Scored& {
    std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
    const Scored* best = &pop[pick(rng)];
    for (std::size_t t = 1; t < cfg.tournament; ++t) {
      const Scored& s = pop[pick(rng)];
      if (better(s, *best)) best = &s;
    }
    return *best;
  };

  for (std::size_t gen = 1; gen <= cfg.generations; ++gen) {
    const double progress = cfg.generations > 1
                                ? static_cast<double>(gen - 1) / static_cast<double>(cfg.generations - 1)
                                : 1.0;
    const double scale = cfg.mutation_scale_start +
                         (cfg.mutation_scale_end - cfg.mutation_scale_start) * progress;

    std::vector<Scored> sorted = pop;
    std::stable_sort(sorted.begin(), sorted.end(), better);
    std::vector<Scored> next(sorted.begin(), sorted.begin() + static_cast<long>(cfg.elite));
    for (std::size_t i = 0; i < cfg.immigrants; ++i) {
      next.push_back(score(random_candidate(rng, cfg.window_min, cfg.window_max)));
    }
    while (next.size() < cfg.population) {
      const Candidate& p1 = select().c;
      const Candidate& p2 = select().c;
      Candidate child = p1;
      if (unit(rng) < cfg.crossover_rate) {
        std::array<double, 3> mixed{};
        for (std::size_t i = 0; i < 3; ++i) {
          const double lo = std::min(p1.weights[i], p2.weights[i]);
          const double hi = std::max(p1.weights[i], p2.weights[i]);
          const double ext = cfg.blend * (hi - lo);
          mixed[i] = lo - ext + unit(rng) * (hi - lo + 2.0 * ext);
        }
        child.weights = project_to_simplex(mixed);
        const double u = unit(rng);
        child.window = clamp_window(std::lround(u * static_cast<double>(p1.window) +
                                                (1.0 - u) * static_cast<double>(p2.window)));
      }
      if (unit(rng) < cfg.mutation_rate) {
        std::array<double, 3> w = child.weights;
        for (double& a : w) a += scale * gauss(rng);
        child.weights = project_to_simplex(w);
      }
      if (unit(rng) < cfg.mutation_rate) {
        const long step = static_cast<long>(cfg.window_step);
        std::uniform_int_distribution<long> delta(-step, step);
        child.window = clamp_window(static_cast<long>(child.window) + delta(rng));
      }
      next.push_back(score(child));
    }
    pop = std::move(next);
    result.log.push_back(summarize(gen, pop));
  }

  const auto best = std::min_element(pop.begin(), pop.end(), better);
  if (!std::isfinite(best->f)) {
    result.fallback = true;
    result.best = Candidate{};
    return result;
  }
  result.best = best->c;
  result.best_objective = best->f;
  return result;
}

GaResult random_search(const Fitness& fitness, std::size_t count, std::size_t window_min,
                       std::size_t window_max, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GaResult r;
  for (std::size_t i = 0; i < count; ++i) {
    const Candidate c = random_candidate(rng, window_min, window_max);
    const double f = fitness(c);
    if (f < r.best_objective) {
      r.best_objective = f;
      r.best = c;
    }
  }
  r.fallback = !std::isfinite(r.best_objective);
  return r;
}

}  // namespace mif
