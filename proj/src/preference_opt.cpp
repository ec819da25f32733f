#include "hsi/preference_opt.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "hsi/rng.hpp"

namespace hsi::dpo {

namespace {

constexpr std::size_t kW1 = 0;
constexpr std::size_t kB1 = kW1 + static_cast<std::size_t>(kHidden) * kInput;
constexpr std::size_t kW2 = kB1 + kHidden;
constexpr std::size_t kB2 = kW2 + static_cast<std::size_t>(kSignal) * kHidden;
static_assert(kB2 + kSignal == static_cast<std::size_t>(kParams));

struct Forward {
  std::array<double, kInput> input{};
  std::array<double, kHidden> hidden{};
  std::array<double, kSignal> output{};
};

Forward forward(const std::vector<double>& p, const std::array<double, kSignal>& noisy, int t, int steps,
                int prompt) {
  Forward f;
  std::copy(noisy.begin(), noisy.end(), f.input.begin());
  const double s = static_cast<double>(t) / steps;
  for (int k = 0; k < kTimeFeatures / 2; ++k) {
    const double w = std::numbers::pi * static_cast<double>(1 << k) * s;
    f.input[kSignal + 2 * k] = std::sin(w);
    f.input[kSignal + 2 * k + 1] = std::cos(w);
  }
  f.input[kSignal + kTimeFeatures + prompt] = 1.0;
  for (int j = 0; j < kHidden; ++j) {
    double z = p[kB1 + j];
    const double* row = &p[kW1 + static_cast<std::size_t>(j) * kInput];
    for (int k = 0; k < kInput; ++k) z += row[k] * f.input[k];
    f.hidden[j] = std::tanh(z);
  }
  for (int i = 0; i < kSignal; ++i) {
    double o = p[kB2 + i];
    const double* row = &p[kW2 + static_cast<std::size_t>(i) * kHidden];
    for (int j = 0; j < kHidden; ++j) o += row[j] * f.hidden[j];
    f.output[i] = o;
  }
  return f;
}

// Accumulates scale * d(sum_i g_i o_i)/d(params) into grad.
void backward(const std::vector<double>& p, const Forward& f, const std::array<double, kSignal>& g, double scale,
              std::vector<double>& grad) {
  std::array<double, kHidden> dh{};
  for (int i = 0; i < kSignal; ++i) {
    const double gi = scale * g[i];
    grad[kB2 + i] += gi;
    double* grow = &grad[kW2 + static_cast<std::size_t>(i) * kHidden];
    const double* prow = &p[kW2 + static_cast<std::size_t>(i) * kHidden];
    for (int j = 0; j < kHidden; ++j) {
      grow[j] += gi * f.hidden[j];
      dh[j] += gi * prow[j];
    }
  }
  for (int j = 0; j < kHidden; ++j) {
    const double dz = dh[j] * (1.0 - f.hidden[j] * f.hidden[j]);
    grad[kB1 + j] += dz;
    double* grow = &grad[kW1 + static_cast<std::size_t>(j) * kInput];
    for (int k = 0; k < kInput; ++k) grow[k] += dz * f.input[k];
  }
}

std::array<double, kSignal> noised(const TrajectorySample& x, const NoiseDraw& d, const Schedule& s) {
  const double ab = s.alpha_bar.at(static_cast<std::size_t>(d.t - 1));
  const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
  std::array<double, kSignal> out{};
  for (int i = 0; i < kSignal; ++i) out[i] = a * kDataScale * x.values[i] + b * d.eps[i];
  return out;
}

struct SampleEval {
  Forward f;
  double loss = 0.0;
  std::array<double, kSignal> dloss{};  // dL/d output
};

SampleEval evaluate(const DenoiserModel& m, const TrajectorySample& x, int prompt, const NoiseDraw& d,
                    const Schedule& s) {
  SampleEval e;
  e.f = forward(m.params, noised(x, d, s), d.t, s.steps(), prompt);
  for (int i = 0; i < kSignal; ++i) {
    const double r = e.f.output[i] - d.eps[i];
    e.loss += r * r;
    e.dloss[i] = 2.0 * r / kSignal;
  }
  e.loss /= kSignal;
  return e;
}

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

void check_prompt(int prompt) {
  if (prompt < 0 || prompt >= kPrompts) throw ContractError("prompt code " + std::to_string(prompt) + " out of range");
}

}  // namespace

Schedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw ConfigError("schedule needs at least one step");
  Schedule s;
  double prod = 1.0;
  for (int t = 0; t < steps; ++t) {
    const double beta = steps == 1 ? beta_start : beta_start + (beta_end - beta_start) * t / (steps - 1);
    prod *= 1.0 - beta;
    s.alpha_bar.push_back(prod);
  }
  return s;
}

NoiseDraw draw_noise(std::uint64_t seed, std::uint64_t index, int steps) {
  const StreamKey key = StreamKey(seed).child("noise").child(index);
  NoiseDraw d;
  d.t = static_cast<int>(key.uniform_int(0, 1, steps));
  for (int i = 0; i < kSignal; ++i) d.eps[i] = key.normal(static_cast<std::uint64_t>(i) + 1);
  return d;
}

DenoiserModel DenoiserModel::random(std::uint64_t seed, double output_scale) {
  DenoiserModel m;
  m.seed = seed;
  const StreamKey key = StreamKey(seed).child("init");
  const double s1 = std::sqrt(2.0 / (kInput + kHidden));
  const double s2 = output_scale * std::sqrt(2.0 / (kHidden + kSignal));
  for (std::size_t i = kW1; i < kB1; ++i) m.params[i] = s1 * key.normal(i);
  for (std::size_t i = kW2; i < kB2; ++i) m.params[i] = s2 * key.normal(i);
  return m;
}

std::array<double, kSignal> DenoiserModel::predict(const std::array<double, kSignal>& noisy, int t, int steps,
                                                   int prompt) const {
  check_prompt(prompt);
  return forward(params, noisy, t, steps, prompt).output;
}

void validate(const DpoConfig& c) {
  if (!(c.beta > 0)) throw ConfigError("beta must be positive");
  if (!(c.learning_rate >= 0)) throw ConfigError("learning rate must be non-negative");
  if (c.steps < 0 || c.batch < 1 || c.timesteps < 1) throw ConfigError("steps, batch and timesteps must be positive");
}

double per_sample_loss(const DenoiserModel& model, const TrajectorySample& x, int prompt, const NoiseDraw& draw,
                       const Schedule& schedule) {
  check_prompt(prompt);
  if (draw.t < 1 || draw.t > schedule.steps()) throw ContractError("timestep outside the schedule");
  return evaluate(model, x, prompt, draw, schedule).loss;
}

double dpo_objective(double lw, double ll, double beta) {
  const double x = 0.5 * beta * (lw - ll);
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double dpo_loss(const DenoiserModel& model, const PreferencePair& pair, double beta, const NoiseDraw& draw,
                const Schedule& schedule, const DenoiserModel* reference) {
  if (!(beta > 0)) throw ConfigError("beta must be positive");
  double lw = per_sample_loss(model, pair.preferred, pair.prompt, draw, schedule);
  double ll = per_sample_loss(model, pair.dispreferred, pair.prompt, draw, schedule);
  if (reference) {
    lw -= per_sample_loss(*reference, pair.preferred, pair.prompt, draw, schedule);
    ll -= per_sample_loss(*reference, pair.dispreferred, pair.prompt, draw, schedule);
  }
  return dpo_objective(lw, ll, beta);
}

LossAndGradient gradient(const DenoiserModel& model, const std::vector<PreferencePair>& batch,
                         const std::vector<NoiseDraw>& draws, double beta, const Schedule& schedule,
                         const DenoiserModel* reference) {
  if (batch.empty()) throw ContractError("gradient needs a non-empty batch");
  if (draws.size() != batch.size()) throw ContractError("one noise draw per pair is required");
  LossAndGradient out;
  out.gradient.assign(kParams, 0.0);
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const PreferencePair& pair = batch[n];
    check_prompt(pair.prompt);
    const SampleEval w = evaluate(model, pair.preferred, pair.prompt, draws[n], schedule);
    const SampleEval l = evaluate(model, pair.dispreferred, pair.prompt, draws[n], schedule);
    double delta = w.loss - l.loss;
    if (reference)
      delta -= per_sample_loss(*reference, pair.preferred, pair.prompt, draws[n], schedule) -
               per_sample_loss(*reference, pair.dispreferred, pair.prompt, draws[n], schedule);
    const double x = 0.5 * beta * delta;
    out.loss += inv * (x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)));
    const double coeff = inv * 0.5 * beta * sigmoid(x);
    backward(model.params, w.f, w.dloss, coeff, out.gradient);
    backward(model.params, l.f, l.dloss, -coeff, out.gradient);
  }
  for (std::size_t i = 0; i < out.gradient.size(); ++i)
    if (!std::isfinite(out.gradient[i]))
      throw NumericalError("non-finite gradient at parameter " + std::to_string(i));
  return out;
}

double slide_score(const TrajectorySample& x, double contact_height) {
  double sum = 0.0;
  int contacts = 0;
  for (int k = 0; k < kLength; ++k)
    if (x.values[2 * k + 1] < contact_height) {
      sum += std::fabs(x.values[2 * k]);
      ++contacts;
    }
  return contacts ? sum / contacts : 0.0;
}

namespace {

struct Template {
  double cycles, height, swing;
};
constexpr std::array<Template, kPrompts> kTemplates = {{
    {2.0, 0.12, 0.05},  // walk
    {3.0, 0.20, 0.08},  // run
    {1.5, 0.08, 0.03},  // shuffle
    {2.0, 0.25, 0.02},  // march
}};

TrajectorySample make_trajectory(int prompt, double phase, double height, double slide, const StreamKey& key) {
  const Template& tp = kTemplates[static_cast<std::size_t>(prompt)];
  TrajectorySample x;
  x.prompt = prompt;
  for (int k = 0; k < kLength; ++k) {
    const double s = std::sin(2.0 * std::numbers::pi * tp.cycles * k / kLength + phase);
    const double h = height * std::max(0.0, s) + 0.005 * key.uniform(static_cast<std::uint64_t>(3 * k));
    const double jitter = key.normal(static_cast<std::uint64_t>(3 * k + 1));
    const double dx = h < 0.05 ? std::max(0.0, slide * (1.0 + 0.2 * jitter)) : tp.swing * (1.0 + 0.05 * jitter);
    x.values[2 * k] = dx;
    x.values[2 * k + 1] = h;
  }
  return x;
}

}  // namespace

std::vector<PreferencePair> synth_pairs(int n, std::uint64_t seed) {
  if (n < 1) throw ContractError("synth_pairs needs n >= 1");
  std::vector<PreferencePair> pairs;
  const StreamKey root = StreamKey(seed).child("pairs");
  for (int i = 0; i < n; ++i) {
    const StreamKey item = root.child(static_cast<std::uint64_t>(i));
    const int prompt = static_cast<int>(item.uniform_int(0, 0, kPrompts - 1));
    const double phase = 2.0 * std::numbers::pi * item.uniform(1);
    const double height = kTemplates[static_cast<std::size_t>(prompt)].height * (1.0 + 0.1 * item.normal(2));
    for (std::uint64_t attempt = 0;; ++attempt) {
      const StreamKey k = item.child(attempt);
      const TrajectorySample a = make_trajectory(prompt, phase, height, 0.06 * k.uniform(0), k.child("a"));
      const TrajectorySample b = make_trajectory(prompt, phase, height, 0.06 * k.uniform(1), k.child("b"));
      const double sa = slide_score(a), sb = slide_score(b);
      if (std::fabs(sa - sb) < kMinScoreGap) continue;
      pairs.push_back(sa < sb ? PreferencePair{a, b, prompt} : PreferencePair{b, a, prompt});
      break;
    }
  }
  return pairs;
}

TrainResult train(const DenoiserModel& model, const std::vector<PreferencePair>& pairs, const DpoConfig& config) {
  validate(config);
  if (pairs.empty()) throw ContractError("training needs at least one pair");
  const Schedule schedule = make_schedule(config.timesteps);
  const StreamKey key = StreamKey(config.seed).child("train");
  TrainResult out{model, {}};
  const DenoiserModel reference = model;
  std::vector<double> m1(kParams, 0.0), m2(kParams, 0.0);
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;

  for (int step = 0; step < config.steps; ++step) {
    std::vector<PreferencePair> batch;
    std::vector<NoiseDraw> draws;
    const StreamKey sk = key.child(static_cast<std::uint64_t>(step));
    for (int b = 0; b < config.batch; ++b) {
      const auto pick = sk.uniform_int(static_cast<std::uint64_t>(b), 0, static_cast<std::int64_t>(pairs.size()) - 1);
      batch.push_back(pairs[static_cast<std::size_t>(pick)]);
      draws.push_back(draw_noise(sk.value(), static_cast<std::uint64_t>(b), config.timesteps));
    }
    const LossAndGradient lg = gradient(out.model, batch, draws, config.beta, schedule,
                                        config.reference_relative ? &reference : nullptr);
    out.loss_trace.push_back(lg.loss);
    if (!std::isfinite(lg.loss) || lg.loss > 10.0 * out.loss_trace.front())
      throw TrainingDiverged("training diverged at step " + std::to_string(step), out.loss_trace);

    const double lr = config.learning_rate;
    if (config.optimizer == DpoConfig::Optimizer::sgd) {
      for (int i = 0; i < kParams; ++i) out.model.params[i] -= lr * lg.gradient[i];
    } else {
      const double c1 = 1.0 - std::pow(b1, step + 1), c2 = 1.0 - std::pow(b2, step + 1);
      for (int i = 0; i < kParams; ++i) {
        m1[i] = b1 * m1[i] + (1 - b1) * lg.gradient[i];
        m2[i] = b2 * m2[i] + (1 - b2) * lg.gradient[i] * lg.gradient[i];
        out.model.params[i] -= lr * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + eps);
      }
    }
    ++out.model.steps;
  }
  return out;
}

namespace {

template <class F>
void for_each_trial(const std::vector<PreferencePair>& pairs, const DpoConfig& config, int repeats, F&& f) {
  if (pairs.empty()) throw ContractError("evaluation needs at least one pair");
  if (repeats < 1) throw ContractError("evaluation needs at least one repeat");
  const std::uint64_t seed = StreamKey(config.seed).child("eval").value();
  for (int r = 0; r < repeats; ++r)
    for (std::size_t i = 0; i < pairs.size(); ++i)
      f(pairs[i], draw_noise(seed, static_cast<std::uint64_t>(r) * pairs.size() + i, config.timesteps));
}

}  // namespace

double eval_preference_accuracy(const DenoiserModel& model, const std::vector<PreferencePair>& pairs,
                                const DpoConfig& config, int repeats) {
  const Schedule s = make_schedule(config.timesteps);
  std::size_t wins = 0, trials = 0;
  for_each_trial(pairs, config, repeats, [&](const PreferencePair& p, const NoiseDraw& d) {
    wins += per_sample_loss(model, p.preferred, p.prompt, d, s) < per_sample_loss(model, p.dispreferred, p.prompt, d, s);
    ++trials;
  });
  return static_cast<double>(wins) / static_cast<double>(trials);
}

double preference_margin(const DenoiserModel& model, const std::vector<PreferencePair>& pairs,
                         const DpoConfig& config, int repeats) {
  const Schedule s = make_schedule(config.timesteps);
  double sum = 0.0;
  std::size_t trials = 0;
  for_each_trial(pairs, config, repeats, [&](const PreferencePair& p, const NoiseDraw& d) {
    sum += per_sample_loss(model, p.dispreferred, p.prompt, d, s) - per_sample_loss(model, p.preferred, p.prompt, d, s);
    ++trials;
  });
  return sum / static_cast<double>(trials);
}

std::string checkpoint_text(const DenoiserModel& model) {
  std::ostringstream out;
  out << "HSI-DENOISER v1\n";
  out << "input " << kInput << " hidden " << kHidden << " output " << kSignal << " params " << kParams << " seed "
      << model.seed << " steps " << model.steps << '\n';
  char buf[40];
  for (double p : model.params) {
    std::snprintf(buf, sizeof buf, "%.17g\n", p);
    out << buf;
  }
  return out.str();
}

DenoiserModel parse_checkpoint(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "HSI-DENOISER v1") throw ParseError("not an HSI-DENOISER v1 checkpoint");
  std::string k1, k2, k3, k4, k5, k6;
  int input = 0, hidden = 0, output = 0, params = 0;
  DenoiserModel m;
  if (!std::getline(in, line)) throw ParseError("checkpoint header line missing");
  std::istringstream header(line);
  if (!(header >> k1 >> input >> k2 >> hidden >> k3 >> output >> k4 >> params >> k5 >> m.seed >> k6 >> m.steps) ||
      k1 != "input" || k2 != "hidden" || k3 != "output" || k4 != "params" || k5 != "seed" || k6 != "steps")
    throw ParseError("malformed checkpoint header");
  if (input != kInput || hidden != kHidden || output != kSignal || params != kParams)
    throw ParseError("checkpoint widths do not match this model");
  for (int i = 0; i < kParams; ++i) {
    if (!std::getline(in, line)) throw ParseError("checkpoint truncated at parameter " + std::to_string(i));
    try {
      std::size_t used = 0;
      m.params[static_cast<std::size_t>(i)] = std::stod(line, &used);
      if (used != line.size()) throw ParseError("trailing characters");
    } catch (const std::exception&) {
      throw ParseError("bad parameter on line " + std::to_string(i + 3));
    }
    if (!std::isfinite(m.params[static_cast<std::size_t>(i)])) throw ParseError("non-finite parameter");
  }
  return m;
}

void save_checkpoint(const DenoiserModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ResourceError("cannot write " + path.string());
  out << checkpoint_text(model);
}

DenoiserModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ResourceError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

std::string loss_trace_csv(const std::vector<double>& trace) {
  std::ostringstream out;
  out << "step,loss\n";
  char buf[40];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12g", trace[i]);
    out << i << ',' << buf << '\n';
  }
  return out.str();
}

}  // namespace hsi::dpo
