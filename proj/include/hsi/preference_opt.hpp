#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hsi/error.hpp"

namespace hsi::dpo {

inline constexpr int kLength = 32;               // trajectory points
inline constexpr int kSignal = 2 * kLength;      // flattened (displacement, height) pairs
inline constexpr int kTimeFeatures = 8;
inline constexpr int kPrompts = 4;
inline constexpr int kInput = kSignal + kTimeFeatures + kPrompts;
inline constexpr int kHidden = 64;
inline constexpr int kParams = kHidden * kInput + kHidden + kSignal * kHidden + kSignal;  // 9088
inline constexpr double kDataScale = 10.0;  // trajectories are noised in decimeters

// Per-frame horizontal foot displacement and foot height, meters.
struct TrajectorySample {
  std::array<double, kSignal> values{};  // [2k] displacement, [2k+1] height
  int prompt = 0;
};

struct PreferencePair {
  TrajectorySample preferred;
  TrajectorySample dispreferred;
  int prompt = 0;
};

// Linear beta schedule and its cumulative products.
struct Schedule {
  std::vector<double> alpha_bar;  // index t - 1 for t in [1, T]
  int steps() const { return static_cast<int>(alpha_bar.size()); }
};
Schedule make_schedule(int steps = 50, double beta_start = 1e-4, double beta_end = 0.02);

// Timestep and Gaussian noise shared by both halves of a pair.
struct NoiseDraw {
  int t = 1;
  std::array<double, kSignal> eps{};
};
NoiseDraw draw_noise(std::uint64_t seed, std::uint64_t index, int steps);

// Two-layer perceptron: tanh(W1 x + b1) then W2 h + b2. Parameter layout is
// W1 (row-major, kHidden x kInput), b1, W2 (kSignal x kHidden), b2.
struct DenoiserModel {
  std::vector<double> params = std::vector<double>(kParams, 0.0);
  std::uint64_t seed = 0;
  std::int64_t steps = 0;

  // Glorot-style hidden layer; the output layer is scaled by output_scale.
  static DenoiserModel random(std::uint64_t seed, double output_scale = 0.01);
  std::array<double, kSignal> predict(const std::array<double, kSignal>& noisy, int t, int steps, int prompt) const;
};

struct DpoConfig {
  double beta = 5000.0;
  double learning_rate = 1e-5;
  int steps = 2000;
  int batch = 32;
  int timesteps = 50;
  std::uint64_t seed = 0;
  bool reference_relative = false;  // subtract a frozen reference model's losses
  enum class Optimizer { adam, sgd } optimizer = Optimizer::adam;

  static DpoConfig large_scale() { return {}; }
  static DpoConfig toy() {
    DpoConfig c;
    c.beta = 2.0;
    c.learning_rate = 1e-3;
    return c;
  }
};

void validate(const DpoConfig& config);

double per_sample_loss(const DenoiserModel& model, const TrajectorySample& x, int prompt, const NoiseDraw& draw,
                       const Schedule& schedule);

// -log sigmoid(-(beta / 2) * (lw - ll)), evaluated stably.
double dpo_objective(double lw, double ll, double beta);

double dpo_loss(const DenoiserModel& model, const PreferencePair& pair, double beta, const NoiseDraw& draw,
                const Schedule& schedule, const DenoiserModel* reference = nullptr);

// Mean loss and analytic gradient over the batch; draws[i] pairs with batch[i].
struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};
LossAndGradient gradient(const DenoiserModel& model, const std::vector<PreferencePair>& batch,
                         const std::vector<NoiseDraw>& draws, double beta, const Schedule& schedule,
                         const DenoiserModel* reference = nullptr);

// Mean horizontal displacement over frames whose height is below threshold.
double slide_score(const TrajectorySample& x, double contact_height = 0.05);
inline constexpr double kMinScoreGap = 0.01;  // m per contact frame
std::vector<PreferencePair> synth_pairs(int n, std::uint64_t seed);

class TrainingDiverged : public NumericalError {
 public:
  TrainingDiverged(const std::string& what, std::vector<double> trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

struct TrainResult {
  DenoiserModel model;
  std::vector<double> loss_trace;
};
TrainResult train(const DenoiserModel& model, const std::vector<PreferencePair>& pairs, const DpoConfig& config);

// Fraction of (pair, draw) trials with L(x_w) < L(x_l), over `repeats` draws.
double eval_preference_accuracy(const DenoiserModel& model, const std::vector<PreferencePair>& pairs,
                                const DpoConfig& config, int repeats = 16);
// Mean of L(x_l) - L(x_w) over the same trials.
double preference_margin(const DenoiserModel& model, const std::vector<PreferencePair>& pairs,
                         const DpoConfig& config, int repeats = 16);

std::string checkpoint_text(const DenoiserModel& model);
DenoiserModel parse_checkpoint(const std::string& text);
void save_checkpoint(const DenoiserModel& model, const std::filesystem::path& path);
DenoiserModel load_checkpoint(const std::filesystem::path& path);
std::string loss_trace_csv(const std::vector<double>& trace);

}  // namespace hsi::dpo
