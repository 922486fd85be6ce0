#pragma once

#include <optional>

#include "cps/plant.hpp"

namespace cps {

// How the delay-dependent denominator of the self-triggered rule is grouped.
//   kGrouped: (|A x_k + B K x_{k-1}| + |d_k|)(exp(|A| D) - 1) + |(A+BK) x_k| + |d_k|
//   kLiteral: |A x_k - B K x_{k-1}| + |d_k| (exp(|A| D) - 1) |(A+BK) x_k| + |d_k|
// kGrouped is the bound obtained by integrating the error dynamics across the
// delay and the following hold interval; kLiteral is kept for comparison.
enum class UpsilonForm { kGrouped, kLiteral };

struct DisturbanceEstimate {
  Vec d_hat;
  bool clipped = false;
};

struct SampleRecord {
  double t = 0.0;
  Vec x;
  Vec d_hat;
};

// Last two accepted samples of one plant; `current` is sample k.
struct SamplerHistory {
  std::optional<SampleRecord> previous;
  std::optional<SampleRecord> current;

  void push(SampleRecord rec) {
    previous = std::move(current);
    current = std::move(rec);
  }
};

struct SamplerParams {
  double h_max = 1.0;
  double h_min = 1e-3;
  double delta_max = 1.0;  // maximum tolerated end-to-end delay, seconds
  UpsilonForm form = UpsilonForm::kGrouped;
};

struct SamplingDecision {
  int plant_id = 0;
  double t_current = 0.0;
  double t_next = 0.0;
  double gamma_value = 0.0;
  double phi_value = 0.0;
  double upsilon_value = 0.0;
  bool capped_by_hmax = false;
  bool bootstrap = false;
  double h_max = 0.0;
  double delta_total_prev = 0.0;
  double delta_max = 0.0;
};

double spectral_norm(const Mat& M);

/// Midpoint finite-difference residual of the nominal dynamics, clipped to
/// the model's disturbance bound.
DisturbanceEstimate estimate_disturbance(const PlantModel& model, const Vec& x_prev,
                                         const Vec& x_now, const Vec& u_held, double dt);

double phi(const PlantModel& model, const Vec& x_k, const Vec& d_hat_k);

double upsilon(const PlantModel& model, const Vec& x_km1, const Vec& x_k, const Vec& d_hat_km1,
               const Vec& d_hat_k, double delta_total, UpsilonForm form = UpsilonForm::kGrouped);

/// Self-triggered inter-sample budget. May be negative; +inf when the
/// denominator vanishes.
double gamma(const PlantModel& model, const Vec& x_km1, const Vec& x_k, const Vec& d_hat_km1,
             const Vec& d_hat_k, double delta_total, double delta_max,
             UpsilonForm form = UpsilonForm::kGrouped);

SamplingDecision next_sampling_instant(const PlantModel& model, int plant_id,
                                       const SamplerHistory& history, double delta_total,
                                       const SamplerParams& params);

}  // namespace cps
