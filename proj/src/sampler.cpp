#include "cps/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cps/errors.hpp"

namespace cps {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_state(const PlantModel& model, const Vec& v, const char* what) {
  if (v.size() != model.A.rows()) {
    throw DimensionMismatch(std::string("sampler: ") + what + " has wrong dimension");
  }
}

}  // namespace

double spectral_norm(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(0);
}

DisturbanceEstimate estimate_disturbance(const PlantModel& model, const Vec& x_prev,
                                         const Vec& x_now, const Vec& u_held, double dt) {
  if (!(dt > 0.0)) throw SchemaError("estimate_disturbance: dt must be positive");
  require_state(model, x_prev, "x_prev");
  require_state(model, x_now, "x_now");
  if (u_held.size() != model.B.cols()) throw DimensionMismatch("estimate_disturbance: bad input size");

  const Vec x_mid = 0.5 * (x_prev + x_now);
  DisturbanceEstimate est;
  est.d_hat = (x_now - x_prev) / dt - model.A * x_mid - model.B * u_held;
  const double norm = est.d_hat.norm();
  if (norm > model.d_bound) {
    est.d_hat *= (norm > 0.0 ? model.d_bound / norm : 0.0);
    est.clipped = true;
  }
  return est;
}

double phi(const PlantModel& model, const Vec& x_k, const Vec& d_hat_k) {
  require_state(model, x_k, "x_k");
  require_state(model, d_hat_k, "d_hat_k");
  return spectral_norm(model.A) * model.delta + (model.closed_loop() * x_k).norm() + d_hat_k.norm();
}

double upsilon(const PlantModel& model, const Vec& x_km1, const Vec& x_k, const Vec& d_hat_km1,
               const Vec& d_hat_k, double delta_total, UpsilonForm form) {
  require_state(model, x_km1, "x_km1");
  require_state(model, x_k, "x_k");
  require_state(model, d_hat_km1, "d_hat_km1");
  require_state(model, d_hat_k, "d_hat_k");
  if (!(delta_total >= 0.0)) throw SchemaError("upsilon: delta_total must be >= 0");

  const double a_norm = spectral_norm(model.A);
  const double growth = std::expm1(a_norm * delta_total);
  const double d_norm = d_hat_k.norm();
  const double drift = (model.closed_loop() * x_k).norm();
  const Vec bk_prev = model.B * (model.K * x_km1);

  switch (form) {
    case UpsilonForm::kLiteral:
      return (model.A * x_k - bk_prev).norm() + d_norm * growth * drift + d_norm;
    case UpsilonForm::kGrouped:
    default:
      return ((model.A * x_k + bk_prev).norm() + d_norm) * growth + drift + d_norm;
  }
}

double gamma(const PlantModel& model, const Vec& x_km1, const Vec& x_k, const Vec& d_hat_km1,
             const Vec& d_hat_k, double delta_total, double delta_max, UpsilonForm form) {
  const double num = phi(model, x_k, d_hat_k);
  const double den = upsilon(model, x_km1, x_k, d_hat_km1, d_hat_k, delta_total, form);
  if (den <= 0.0) return kInf;
  const double a_norm = spectral_norm(model.A);
  const double offset = delta_total - delta_max;
  if (a_norm > 0.0) return std::log(num / den) / a_norm + offset;

  // |A| = 0: (1/a) ln(phi/upsilon) diverges unless phi == upsilon, where the
  // first-order expansion gives the linear-growth time instead.
  if (num > den) return kInf;
  if (num < den) return -kInf;
  const double slope = (model.closed_loop() * x_k).norm() + d_hat_k.norm();
  if (slope <= 0.0) return kInf;
  const double lost = ((model.B * (model.K * x_km1)).norm() + d_hat_k.norm()) * delta_total;
  return (model.delta - lost) / slope + offset;
}

SamplingDecision next_sampling_instant(const PlantModel& model, int plant_id,
                                       const SamplerHistory& history, double delta_total,
                                       const SamplerParams& params) {
  if (!history.current) throw SchemaError("next_sampling_instant: no sample in history");
  if (!(params.h_min > 0.0) || !(params.h_max >= params.h_min)) {
    throw SchemaError("next_sampling_instant: require 0 < h_min <= h_max");
  }
  if (delta_total > params.delta_max * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "plant " << plant_id << ": realized total delay " << delta_total
        << " s exceeds the tolerated maximum " << params.delta_max << " s";
    throw DelayBudgetExceeded(msg.str());
  }

  SamplingDecision out;
  out.plant_id = plant_id;
  out.t_current = history.current->t;
  out.h_max = params.h_max;
  out.delta_total_prev = delta_total;
  out.delta_max = params.delta_max;

  if (!history.previous) {
    out.bootstrap = true;
    out.gamma_value = params.h_min;
    out.t_next = out.t_current + params.h_min;
    return out;
  }

  const auto& prev = *history.previous;
  const auto& cur = *history.current;
  out.phi_value = phi(model, cur.x, cur.d_hat);
  out.upsilon_value = upsilon(model, prev.x, cur.x, prev.d_hat, cur.d_hat, delta_total, params.form);
  out.gamma_value = gamma(model, prev.x, cur.x, prev.d_hat, cur.d_hat, delta_total,
                          params.delta_max, params.form);
  out.capped_by_hmax = out.gamma_value >= params.h_max;
  const double step = std::clamp(std::min(out.gamma_value, params.h_max), params.h_min, params.h_max);
  out.t_next = out.t_current + step;
  return out;
}

}  // namespace cps
