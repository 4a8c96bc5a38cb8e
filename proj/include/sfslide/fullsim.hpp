#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfslide/systemdef.hpp"

namespace sfslide {

enum class Mode { Plus, Minus, Slide };

std::string to_string(Mode m);

struct SimOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double slide_tol = 1e-9;
  double event_tol = 1e-11;       // |h| accepted at a localized event (zoomed units)
  std::size_t max_events = 1'000'000;
  std::size_t max_steps = 50'000'000;
  Side escape_side = Side::Plus;  // used when both fields leave the surface
  double max_dtau = 0.0;          // 0: unlimited
  bool record_samples = true;
  std::size_t sample_stride = 1;  // keep every k-th accepted step

  // Integration frame: state = center + scale * z. An empty center means the
  // start point; scale <= 0 means spec.eps.
  Vec center_x, center_y;
  double scale = 0.0;
};

struct SimSample {
  double tau = 0.0;
  Vec x, y;
  double h = 0.0;
  double alpha = -1.0;  // Filippov weight of F_minus when sliding
};

struct SimSegment {
  Mode mode = Mode::Plus;
  double tau0 = 0.0;
  double tau1 = 0.0;
  std::vector<SimSample> samples;
};

struct SimEvent {
  enum class Kind { Start, Switch, SlideEntry, SlideExit };
  Kind kind = Kind::Switch;
  double tau = 0.0;
  Mode from = Mode::Plus;
  Mode to = Mode::Plus;
  Vec x, y;
  double residual = 0.0;  // |h| in original units
};

std::string to_string(SimEvent::Kind k);

struct SimTrajectory {
  double eps = 0.0;
  std::vector<SimSegment> segments;
  std::vector<SimEvent> events;
  Vec x_end, y_end;
  double tau_end = 0.0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  double max_error_estimate = 0.0;  // largest accepted local error norm, original units

  std::size_t switch_count() const;
};

/// Integrates x' = f_pm, eps y' = g in fast time tau = t / eps up to t_end
/// (original time), with Filippov sliding when both fields point at h = 0.
/// Throws StepUnderflow or EventLoop.
SimTrajectory integrate_full(const FullSystemSpec& spec, const Vec& x0, const Vec& y0, double t_end,
                             const SimOptions& opts = {});

/// Mode chosen at a point: the side of h, or the Filippov rule on the surface.
Mode select_mode(const FullSystemSpec& spec, const Vec& x, const Vec& y, double h_tol, Side escape_side);

struct Theorem1Row {
  double eps = 0.0;
  double r_norm = 0.0;
  double r_x_norm = 0.0;
  double r_y_norm = 0.0;
  double max_r_norm = 0.0;   // sup over the sampled path
  std::size_t events = 0;
};

/// For each eps: start at (x0 + eps dx, y_c(x0) + eps dy), integrate to eps t_scaled and
/// report r = [(x, y)(eps t) - (x, y)(0) - eps t (f_rd_s, -G f_rd_s)] / eps.
std::vector<Theorem1Row> verify_theorem1(const FullSystemSpec& spec, const Vec& x0, const Vec& delta_x,
                                         const Vec& delta_y, const std::vector<double>& eps_list, double t_scaled,
                                         const SimOptions& opts = {});

struct TruncatedComparison {
  double eps = 0.0;
  double max_gap = 0.0;
  double max_gap_x = 0.0;
  double max_gap_y = 0.0;
  std::size_t samples = 0;
  std::size_t events = 0;
};

/// Gap in normal-form coordinates between the full system at eps and the exact
/// truncated trajectory over scaled time [0, t_scaled]. The default start is the
/// point of H0 with y = y_sl_plus.
TruncatedComparison compare_truncated(const FullSystemSpec& spec, const Vec& x0, double eps, double t_scaled,
                                      const std::optional<Vec>& start_y = std::nullopt, const SimOptions& opts = {});

}  // namespace sfslide
