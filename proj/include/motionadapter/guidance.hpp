#pragma once

// Guidance objective ||M_tgt - M_final||^2 and its exact gradient with
// respect to attention logits. The logits stand in for the latent being
// optimized: softmax(logits) is the attention, soft extraction turns it into
// pairwise motions, and chaining aligns those to frame 0.

#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "motionadapter/attnmotion.hpp"
#include "motionadapter/chaining.hpp"
#include "motionadapter/error.hpp"
#include "motionadapter/grid.hpp"
#include "motionadapter/matrix.hpp"

namespace motionadapter {

struct GuidanceParams {
  Matrix logits;  // (f*h*w) x (f*h*w) pre-softmax scores
};

struct GuidanceSchedule {
  std::size_t total_steps = 50;
  double guidance_fraction = 0.2;
  std::size_t optimize_steps_per_guidance = 1;
  double step_size = 1.0;
};

struct LossAndGrad {
  double loss = 0.0;
  Matrix gradient;
};

struct OptimizeResult {
  GuidanceParams params;
  std::vector<double> trace;  // loss before each update
  double final_loss = 0.0;    // loss after the last update
};

/// Thrown when the loss stops being finite; carries the trace so far.
class NumericFailure : public Error {
 public:
  NumericFailure(const std::string& what, std::vector<double> trace)
      : Error(ErrorKind::Numeric, what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

/// Mean over all f*h*w*2 components of the squared difference.
inline double guidance_loss(const MotionSequence& m_tgt, const MotionSequence& m_final) {
  require_same_shape(m_tgt, m_final, "guidance_loss");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < m_tgt.size(); ++i) {
    for (std::size_t p = 0; p < m_tgt[i].pixels(); ++p) {
      const Vec2 d = m_tgt[i][p] - m_final[i][p];
      sum += d.u * d.u + d.v * d.v;
      n += 2;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

/// ceil(fraction * T)
inline std::size_t guidance_step_count(std::size_t total_steps, double fraction) {
  if (total_steps < 1) throw Error(ErrorKind::InvalidArgument, "total_steps must be >= 1");
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error(ErrorKind::InvalidArgument, "fraction must be in [0, 1]");
  // Round away representation noise first so that e.g. 0.2 * 50 is exactly 10.
  const double raw = fraction * static_cast<double>(total_steps);
  const double snapped = std::round(raw);
  const double value = std::abs(raw - snapped) < 1e-9 ? snapped : std::ceil(raw);
  return static_cast<std::size_t>(value);
}

/// Row-wise softmax.
inline Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto in = logits.row(r);
    auto dst = out.row(r);
    double hi = in[0];
    for (double x : in) hi = std::max(hi, x);
    double sum = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      dst[c] = std::exp(in[c] - hi);
      sum += dst[c];
    }
    for (double& x : dst) x /= sum;
  }
  return out;
}

namespace detail {

struct GuidanceForward {
  Matrix attention;
  PairMotions pairs;  // only (j, i) with j < i
  MotionSequence aligned;
};

inline void check_guidance_inputs(const GuidanceParams& params, const GridShape& shape, const MotionSequence& m_final,
                                  const ExtractionConfig& cfg) {
  if (cfg.mode != ExtractionMode::Soft)
    throw Error(ErrorKind::InvalidArgument, "guidance needs soft extraction (hard top-K has no gradient)");
  if (params.logits.rows() != shape.tokens() || params.logits.cols() != shape.tokens())
    throw Error(ErrorKind::ShapeMismatch, "logits side does not equal f*h*w");
  if (m_final.size() != shape.frames || m_final.height() != shape.height || m_final.width() != shape.width)
    throw Error(ErrorKind::ShapeMismatch, "target motion sequence does not match grid shape");
  for (double x : params.logits.data())
    if (!std::isfinite(x)) throw Error(ErrorKind::NonFinite, "logits contain a non-finite value");
}

inline GuidanceForward guidance_forward(const GuidanceParams& params, const GridShape& shape,
                                        const ExtractionConfig& cfg, ChainMode mode) {
  GuidanceForward fw;
  fw.attention = softmax_rows(params.logits);
  for (std::size_t i = 1; i < shape.frames; ++i)
    for (std::size_t j = 0; j < i; ++j)
      fw.pairs.emplace(PairKey{j, i}, extract_motion(slice_pair(fw.attention, shape, j, i), cfg));
  fw.aligned = align_to_first(fw.pairs, shape, mode);
  return fw;
}

}  // namespace detail

/// Loss of the soft-extracted, aligned motion of `params` against m_final.
inline double guidance_objective(const GuidanceParams& params, const GridShape& shape, const MotionSequence& m_final,
                                 const ExtractionConfig& cfg, ChainMode mode = ChainMode::MeanOverPaths) {
  detail::check_guidance_inputs(params, shape, m_final, cfg);
  return guidance_loss(detail::guidance_forward(params, shape, cfg, mode).aligned, m_final);
}

/// Loss and its gradient with respect to the logits, by reverse-mode chain
/// rule through softmax, soft extraction, bilinear splicing and the loss.
inline LossAndGrad loss_and_grad(const GuidanceParams& params, const GridShape& shape, const MotionSequence& m_final,
                                 const ExtractionConfig& cfg, ChainMode mode = ChainMode::MeanOverPaths) {
  detail::check_guidance_inputs(params, shape, m_final, cfg);
  const auto fw = detail::guidance_forward(params, shape, cfg, mode);
  const std::size_t f = shape.frames, h = shape.height, w = shape.width, hw = shape.pixels();

  LossAndGrad out;
  out.loss = guidance_loss(fw.aligned, m_final);
  const double n_components = static_cast<double>(f * hw * 2);

  // d loss / d aligned
  MotionSequence g_seq(f, h, w);
  for (std::size_t i = 0; i < f; ++i)
    for (std::size_t p = 0; p < hw; ++p) g_seq[i][p] = (2.0 / n_components) * (fw.aligned[i][p] - m_final[i][p]);

  // Back through chaining, latest frame first so g_seq[j] is complete before use.
  PairMotions g_pairs;
  for (const auto& [key, field] : fw.pairs) g_pairs.emplace(key, MotionField(h, w, key.first, key.second));
  for (std::size_t i = f; i-- > 1;) {
    const double scale = chain_scale(mode, i, f);
    for (std::size_t j = 0; j < i; ++j) {
      const MotionField& base = fw.aligned[j];
      const MotionField& step = fw.pairs.at({j, i});
      MotionField& g_step = g_pairs.at({j, i});
      for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
          const std::size_t p = r * w + c;
          const Vec2 g = scale * g_seq[i][p];
          const Vec2 b = base[p];
          const auto su = detail::axis_sample(static_cast<double>(c) + b.u, w);
          const auto sv = detail::axis_sample(static_cast<double>(r) + b.v, h);
          const Vec2 v00 = step.at(sv.lo, su.lo), v01 = step.at(sv.lo, su.hi);
          const Vec2 v10 = step.at(sv.hi, su.lo), v11 = step.at(sv.hi, su.hi);

          g_step.at(sv.lo, su.lo) += ((1.0 - su.t) * (1.0 - sv.t)) * g;
          g_step.at(sv.lo, su.hi) += (su.t * (1.0 - sv.t)) * g;
          g_step.at(sv.hi, su.lo) += ((1.0 - su.t) * sv.t) * g;
          g_step.at(sv.hi, su.hi) += (su.t * sv.t) * g;

          // Identity path of base plus the Jacobian of the sample position.
          Vec2 g_base = g;
          if (su.inside) {
            const Vec2 d_du = (1.0 - sv.t) * (v01 - v00) + sv.t * (v11 - v10);
            g_base.u += g.u * d_du.u + g.v * d_du.v;
          }
          if (sv.inside) {
            const Vec2 d_dv = (1.0 - su.t) * (v10 - v00) + su.t * (v11 - v01);
            g_base.v += g.u * d_dv.u + g.v * d_dv.v;
          }
          if (j > 0) g_seq[j][p] += g_base;
        }
      }
    }
  }

  // Back through soft extraction into the attention, then through softmax.
  Matrix g_attn(shape.tokens(), shape.tokens());
  for (const auto& [key, g_field] : g_pairs) {
    const auto [src, dst] = key;
    const MotionField& motion = fw.pairs.at(key);
    for (std::size_t p = 0; p < hw; ++p) {
      const auto row = fw.attention.row(src * hw + p).subspan(dst * hw, hw);
      double mass = 0.0;
      for (double a : row) mass += a;
      const Vec2 dest = motion[p] + Vec2{static_cast<double>(p % w), static_cast<double>(p / w)};
      const Vec2 g = g_field[p];
      auto g_row = g_attn.row(src * hw + p).subspan(dst * hw, hw);
      for (std::size_t q = 0; q < hw; ++q) {
        const double du = static_cast<double>(q % w) - dest.u;
        const double dv = static_cast<double>(q / w) - dest.v;
        g_row[q] += (g.u * du + g.v * dv) / mass;
      }
    }
  }
  out.gradient = Matrix(shape.tokens(), shape.tokens());
  for (std::size_t r = 0; r < shape.tokens(); ++r) {
    const auto a = fw.attention.row(r);
    const auto ga = g_attn.row(r);
    double inner = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) inner += a[k] * ga[k];
    auto gl = out.gradient.row(r);
    for (std::size_t k = 0; k < a.size(); ++k) gl[k] = a[k] * (ga[k] - inner);
  }
  return out;
}

/// Central differences (f(x + eps e_k) - f(x - eps e_k)) / 2 eps of a scalar
/// function of a matrix.
template <typename Objective>
Matrix central_difference(Objective&& objective, const Matrix& x, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t k = 0; k < x.data().size(); ++k) {
    const double saved = probe.data()[k];
    probe.data()[k] = saved + epsilon;
    const double up = objective(probe);
    probe.data()[k] = saved - epsilon;
    const double down = objective(probe);
    probe.data()[k] = saved;
    grad.data()[k] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

/// Finite-difference estimate of the guidance gradient (test oracle).
inline Matrix fd_gradient(const GuidanceParams& params, const GridShape& shape, const MotionSequence& m_final,
                          const ExtractionConfig& cfg, double epsilon, ChainMode mode = ChainMode::MeanOverPaths) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  return central_difference(
      [&](const Matrix& logits) { return guidance_objective(GuidanceParams{logits}, shape, m_final, cfg, mode); },
      params.logits, epsilon);
}

/// Plain gradient descent for ceil(fraction * T) guidance steps, each with
/// optimize_steps_per_guidance updates.
inline OptimizeResult optimize(const GuidanceParams& params0, const GridShape& shape, const MotionSequence& m_final,
                               const GuidanceSchedule& schedule, const ExtractionConfig& cfg,
                               ChainMode mode = ChainMode::MeanOverPaths) {
  if (!(schedule.step_size > 0.0) || !std::isfinite(schedule.step_size))
    throw Error(ErrorKind::InvalidArgument, "step_size must be positive");
  const std::size_t steps =
      guidance_step_count(schedule.total_steps, schedule.guidance_fraction) * schedule.optimize_steps_per_guidance;
  OptimizeResult result{params0, {}, 0.0};
  result.trace.reserve(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    auto lg = loss_and_grad(result.params, shape, m_final, cfg, mode);
    if (!std::isfinite(lg.loss))
      throw NumericFailure("loss became non-finite at step " + std::to_string(s), result.trace);
    result.trace.push_back(lg.loss);
    auto& x = result.params.logits.data();
    for (std::size_t k = 0; k < x.size(); ++k) x[k] -= schedule.step_size * lg.gradient.data()[k];
  }
  result.final_loss = guidance_objective(result.params, shape, m_final, cfg, mode);
  if (!std::isfinite(result.final_loss)) throw NumericFailure("final loss is non-finite", result.trace);
  return result;
}

/// CSV `step,loss`.
inline void write_trace_csv(std::ostream& os, const std::vector<double>& trace) {
  os << "step,loss\n";
  const auto old_precision = os.precision(17);
  for (std::size_t s = 0; s < trace.size(); ++s) os << s << ',' << trace[s] << '\n';
  os.precision(old_precision);
}

}  // namespace motionadapter
