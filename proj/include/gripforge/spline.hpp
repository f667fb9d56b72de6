#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <optional>
#include <vector>

#include "gripforge/errors.hpp"
#include "gripforge/geometry.hpp"
#include "gripforge/synergy.hpp"

namespace gripforge {

/// Vector-valued cubic interpolation spline on strictly increasing knots.
/// Boundary condition is a prescribed second derivative at each end
/// (zero by default, i.e. a natural spline).
class CubicSpline {
 public:
  CubicSpline(std::vector<double> knots, MatX values,
              VecX d2_start = VecX(), VecX d2_end = VecX())
      : x_(std::move(knots)), y_(std::move(values)) {
    const int k = static_cast<int>(x_.size());
    if (k < 1 || y_.rows() != k) {
      throw InvalidDimensions("CubicSpline: knot/value count mismatch");
    }
    for (int i = 0; i + 1 < k; ++i) {
      if (!(x_[i] < x_[i + 1])) {
        throw InvalidDimensions("CubicSpline: knots must strictly increase");
      }
    }
    const int d = static_cast<int>(y_.cols());
    if (d2_start.size() == 0) d2_start = VecX::Zero(d);
    if (d2_end.size() == 0) d2_end = VecX::Zero(d);
    m_ = MatX::Zero(k, d);
    if (k >= 2) {
      m_.row(0) = d2_start.transpose();
      m_.row(k - 1) = d2_end.transpose();
    }
    if (k >= 3) solve_second_derivatives();
  }

  double first() const { return x_.front(); }
  double last() const { return x_.back(); }
  int channels() const { return static_cast<int>(y_.cols()); }

  VecX evaluate(double x) const {
    const int k = static_cast<int>(x_.size());
    if (x < x_.front() - 1e-9 || x > x_.back() + 1e-9) {
      throw OutOfRange("CubicSpline: query outside knot range");
    }
    if (k == 1) return y_.row(0).transpose();
    int i = span_index(x);
    double h = x_[i + 1] - x_[i];
    double a = (x_[i + 1] - x) / h;
    double b = (x - x_[i]) / h;
    VecX yi = y_.row(i).transpose();
    VecX yj = y_.row(i + 1).transpose();
    VecX mi = m_.row(i).transpose();
    VecX mj = m_.row(i + 1).transpose();
    return a * yi + b * yj +
           ((a * a * a - a) * mi + (b * b * b - b) * mj) * (h * h / 6.0);
  }

 private:
  int span_index(double x) const {
    int k = static_cast<int>(x_.size());
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    int i = static_cast<int>(it - x_.begin()) - 1;
    return std::clamp(i, 0, k - 2);
  }

  // Tridiagonal (Thomas) solve for interior second derivatives, all
  // channels at once; the end rows are already fixed by the BCs.
  void solve_second_derivatives() {
    const int k = static_cast<int>(x_.size());
    const int n = k - 2;
    const int d = static_cast<int>(y_.cols());
    std::vector<double> h(k - 1);
    for (int i = 0; i < k - 1; ++i) h[i] = x_[i + 1] - x_[i];

    std::vector<double> diag(n), sub(n), sup(n);
    MatX rhs(n, d);
    for (int i = 1; i <= n; ++i) {
      sub[i - 1] = h[i - 1] / 6.0;
      diag[i - 1] = (h[i - 1] + h[i]) / 3.0;
      sup[i - 1] = h[i] / 6.0;
      rhs.row(i - 1) = (y_.row(i + 1) - y_.row(i)) / h[i] -
                       (y_.row(i) - y_.row(i - 1)) / h[i - 1];
    }
    rhs.row(0) -= sub[0] * m_.row(0);
    rhs.row(n - 1) -= sup[n - 1] * m_.row(k - 1);

    for (int i = 1; i < n; ++i) {
      double w = sub[i] / diag[i - 1];
      diag[i] -= w * sup[i - 1];
      rhs.row(i) -= w * rhs.row(i - 1);
    }
    m_.row(n) = rhs.row(n - 1) / diag[n - 1];
    for (int i = n - 1; i >= 1; --i) {
      m_.row(i) = (rhs.row(i - 1) - sup[i - 1] * m_.row(i + 1)) / diag[i - 1];
    }
  }

  std::vector<double> x_;
  MatX y_;
  MatX m_;  // second derivatives at knots
};

/// Sparse hand controls at regular frame intervals; dense controls are
/// spline-interpolated from these.
struct KeyframeTrack {
  std::vector<int> frames;            // strictly increasing
  std::vector<HandControl> controls;  // one per frame entry
  int keyframe_interval = 5;

  int size() const { return static_cast<int>(frames.size()); }

  void validate() const {
    if (frames.size() != controls.size() || frames.empty()) {
      throw InvalidDimensions("KeyframeTrack: frame/control count mismatch");
    }
    for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
      if (frames[i] >= frames[i + 1]) {
        throw InvalidDimensions("KeyframeTrack: frames must strictly increase");
      }
    }
    for (const auto& c : controls) {
      if (c.coeffs.size() != controls.front().coeffs.size()) {
        throw DimensionMismatch("KeyframeTrack: mixed coefficient dimensions");
      }
    }
  }
};

/// Keeps frames 0, interval, 2*interval, ... and always the final frame.
inline KeyframeTrack resample_from_dense(const std::vector<HandControl>& dense,
                                         int interval) {
  if (dense.empty()) throw EmptySequence("resample_from_dense: no controls");
  if (interval < 1) throw OutOfRange("resample_from_dense: interval >= 1");
  KeyframeTrack track;
  track.keyframe_interval = interval;
  const int n = static_cast<int>(dense.size());
  for (int f = 0; f < n; f += interval) {
    track.frames.push_back(f);
    track.controls.push_back(dense[f]);
  }
  if (track.frames.back() != n - 1) {
    track.frames.push_back(n - 1);
    track.controls.push_back(dense[n - 1]);
  }
  return track;
}

/// Spline over a keyframe track: synergy coefficients and wrist translation
/// componentwise, wrist rotation in a rotation-vector chart anchored at one
/// keyframe's rotation. The anchor is the first keyframe unless some keyframe
/// falls outside 90% of pi from it, in which case the anchor re-seats on the
/// first keyframe that covers all of them.
class TrackSpline {
 public:
  explicit TrackSpline(const KeyframeTrack& track) {
    track.validate();
    const int k = track.size();
    const int nc = static_cast<int>(track.controls.front().coeffs.size());
    n_coeffs_ = nc;

    anchor_ = pick_anchor(track);
    MatX values(k, nc + 6);
    std::vector<double> knots(k);
    for (int i = 0; i < k; ++i) {
      knots[i] = static_cast<double>(track.frames[i]);
      const HandControl& c = track.controls[i];
      values.block(i, 0, 1, nc) = c.coeffs.transpose();
      Vec3 rv = rotation_vector_log(anchor_.inverse() * c.wrist.rotation);
      values.block(i, nc, 1, 3) = rv.transpose();
      values.block(i, nc + 3, 1, 3) = c.wrist.translation.transpose();
    }
    spline_.emplace(std::move(knots), std::move(values));
  }

  HandControl at(double frame) const {
    VecX y = spline_->evaluate(frame);
    HandControl c;
    c.coeffs = y.head(n_coeffs_);
    c.wrist.rotation = anchor_ * rotation_vector_exp(y.segment<3>(n_coeffs_));
    c.wrist.translation = y.segment<3>(n_coeffs_ + 3);
    return c;
  }

  double first() const { return spline_->first(); }
  double last() const { return spline_->last(); }

 private:
  static Rotation pick_anchor(const KeyframeTrack& track) {
    auto max_dist = [&](const Rotation& anchor) {
      double worst = 0.0;
      for (const auto& c : track.controls) {
        worst = std::max(worst, geodesic_distance(anchor, c.wrist.rotation));
      }
      return worst;
    };
    const double limit = 0.9 * M_PI;
    Rotation best = track.controls.front().wrist.rotation;
    double best_d = max_dist(best);
    if (best_d <= limit) return best;
    for (const auto& c : track.controls) {
      double d = max_dist(c.wrist.rotation);
      if (d < best_d) {
        best = c.wrist.rotation;
        best_d = d;
        if (d <= limit) break;
      }
    }
    return best;
  }

  std::optional<CubicSpline> spline_;
  Rotation anchor_;
  int n_coeffs_ = 0;
};

/// Single-evaluation convenience around TrackSpline.
inline HandControl interpolate(const KeyframeTrack& track, double frame) {
  track.validate();
  if (frame < track.frames.front() || frame > track.frames.back()) {
    throw OutOfRange("interpolate: frame outside keyframe span");
  }
  return TrackSpline(track).at(frame);
}

}  // namespace gripforge
