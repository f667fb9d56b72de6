#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <variant>
#include <vector>

#include "gripforge/errors.hpp"
#include "gripforge/geometry.hpp"

namespace gripforge {

/// Closest point on a shape's surface, its outward normal there, and the
/// signed distance of the query point (negative inside).
struct SurfacePoint {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double sdf = 0.0;
};

struct BoxShape {
  Vec3 half = Vec3(0.025, 0.025, 0.025);
};

struct CylinderShape {  // axis along local z
  double radius = 0.03;
  double half_height = 0.04;
};

struct ConvexShape {
  std::vector<Vec3> vertices;
  std::vector<std::vector<int>> faces;  // CCW seen from outside
  std::vector<Vec3> face_normals;       // derived, unit outward
  std::vector<double> face_offsets;     // n . x = d on the face plane
};

inline void finalize_convex(ConvexShape& shape) {
  if (shape.vertices.size() < 4 || shape.faces.empty()) {
    throw InvalidDimensions("ConvexShape: need >= 4 vertices and >= 1 face");
  }
  Vec3 centroid = Vec3::Zero();
  for (const auto& v : shape.vertices) centroid += v;
  centroid /= static_cast<double>(shape.vertices.size());

  shape.face_normals.clear();
  shape.face_offsets.clear();
  for (const auto& face : shape.faces) {
    if (face.size() < 3) throw InvalidDimensions("ConvexShape: degenerate face");
    Vec3 n = Vec3::Zero();  // Newell's method
    for (std::size_t i = 0; i < face.size(); ++i) {
      const Vec3& a = shape.vertices[face[i]];
      const Vec3& b = shape.vertices[face[(i + 1) % face.size()]];
      n += a.cross(b);
    }
    n.normalize();
    const Vec3& p0 = shape.vertices[face[0]];
    if (n.dot(p0 - centroid) < 0.0) n = -n;
    shape.face_normals.push_back(n);
    shape.face_offsets.push_back(n.dot(p0));
  }
}

inline ConvexShape make_convex(std::vector<Vec3> vertices,
                               std::vector<std::vector<int>> faces) {
  ConvexShape s;
  s.vertices = std::move(vertices);
  s.faces = std::move(faces);
  finalize_convex(s);
  return s;
}

using ShapeGeometry = std::variant<BoxShape, CylinderShape, ConvexShape>;

namespace detail {

inline double sgn(double v) { return v < 0.0 ? -1.0 : 1.0; }

inline SurfacePoint closest_surface(const BoxShape& box, const Vec3& p) {
  SurfacePoint sp;
  Vec3 q = p.cwiseAbs() - box.half;
  if ((q.array() <= 0.0).all()) {
    int axis;
    q.maxCoeff(&axis);
    sp.sdf = q[axis];
    sp.point = p;
    sp.point[axis] = sgn(p[axis]) * box.half[axis];
    sp.normal = Vec3::Zero();
    sp.normal[axis] = sgn(p[axis]);
    return sp;
  }
  Vec3 cp = p.cwiseMax(-box.half).cwiseMin(box.half);
  double d = (p - cp).norm();
  sp.point = cp;
  sp.normal = (p - cp) / d;
  sp.sdf = d;
  return sp;
}

inline SurfacePoint closest_surface(const CylinderShape& cyl, const Vec3& p) {
  SurfacePoint sp;
  double rho = std::hypot(p.x(), p.y());
  Vec3 u = rho > 1e-12 ? Vec3(p.x() / rho, p.y() / rho, 0.0) : Vec3(1, 0, 0);
  double dr = rho - cyl.radius;
  double dz = std::abs(p.z()) - cyl.half_height;
  double sz = sgn(p.z());
  if (dr <= 0.0 && dz <= 0.0) {
    if (dr >= dz) {
      sp.point = u * cyl.radius + Vec3(0, 0, p.z());
      sp.normal = u;
      sp.sdf = dr;
    } else {
      sp.point = Vec3(p.x(), p.y(), sz * cyl.half_height);
      sp.normal = Vec3(0, 0, sz);
      sp.sdf = dz;
    }
  } else if (dr > 0.0 && dz <= 0.0) {
    sp.point = u * cyl.radius + Vec3(0, 0, p.z());
    sp.normal = u;
    sp.sdf = dr;
  } else if (dr <= 0.0 && dz > 0.0) {
    sp.point = Vec3(p.x(), p.y(), sz * cyl.half_height);
    sp.normal = Vec3(0, 0, sz);
    sp.sdf = dz;
  } else {
    sp.point = u * cyl.radius + Vec3(0, 0, sz * cyl.half_height);
    Vec3 diff = p - sp.point;
    sp.sdf = diff.norm();
    sp.normal = diff / sp.sdf;
  }
  return sp;
}

inline Vec3 closest_on_segment(const Vec3& a, const Vec3& b, const Vec3& p) {
  Vec3 ab = b - a;
  double t = ab.squaredNorm() > 0.0 ? ab.dot(p - a) / ab.squaredNorm() : 0.0;
  return a + std::clamp(t, 0.0, 1.0) * ab;
}

inline SurfacePoint closest_surface(const ConvexShape& cvx, const Vec3& p) {
  SurfacePoint sp;
  int deepest = 0;
  double max_plane = -std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < cvx.faces.size(); ++f) {
    double d = cvx.face_normals[f].dot(p) - cvx.face_offsets[f];
    if (d > max_plane) {
      max_plane = d;
      deepest = static_cast<int>(f);
    }
  }
  if (max_plane <= 0.0) {
    sp.sdf = max_plane;
    sp.normal = cvx.face_normals[deepest];
    sp.point = p - max_plane * sp.normal;
    return sp;
  }
  double best = std::numeric_limits<double>::infinity();
  Vec3 best_point = Vec3::Zero();
  for (std::size_t f = 0; f < cvx.faces.size(); ++f) {
    const auto& face = cvx.faces[f];
    const Vec3& n = cvx.face_normals[f];
    double plane_d = n.dot(p) - cvx.face_offsets[f];
    if (plane_d <= 0.0) continue;  // back faces never hold the closest point
    Vec3 q = p - plane_d * n;
    bool in_face = true;
    for (std::size_t i = 0; i < face.size(); ++i) {
      const Vec3& a = cvx.vertices[face[i]];
      const Vec3& b = cvx.vertices[face[(i + 1) % face.size()]];
      if ((q - a).dot(n.cross(b - a)) < 0.0) {
        in_face = false;
        break;
      }
    }
    if (in_face) {
      if (plane_d < best) {
        best = plane_d;
        best_point = q;
      }
      continue;
    }
    for (std::size_t i = 0; i < face.size(); ++i) {
      const Vec3& a = cvx.vertices[face[i]];
      const Vec3& b = cvx.vertices[face[(i + 1) % face.size()]];
      Vec3 cp = closest_on_segment(a, b, p);
      double d = (p - cp).norm();
      if (d < best) {
        best = d;
        best_point = cp;
      }
    }
  }
  sp.sdf = best;
  sp.point = best_point;
  Vec3 diff = p - best_point;
  sp.normal = diff.norm() > 1e-12 ? Vec3(diff / diff.norm())
                                  : cvx.face_normals[deepest];
  return sp;
}

}  // namespace detail

inline SurfacePoint closest_surface(const ShapeGeometry& shape, const Vec3& p) {
  return std::visit([&](const auto& s) { return detail::closest_surface(s, p); },
                    shape);
}

inline double signed_distance(const ShapeGeometry& shape, const Vec3& p) {
  return closest_surface(shape, p).sdf;
}

/// Vertices used for plane contacts (cylinders get sampled cap rims).
inline std::vector<Vec3> support_vertices(const ShapeGeometry& shape) {
  if (const auto* box = std::get_if<BoxShape>(&shape)) {
    std::vector<Vec3> v;
    for (int sx : {-1, 1})
      for (int sy : {-1, 1})
        for (int sz : {-1, 1})
          v.emplace_back(sx * box->half.x(), sy * box->half.y(),
                         sz * box->half.z());
    return v;
  }
  if (const auto* cyl = std::get_if<CylinderShape>(&shape)) {
    std::vector<Vec3> v;
    constexpr int kRimSamples = 12;
    for (int s : {-1, 1}) {
      for (int k = 0; k < kRimSamples; ++k) {
        double a = 2.0 * M_PI * k / kRimSamples;
        v.emplace_back(cyl->radius * std::cos(a), cyl->radius * std::sin(a),
                       s * cyl->half_height);
      }
    }
    return v;
  }
  return std::get<ConvexShape>(shape).vertices;
}

inline double bounding_radius(const ShapeGeometry& shape) {
  double r = 0.0;
  for (const auto& v : support_vertices(shape)) r = std::max(r, v.norm());
  return r;
}

/// Volume, centroid and diagonal inertia (about the centroid, unit density
/// scaled to the given mass). Convex shapes integrate by tetrahedron
/// decomposition; the off-diagonal products are dropped.
struct MassProperties {
  double volume = 0.0;
  Vec3 com = Vec3::Zero();
  Vec3 inertia_diag = Vec3::Zero();
};

inline MassProperties mass_properties(const ShapeGeometry& shape, double mass) {
  MassProperties mp;
  if (const auto* box = std::get_if<BoxShape>(&shape)) {
    Vec3 h = box->half;
    mp.volume = 8.0 * h.prod();
    mp.inertia_diag = mass / 3.0 *
                      Vec3(h.y() * h.y() + h.z() * h.z(),
                           h.x() * h.x() + h.z() * h.z(),
                           h.x() * h.x() + h.y() * h.y());
    return mp;
  }
  if (const auto* cyl = std::get_if<CylinderShape>(&shape)) {
    double r = cyl->radius, h = cyl->half_height;
    mp.volume = M_PI * r * r * 2.0 * h;
    double ixy = mass * (3.0 * r * r + 4.0 * h * h) / 12.0;
    mp.inertia_diag = Vec3(ixy, ixy, mass * r * r / 2.0);
    return mp;
  }
  const auto& cvx = std::get<ConvexShape>(shape);
  double vol = 0.0;
  Vec3 first = Vec3::Zero();
  Mat3 second = Mat3::Zero();
  for (const auto& face : cvx.faces) {
    for (std::size_t i = 1; i + 1 < face.size(); ++i) {
      const Vec3& a = cvx.vertices[face[0]];
      const Vec3& b = cvx.vertices[face[i]];
      const Vec3& c = cvx.vertices[face[i + 1]];
      double det = a.dot(b.cross(c));
      vol += det / 6.0;
      first += det / 24.0 * (a + b + c);
      Vec3 s = a + b + c;
      second += det / 120.0 *
                (s * s.transpose() + a * a.transpose() + b * b.transpose() +
                 c * c.transpose());
    }
  }
  if (vol <= 0.0) throw InvalidDimensions("ConvexShape: non-positive volume");
  mp.volume = vol;
  mp.com = first / vol;
  Mat3 shifted = second - vol * (mp.com * mp.com.transpose());
  double rho = mass / vol;
  mp.inertia_diag = rho * Vec3(shifted(1, 1) + shifted(2, 2),
                               shifted(0, 0) + shifted(2, 2),
                               shifted(0, 0) + shifted(1, 1));
  return mp;
}

}  // namespace gripforge
