#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <utility>

#include "blur2vid/core/error.hpp"
#include "blur2vid/core/image.hpp"
#include "blur2vid/core/tensor.hpp"

namespace blur2vid::geom {

inline constexpr double kPi = 3.14159265358979323846;

template <typename S>
constexpr S deg2rad(S deg) {
  return deg * static_cast<S>(kPi) / S(180);
}

// Camera rotation as Euler angles in degrees. Composition order is fixed
// as intrinsic Z*Y*X (yaw*pitch*roll).
template <typename S>
struct EulerRotation {
  S x_deg = S(0);
  S y_deg = S(0);
  S z_deg = S(0);

  S magnitude() const { return std::sqrt(x_deg * x_deg + y_deg * y_deg + z_deg * z_deg); }
};

template <typename S>
struct UnitQuaternion {
  S w = S(1), x = S(0), y = S(0), z = S(0);

  static UnitQuaternion identity() { return {S(1), S(0), S(0), S(0)}; }

  S norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  UnitQuaternion normalized() const {
    const S n = norm();
    return {w / n, x / n, y / n, z / n};
  }

  UnitQuaternion operator-() const { return {-w, -x, -y, -z}; }

  // Hamilton product; composes rotations (this applied after rhs).
  UnitQuaternion operator*(const UnitQuaternion& r) const {
    return {w * r.w - x * r.x - y * r.y - z * r.z,
            w * r.x + x * r.w + y * r.z - z * r.y,
            w * r.y - x * r.z + y * r.w + z * r.x,
            w * r.z + x * r.y - y * r.x + z * r.w};
  }

  Eigen::Quaternion<S> to_eigen() const { return Eigen::Quaternion<S>(w, x, y, z); }

  static UnitQuaternion from_eigen(const Eigen::Quaternion<S>& q) {
    return {q.w(), q.x(), q.y(), q.z()};
  }

  // R(q) entries are products of component pairs, so R(q) == R(-q) exactly.
  Eigen::Matrix<S, 3, 3> rotation_matrix() const { return to_eigen().toRotationMatrix(); }
};

template <typename S>
S dot(const UnitQuaternion<S>& a, const UnitQuaternion<S>& b) {
  return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

template <typename S>
UnitQuaternion<S> euler_to_quaternion(const EulerRotation<S>& r) {
  using V3 = Eigen::Matrix<S, 3, 1>;
  const Eigen::Quaternion<S> q = Eigen::AngleAxis<S>(deg2rad(r.z_deg), V3::UnitZ()) *
                                 Eigen::AngleAxis<S>(deg2rad(r.y_deg), V3::UnitY()) *
                                 Eigen::AngleAxis<S>(deg2rad(r.x_deg), V3::UnitX());
  return UnitQuaternion<S>::from_eigen(q.normalized());
}

// Constant-angular-velocity interpolation along the shorter great-circle
// arc. Near-parallel endpoints fall back to normalized lerp.
template <typename S>
UnitQuaternion<S> slerp(const UnitQuaternion<S>& q0, UnitQuaternion<S> q1, S t) {
  S d = dot(q0, q1);
  if (d < S(0)) {
    q1 = -q1;
    d = -d;
  }
  S a, b;
  if (d > S(1) - S(1e-7)) {
    a = S(1) - t;
    b = t;
  } else {
    const S omega = std::acos(std::min(d, S(1)));
    const S so = std::sin(omega);
    a = std::sin((S(1) - t) * omega) / so;
    b = std::sin(t * omega) / so;
  }
  UnitQuaternion<S> out{a * q0.w + b * q1.w, a * q0.x + b * q1.x, a * q0.y + b * q1.y,
                        a * q0.z + b * q1.z};
  return out.normalized();
}

// Linear pixel-to-sphere map of an equirectangular panorama:
// theta = 2*pi*x/W in [0, 2*pi), phi = pi*y/H - pi/2 in [-pi/2, pi/2).
template <typename S>
std::pair<S, S> equirect_to_sphere(S x, S y, Eigen::Index w, Eigen::Index h) {
  if (!(x >= S(0) && x < static_cast<S>(w) && y >= S(0) && y < static_cast<S>(h)))
    throw validation_error("equirect_to_sphere: pixel out of range");
  const S theta = S(2) * static_cast<S>(kPi) * x / static_cast<S>(w);
  const S phi = static_cast<S>(kPi) * (y / static_cast<S>(h)) - static_cast<S>(kPi) / S(2);
  return {theta, phi};
}

template <typename S>
std::pair<S, S> sphere_to_equirect(S theta, S phi, Eigen::Index w, Eigen::Index h) {
  const S x = theta * static_cast<S>(w) / (S(2) * static_cast<S>(kPi));
  const S y = (phi + static_cast<S>(kPi) / S(2)) * static_cast<S>(h) / static_cast<S>(kPi);
  return {x, y};
}

// Unit direction for spherical coordinates. theta sweeps longitude from
// +Z towards +X; phi is latitude with +Y pointing towards image bottom.
template <typename S>
Eigen::Matrix<S, 3, 1> direction_from_spherical(S theta, S phi) {
  const S cp = std::cos(phi);
  return {cp * std::sin(theta), std::sin(phi), cp * std::cos(theta)};
}

template <typename S>
std::pair<S, S> spherical_from_direction(const Eigen::Matrix<S, 3, 1>& d) {
  S theta = std::atan2(d.x(), d.z());
  if (theta < S(0)) theta += S(2) * static_cast<S>(kPi);
  const S y = std::min(std::max(d.y(), S(-1)), S(1));
  return {theta, std::asin(y)};
}

struct VirtualCamera {
  double hfov_deg = 60.0;
  int width = 128;
  int height = 128;

  void validate() const {
    if (!(hfov_deg > 0.0 && hfov_deg < 180.0))
      throw validation_error("VirtualCamera: fov must be in (0, 180) degrees");
    if (width < 1 || height < 1) throw validation_error("VirtualCamera: bad output size");
  }
};

// Bilinear sample with longitudinal wrap-around and latitudinal clamping.
template <typename S>
void sample_equirect(const Tensor<S>& pano, S x, S y, S* rgb) {
  const Eigen::Index h = pano.dim(0), w = pano.dim(1), c = pano.dim(2);
  x = x - std::floor(x / static_cast<S>(w)) * static_cast<S>(w);  // wrap to [0, W)
  y = std::min(std::max(y, S(0)), static_cast<S>(h - 1));
  const Eigen::Index x0 = static_cast<Eigen::Index>(std::floor(x)) % w;
  const Eigen::Index x1 = (x0 + 1) % w;
  const Eigen::Index y0 = static_cast<Eigen::Index>(std::floor(y));
  const Eigen::Index y1 = std::min(y0 + 1, h - 1);
  const S fx = x - std::floor(x);
  const S fy = y - static_cast<S>(y0);
  for (Eigen::Index ch = 0; ch < c; ++ch) {
    const S top = (S(1) - fx) * pano(y0, x0, ch) + fx * pano(y0, x1, ch);
    const S bot = (S(1) - fx) * pano(y1, x0, ch) + fx * pano(y1, x1, ch);
    rgb[ch] = (S(1) - fy) * top + fy * bot;
  }
}

// Renders a perspective view of the panorama from the sphere center.
// Each output pixel casts a ray through the rotated camera and samples
// the panorama at the ray's spherical coordinates.
template <typename S>
Tensor<S> render_view(const Tensor<S>& pano, const UnitQuaternion<S>& orientation,
                      const VirtualCamera& cam) {
  check_image(pano, "render_view");
  cam.validate();
  const Eigen::Index ph = pano.dim(0), pw = pano.dim(1), c = pano.dim(2);
  const Eigen::Index oh = cam.height, ow = cam.width;
  const Eigen::Matrix<S, 3, 3> rot = orientation.rotation_matrix();
  const S focal =
      static_cast<S>(ow) / S(2) / std::tan(deg2rad(static_cast<S>(cam.hfov_deg)) / S(2));

  Tensor<S> out({oh, ow, c});
  for (Eigen::Index py = 0; py < oh; ++py) {
    for (Eigen::Index px = 0; px < ow; ++px) {
      Eigen::Matrix<S, 3, 1> ray(static_cast<S>(px) + S(0.5) - static_cast<S>(ow) / S(2),
                                 static_cast<S>(py) + S(0.5) - static_cast<S>(oh) / S(2), focal);
      ray = (rot * ray).normalized();
      const auto [theta, phi] = spherical_from_direction(ray);
      const auto [sx, sy] = sphere_to_equirect(theta, phi, pw, ph);
      sample_equirect(pano, sx, sy, &out(py, px, 0));
    }
  }
  return out;
}

// Resamples the panorama so that rendering the result at orientation q2
// matches rendering the original at q1*q2 (pre-rotation composes on the
// left of the rendering orientation).
template <typename S>
Tensor<S> rotate_panorama(const Tensor<S>& pano, const UnitQuaternion<S>& q) {
  check_image(pano, "rotate_panorama");
  const Eigen::Index h = pano.dim(0), w = pano.dim(1), c = pano.dim(2);
  const Eigen::Matrix<S, 3, 3> rot = q.rotation_matrix();
  Tensor<S> out({h, w, c});
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const auto [theta, phi] =
          equirect_to_sphere(static_cast<S>(x), static_cast<S>(y), w, h);
      const Eigen::Matrix<S, 3, 1> d = rot * direction_from_spherical(theta, phi);
      const auto [t2, p2] = spherical_from_direction(Eigen::Matrix<S, 3, 1>(d.normalized()));
      const auto [sx, sy] = sphere_to_equirect(t2, p2, w, h);
      sample_equirect(pano, sx, sy, &out(y, x, 0));
    }
  }
  return out;
}

}  // namespace blur2vid::geom
