#include "blochfem/material.hpp"

#include <cmath>

namespace blochfem {

bool Box::contains(const Point& x, int d) const noexcept {
  for (int k = 0; k < d; ++k)
    if (x[k] < lo[k] || x[k] > hi[k]) return false;
  return true;
}

Complex RegionSpec::operator()(const Point& x, int d) const noexcept {
  for (auto it = boxes.rbegin(); it != boxes.rend(); ++it)
    if (it->contains(x, d)) return it->value;
  return default_value;
}

Point wrap_periodic(const Point& x, int d) {
  Point y = x;
  for (int k = 0; k < d - 1; ++k) {
    if (x[k] >= -kPi && x[k] <= kPi) continue;
    y[k] = x[k] - 2.0 * kPi * std::floor((x[k] + kPi) / (2.0 * kPi));
  }
  return y;
}

Material::Material(int d, Real k, Real R, Real R0, RegionSpec background, RegionSpec perturbation)
    : d_(d), k_(k), R_(R), R0_(R0), background_(std::move(background)), perturbation_(std::move(perturbation)) {
  if (d != 2 && d != 3) throw ConfigError("material: dimension must be 2 or 3");
  if (!(k > 0.0)) throw ConfigError("material: wavenumber must be positive");
  if (!(R0 > 0.0 && R0 < R)) throw ConfigError("material: heights must satisfy 0 < R0 < R");
  for (const Box& b : perturbation_.boxes) {
    if (b.value != Complex(0.0) && b.lo[d - 1] < R0 && b.hi[d - 1] > R0)
      throw ConfigError("material: perturbation box extends above R0");
    if (b.value != Complex(0.0) && b.lo[d - 1] >= R0)
      throw ConfigError("material: perturbation box lies above R0");
  }
  if (perturbation_.default_value != Complex(0.0))
    throw ConfigError("material: perturbation default must be zero (compact support)");

  bool absorbing = background_.default_value.imag() > 0.0;
  auto neg = [](const Complex& v) { return v.imag() < 0.0; };
  if (neg(background_.default_value))
    issues_.push_back({"background_negative_imag", "Im n_p^2 < 0 in the default region"});
  for (const Box& b : background_.boxes) {
    if (neg(b.value)) issues_.push_back({"background_negative_imag", "Im n_p^2 < 0 in a background box"});
    bool open = true;
    for (int a = 0; a < d; ++a) open = open && b.hi[a] > b.lo[a];
    if (b.value.imag() > 0.0 && open) absorbing = true;
    if (b.hi[d - 1] > R0 && std::abs(b.value - k * k) > 1e-12)
      issues_.push_back({"background_above_R0", "background box reaches above R0 with k^2 n_p^2 != k^2"});
  }
  if (!absorbing)
    issues_.push_back({"no_absorption", "Im n_p^2 > 0 holds on no open subset"});
  if (std::abs(background_.default_value - k * k) > 1e-12)
    issues_.push_back({"background_above_R0", "default background differs from k^2 above R0"});
  for (const Box& b : perturbation_.boxes)
    if (neg(b.value)) issues_.push_back({"perturbation_negative_imag", "Im q < 0 in a perturbation box"});
}

void Material::check_point(const Point& x) const {
  if (x[d_ - 1] < -1e-12 || x[d_ - 1] > R_ + 1e-12 || !std::isfinite(x.head(d_).sum()))
    throw ConfigError("material: point outside the periodic strip");
}

Complex Material::k2np2(const Point& x) const {
  check_point(x);
  return background_(wrap_periodic(x, d_), d_);
}

Complex Material::k2q(const Point& x) const {
  check_point(x);
  if (x[d_ - 1] > R0_) return 0.0;
  return perturbation_(wrap_periodic(x, d_), d_);
}

std::pair<Complex, Complex> Material::eval(const Point& x) const { return {k2np2(x), k2q(x)}; }

RegionSpec example_background(int d) {
  RegionSpec s;
  s.default_value = 1.0;
  const Complex low(0.8, 0.0), lossy(0.8, 0.4);
  if (d == 2) {
    s.boxes.push_back({Point(-1.5, 0.0, 0.0), Point(1.5, 4.5, 0.0), low});
    s.boxes.push_back({Point(-kPi, 0.0, 0.0), Point(kPi, 3.5, 0.0), low});
    s.boxes.push_back({Point(-1.0, 1.0, 0.0), Point(1.0, 3.0, 0.0), lossy});
  } else if (d == 3) {
    s.boxes.push_back({Point(-1.5, 1.0, 0.0), Point(1.5, kPi, 4.5), low});
    s.boxes.push_back({Point(-kPi, -kPi, 0.0), Point(kPi, kPi, 3.5), low});
    s.boxes.push_back({Point(-1.0, -1.0, 1.0), Point(1.0, 1.0, 3.0), lossy});
  } else {
    throw ConfigError("example_background: dimension must be 2 or 3");
  }
  return s;
}

RegionSpec example_perturbation(int d) {
  RegionSpec s;
  const Complex v(2.2, 0.0);
  if (d == 2) {
    s.boxes.push_back({Point(-0.5, 1.0, 0.0), Point(1.0, 3.5, 0.0), v});
    s.boxes.push_back({Point(-2.0, 1.0, 0.0), Point(1.0, 2.0, 0.0), v});
  } else if (d == 3) {
    s.boxes.push_back({Point(-0.5, 0.0, 1.0), Point(1.0, 1.0, 3.5), v});
    s.boxes.push_back({Point(-2.0, 0.0, 1.0), Point(1.0, 1.0, 2.0), v});
    s.boxes.push_back({Point(-0.5, -2.5, 1.0), Point(1.0, 1.0, 2.0), v});
  } else {
    throw ConfigError("example_perturbation: dimension must be 2 or 3");
  }
  return s;
}

Material example_material(int d) {
  return Material(d, std::sqrt(0.4), 5.0, 4.5, example_background(d), example_perturbation(d));
}

NodalField sample_nodal(std::shared_ptr<const Mesh> mesh, const RegionSpec& spec) {
  const int d = mesh->dim();
  return NodalField::interpolate(mesh, [&](const Point& x) { return spec(x, d); });
}

}  // namespace blochfem
