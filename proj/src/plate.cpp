#include "dtwin/plate.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace dtwin {
namespace {

constexpr double kGauss = 0.5773502691896257645091488;  // 1/sqrt(3)

// Shape-function derivatives at (xi, eta); local nodes at (-1,-1), (1,-1),
// (1,1), (-1,1).
void shape_derivs(double xi, double eta, double dxi[4], double deta[4]) {
  dxi[0] = -(1 - eta) * 0.25;
  dxi[1] = (1 - eta) * 0.25;
  dxi[2] = (1 + eta) * 0.25;
  dxi[3] = -(1 + eta) * 0.25;
  deta[0] = -(1 - xi) * 0.25;
  deta[1] = -(1 + xi) * 0.25;
  deta[2] = (1 + xi) * 0.25;
  deta[3] = (1 - xi) * 0.25;
}

}  // namespace

PlateModel::PlateModel(PlateConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.n_span < 1 || cfg_.n_chord < 1)
    throw std::invalid_argument("mesh must have at least one element per direction");
  if (cfg_.n_chord % 2 != 0)
    throw std::invalid_argument("n_chord must be even so the load column lies on nodes");
  if (cfg_.span <= 0 || cfg_.chord <= 0 || cfg_.material.thickness <= 0 ||
      cfg_.material.youngs_modulus <= 0)
    throw std::invalid_argument("plate dimensions and material must be positive");

  dx_ = cfg_.chord / cfg_.n_chord;
  dy_ = cfg_.span / cfg_.n_span;

  // Pristine 8x8 element stiffness, 2x2 Gauss, plane stress.
  const double e = cfg_.material.youngs_modulus;
  const double nu = cfg_.material.poisson_ratio;
  const double t = cfg_.material.thickness;
  const double d11 = e / (1 - nu * nu);
  const double d12 = nu * d11;
  const double d33 = e / (2 * (1 + nu));
  ke_.assign(64, 0.0);
  const double det_j = dx_ * dy_ * 0.25;
  for (double gx : {-kGauss, kGauss}) {
    for (double gy : {-kGauss, kGauss}) {
      double dxi[4], deta[4];
      shape_derivs(gx, gy, dxi, deta);
      double dndx[4], dndy[4];
      for (int i = 0; i < 4; ++i) {
        dndx[i] = dxi[i] * 2.0 / dx_;
        dndy[i] = deta[i] * 2.0 / dy_;
      }
      // B^T D B accumulated directly from the nonzero pattern of B.
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
          const double kxx = d11 * dndx[i] * dndx[j] + d33 * dndy[i] * dndy[j];
          const double kxy = d12 * dndx[i] * dndy[j] + d33 * dndy[i] * dndx[j];
          const double kyx = d12 * dndy[i] * dndx[j] + d33 * dndx[i] * dndy[j];
          const double kyy = d11 * dndy[i] * dndy[j] + d33 * dndx[i] * dndx[j];
          const double w = t * det_j;
          ke_[(2 * i) * 8 + 2 * j] += w * kxx;
          ke_[(2 * i) * 8 + 2 * j + 1] += w * kxy;
          ke_[(2 * i + 1) * 8 + 2 * j] += w * kyx;
          ke_[(2 * i + 1) * 8 + 2 * j + 1] += w * kyy;
        }
      }
    }
  }

  // Elliptic line load along the mid-chord node column, +x direction,
  // integrated consistently segment by segment and rescaled to a unit
  // resultant so total applied force equals the requested lift exactly.
  const int nodes = n_nodes();
  unit_load_.assign(2 * nodes, 0.0);
  const int ic_mid = cfg_.n_chord / 2;
  auto q = [this](double y) {
    const double r = y / cfg_.span;
    return std::sqrt(std::max(0.0, 1.0 - r * r));
  };
  for (int is = 0; is < cfg_.n_span; ++is) {
    const double y0 = is * dy_;
    const int na = is * (cfg_.n_chord + 1) + ic_mid;
    const int nb = (is + 1) * (cfg_.n_chord + 1) + ic_mid;
    for (double gp : {0.5 - 0.5 * kGauss, 0.5 + 0.5 * kGauss}) {
      const double w = 0.5 * dy_;
      const double qv = q(y0 + gp * dy_);
      unit_load_[2 * na] += w * qv * (1.0 - gp);
      unit_load_[2 * nb] += w * qv * gp;
    }
  }
  double total = 0.0;
  for (int n = 0; n < nodes; ++n) total += unit_load_[2 * n];
  for (double& v : unit_load_) v /= total;

  // Clamped root: both dofs of every y = 0 node are fixed.
  free_index_.assign(2 * nodes, -1);
  int next = 0;
  for (int is = 0; is <= cfg_.n_span; ++is) {
    for (int ic = 0; ic <= cfg_.n_chord; ++ic) {
      const int node = is * (cfg_.n_chord + 1) + ic;
      const bool clamped = cfg_.clamp_root && is == 0;
      for (int d = 0; d < 2; ++d)
        free_index_[2 * node + d] = clamped ? -1 : next++;
    }
  }
}

void PlateModel::check_scenario(const DamageScenario& s) const {
  for (double mu : {s.mu1, s.mu2})
    if (!(mu >= 0.0) || mu >= 100.0)
      throw std::domain_error("damage must lie in [0, 100)");
}

double PlateModel::element_factor(const DamageScenario& s, int is, int ic) const {
  const double mu[2] = {s.mu1, s.mu2};
  const double cs = (is + 0.5) / cfg_.n_span;
  const double cc = (ic + 0.5) / cfg_.n_chord;
  double f = 1.0;
  for (std::size_t r = 0; r < cfg_.damage_regions.size() && r < 2; ++r)
    if (cfg_.damage_regions[r].contains(cs, cc)) f *= 1.0 - mu[r] / 100.0;
  return f;
}

Rect PlateModel::damaged_footprint(int region_index) const {
  if (region_index < 0 ||
      region_index >= static_cast<int>(cfg_.damage_regions.size()))
    throw std::out_of_range("no such damage region");
  const Rect& r = cfg_.damage_regions[region_index];
  Rect out{1.0, 0.0, 1.0, 0.0};
  bool any = false;
  for (int is = 0; is < cfg_.n_span; ++is) {
    for (int ic = 0; ic < cfg_.n_chord; ++ic) {
      if (!r.contains((is + 0.5) / cfg_.n_span, (ic + 0.5) / cfg_.n_chord)) continue;
      any = true;
      out.span_lo = std::min(out.span_lo, static_cast<double>(is) / cfg_.n_span);
      out.span_hi = std::max(out.span_hi, static_cast<double>(is + 1) / cfg_.n_span);
      out.chord_lo = std::min(out.chord_lo, static_cast<double>(ic) / cfg_.n_chord);
      out.chord_hi = std::max(out.chord_hi, static_cast<double>(ic + 1) / cfg_.n_chord);
    }
  }
  if (!any) return Rect{0, 0, 0, 0};
  return out;
}

const std::vector<double>& PlateModel::unit_solution(const DamageScenario& s) const {
  check_scenario(s);
  const auto key = std::make_pair(std::bit_cast<std::uint64_t>(s.mu1),
                                  std::bit_cast<std::uint64_t>(s.mu2));
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = unit_cache_.find(key);
    if (it != unit_cache_.end()) return *it->second;
  }

  const int nodes = n_nodes();
  int n_free = 0;
  for (int d = 0; d < 2 * nodes; ++d)
    if (free_index_[d] >= 0) ++n_free;
  if (n_free == 0) throw std::runtime_error("no free degrees of freedom");

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(cfg_.n_span) * cfg_.n_chord * 64);
  for (int is = 0; is < cfg_.n_span; ++is) {
    for (int ic = 0; ic < cfg_.n_chord; ++ic) {
      const double f = element_factor(s, is, ic);
      const int n0 = is * (cfg_.n_chord + 1) + ic;        // (-1,-1)
      const int n1 = is * (cfg_.n_chord + 1) + ic + 1;    // (+1,-1)
      const int n2 = (is + 1) * (cfg_.n_chord + 1) + ic + 1;  // (+1,+1)
      const int n3 = (is + 1) * (cfg_.n_chord + 1) + ic;  // (-1,+1)
      const int dof[8] = {2 * n0, 2 * n0 + 1, 2 * n1, 2 * n1 + 1,
                          2 * n2, 2 * n2 + 1, 2 * n3, 2 * n3 + 1};
      for (int a = 0; a < 8; ++a) {
        const int fa = free_index_[dof[a]];
        if (fa < 0) continue;
        for (int b = 0; b < 8; ++b) {
          const int fb = free_index_[dof[b]];
          if (fb < 0) continue;
          trips.emplace_back(fa, fb, f * ke_[a * 8 + b]);
        }
      }
    }
  }

  Eigen::SparseMatrix<double> k(n_free, n_free);
  k.setFromTriplets(trips.begin(), trips.end());
  Eigen::VectorXd f(n_free);
  f.setZero();
  for (int d = 0; d < 2 * nodes; ++d)
    if (free_index_[d] >= 0) f[free_index_[d]] = unit_load_[d];

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  solver.compute(k);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("stiffness factorization failed (singular system?)");
  Eigen::VectorXd u = solver.solve(f);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("stiffness solve failed");
  const double resid = (k * u - f).norm();
  const double fnorm = f.norm();
  if (!(resid <= 1e-8 * fnorm))
    throw std::runtime_error("solver residual above tolerance (singular system?)");

  auto full = std::make_shared<std::vector<double>>(2 * nodes, 0.0);
  for (int d = 0; d < 2 * nodes; ++d)
    if (free_index_[d] >= 0) (*full)[d] = u[free_index_[d]];

  std::lock_guard<std::mutex> lock(cache_mutex_);
  auto [it, inserted] = unit_cache_.emplace(key, std::move(full));
  return *it->second;
}

std::vector<double> PlateModel::solve(const DamageScenario& s,
                                      const LoadCase& load) const {
  const std::vector<double>& u = unit_solution(s);
  std::vector<double> out(u.size());
  const double scale = load.total_lift();
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = scale * u[i];
  return out;
}

std::vector<double> PlateModel::gauge_strain(const DamageScenario& s,
                                             const LoadCase& load,
                                             std::span<const Gauge> gauges) const {
  const std::vector<double>& u = unit_solution(s);
  const double scale = load.total_lift();
  std::vector<double> out;
  out.reserve(gauges.size());
  for (const Gauge& g : gauges) {
    if (g.chord < 0.0 || g.chord > 1.0 || g.span < 0.0 || g.span > 1.0)
      throw std::domain_error("gauge outside the planform");
    const double px = g.chord * cfg_.n_chord;
    const double py = g.span * cfg_.n_span;
    const int ic = std::min(static_cast<int>(std::floor(px)), cfg_.n_chord - 1);
    const int is = std::min(static_cast<int>(std::floor(py)), cfg_.n_span - 1);
    const double xi = 2.0 * (px - ic) - 1.0;
    const double eta = 2.0 * (py - is) - 1.0;
    double dxi[4], deta[4];
    shape_derivs(xi, eta, dxi, deta);
    const int n[4] = {is * (cfg_.n_chord + 1) + ic, is * (cfg_.n_chord + 1) + ic + 1,
                      (is + 1) * (cfg_.n_chord + 1) + ic + 1,
                      (is + 1) * (cfg_.n_chord + 1) + ic};
    double eyy = 0.0;
    for (int i = 0; i < 4; ++i)
      eyy += deta[i] * (2.0 / dy_) * u[2 * n[i] + 1];
    out.push_back(-eyy * scale * 1e6);  // compression-positive, microstrain
  }
  return out;
}

double PlateModel::strain_energy(const DamageScenario& s, const LoadCase& load) const {
  const std::vector<double>& u = unit_solution(s);
  double work = 0.0;
  for (std::size_t d = 0; d < u.size(); ++d) work += unit_load_[d] * u[d];
  const double scale = load.total_lift();
  return 0.5 * work * scale * scale;
}

double calibrate_reference_weight(const PlateModel& model,
                                  const SensorLayout& layout,
                                  double load_factor,
                                  double target_microstrain) {
  if (load_factor <= 0 || target_microstrain <= 0)
    throw std::invalid_argument("load factor and target must be positive");
  const auto gauges = layout.usable();
  const LoadCase unit{load_factor, 1.0};
  const auto strains = model.gauge_strain(DamageScenario{0, 0}, unit, gauges);
  double peak = 0.0;
  for (double v : strains) peak = std::max(peak, std::abs(v));
  if (peak <= 0.0) throw std::runtime_error("no gauge sees strain; cannot calibrate");
  return target_microstrain / peak;
}

}  // namespace dtwin
