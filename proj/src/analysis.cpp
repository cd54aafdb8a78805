#include "ym/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "ym/math.hpp"

namespace ym {

std::vector<double> pushforward_samples(const JetFn& f, span<const double> anchor, int component,
                                        span<const double> latents, int latent_dim) {
  YM_CHECK(latent_dim == 1 || latent_dim == 2, "pushforward_samples: latent_dim must be 1 or 2");
  YM_CHECK(component == 0 || component == 1, "pushforward_samples: component must be 0 or 1");
  YM_CHECK(latent_dim == 2 || component == 0, "pushforward_samples: 1D has only dF/dxi");
  const std::size_t n = latents.size() / static_cast<std::size_t>(latent_dim);
  std::vector<double> out(n);
  if (latent_dim == 1) {
    double pt[2] = {anchor[0], 0.0};
    for (std::size_t s = 0; s < n; ++s) {
      pt[1] = latents[s];
      out[s] = f(span<const double>(pt, 2), 1, -1).da;
    }
  } else {
    double pt[4] = {anchor[0], anchor[1], 0.0, 0.0};
    for (std::size_t s = 0; s < n; ++s) {
      pt[2] = latents[2 * s];
      pt[3] = latents[2 * s + 1];
      Jet2d j = f(span<const double>(pt, 4), 2, 3);
      out[s] = component == 0 ? j.da : j.db;
    }
  }
  return out;
}

EmpiricalMeasure make_measure(span<const double> anchor, int component,
                              std::vector<double> samples, const HistogramSpec& hs) {
  YM_CHECK(hs.bins >= 1 && hs.hi > hs.lo, "make_measure: bad histogram spec");
  EmpiricalMeasure m;
  m.anchor.assign(anchor.begin(), anchor.end());
  m.component = component;
  m.samples = std::move(samples);
  m.edges.resize(static_cast<std::size_t>(hs.bins) + 1);
  for (int i = 0; i <= hs.bins; ++i)
    m.edges[static_cast<std::size_t>(i)] =
        hs.lo + (hs.hi - hs.lo) * static_cast<double>(i) / static_cast<double>(hs.bins);
  m.counts.assign(static_cast<std::size_t>(hs.bins), 0);
  const double w = (hs.hi - hs.lo) / static_cast<double>(hs.bins);
  for (double v : m.samples) {
    int b = static_cast<int>(std::floor((v - hs.lo) / w));
    b = std::clamp(b, 0, hs.bins - 1);
    ++m.counts[static_cast<std::size_t>(b)];
  }
  return m;
}

EmpiricalMeasure pushforward_histogram(const PotentialNetwork& net, span<const double> anchor,
                                       int component, std::size_t count, RngStream& rng,
                                       const HistogramSpec& hs) {
  const int dim = net.config.input_dim == 2 ? 1 : 2;
  std::vector<double> latents = gaussian_samples(count, dim, rng);
  auto samples = pushforward_samples(jet_fn(net), anchor, component, latents, dim);
  return make_measure(anchor, component, std::move(samples), hs);
}

double well_mass(span<const double> samples, double center, double radius) {
  if (samples.empty()) return 0.0;
  std::size_t k = 0;
  for (double v : samples)
    if (std::abs(v - center) <= radius) ++k;
  return static_cast<double>(k) / static_cast<double>(samples.size());
}

double mean_of(span<const double> samples) {
  double s = 0.0;
  for (double v : samples) s += v;
  return samples.empty() ? 0.0 : s / static_cast<double>(samples.size());
}

FieldGrid reconstruct_u_1d(const JetFn& f, const Batch& grid) {
  YM_CHECK(grid.mesh && grid.dim() == 2, "reconstruct_u_1d: needs the (x, xi) grid");
  const std::size_t n_x = grid.axis_points(0);
  const std::size_t n_xi = grid.axis_points(1);
  const auto& w = grid.mesh_weights[1];
  std::vector<double> g = components_bolza(f, grid);

  FieldGrid fg;
  fg.xs = grid.cols[0];
  fg.u.resize(n_x);
  const double inv_n = 1.0 / static_cast<double>(n_x);
  const double inv_m = 1.0 / static_cast<double>(n_xi);
  double run = 0.0;
  for (std::size_t i = 0; i < n_x; ++i) {
    double colmean = 0.0;
    for (std::size_t k = 0; k < n_xi; ++k) colmean += g[i * n_xi + k] * w[k];
    run += colmean * inv_m;
    fg.u[i] = run * inv_n;
  }
  return fg;
}

FieldGrid reconstruct_u_1d(const PotentialNetwork& net, const Batch& grid) {
  return reconstruct_u_1d(jet_fn(net), grid);
}

FieldGrid barycenter_field(const JetFn& f, span<const double> xs, span<const double> ys,
                           const AxisSpec& latent_axis, bool normalized) {
  const std::size_t nx = xs.size(), ny = ys.size();
  std::vector<double> nodes(static_cast<std::size_t>(latent_axis.count));
  for (int i = 0; i < latent_axis.count; ++i)
    nodes[static_cast<std::size_t>(i)] =
        latent_axis.lo + (latent_axis.hi - latent_axis.lo) * static_cast<double>(i) /
                             static_cast<double>(latent_axis.count - 1);
  std::vector<double> w(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) w[i] = std::exp(-0.5 * nodes[i] * nodes[i]);

  double mass = 0.0;
  for (std::size_t p = 0; p < nodes.size(); ++p)
    for (std::size_t q = 0; q < nodes.size(); ++q) mass += w[p] * w[q];
  const double denom = normalized ? mass : static_cast<double>(nodes.size() * nodes.size());

  FieldGrid fg;
  fg.xs.assign(xs.begin(), xs.end());
  fg.ys.assign(ys.begin(), ys.end());
  fg.v1.assign(nx * ny, 0.0);
  fg.v2.assign(nx * ny, 0.0);
  double pt[4];
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t iy = 0; iy < ny; ++iy) {
      double s1 = 0.0, s2 = 0.0;
      pt[0] = xs[ix];
      pt[1] = ys[iy];
      for (std::size_t p = 0; p < nodes.size(); ++p) {
        for (std::size_t q = 0; q < nodes.size(); ++q) {
          pt[2] = nodes[p];
          pt[3] = nodes[q];
          Jet2d j = f(span<const double>(pt, 4), 2, 3);
          const double ww = w[p] * w[q];
          s1 += j.da * ww;
          s2 += j.db * ww;
        }
      }
      fg.v1[ix * ny + iy] = s1 / denom;
      fg.v2[ix * ny + iy] = s2 / denom;
    }
  }
  return fg;
}

FieldGrid barycenter_field(const PotentialNetwork& net, span<const double> xs,
                           span<const double> ys, const AxisSpec& latent_axis, bool normalized) {
  return barycenter_field(jet_fn(net), xs, ys, latent_axis, normalized);
}

namespace {

// Trapezoid of f over nodes[0..k] (inclusive), non-uniform safe.
double trapz_prefix(span<const double> nodes, span<const double> f, std::size_t k) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 <= k; ++i)
    s += 0.5 * (f[i] + f[i + 1]) * (nodes[i + 1] - nodes[i]);
  return s;
}

std::vector<double> integrate_xy(const FieldGrid& fg) {
  const std::size_t nx = fg.xs.size(), ny = fg.ys.size();
  std::vector<double> u(nx * ny, 0.0);
  // u(x,y) = int V1 along the bottom edge, then int V2 up the column.
  std::vector<double> bottom(nx);
  for (std::size_t ix = 0; ix < nx; ++ix) bottom[ix] = fg.v1[ix * ny + 0];
  for (std::size_t ix = 0; ix < nx; ++ix) {
    const double ux0 = trapz_prefix(fg.xs, bottom, ix);
    std::vector<double> col(ny);
    for (std::size_t iy = 0; iy < ny; ++iy) col[iy] = fg.v2[ix * ny + iy];
    for (std::size_t iy = 0; iy < ny; ++iy)
      u[ix * ny + iy] = ux0 + trapz_prefix(fg.ys, col, iy);
  }
  return u;
}

std::vector<double> integrate_yx(const FieldGrid& fg) {
  const std::size_t nx = fg.xs.size(), ny = fg.ys.size();
  std::vector<double> u(nx * ny, 0.0);
  std::vector<double> left(ny);
  for (std::size_t iy = 0; iy < ny; ++iy) left[iy] = fg.v2[0 * ny + iy];
  for (std::size_t iy = 0; iy < ny; ++iy) {
    const double u0y = trapz_prefix(fg.ys, left, iy);
    std::vector<double> row(nx);
    for (std::size_t ix = 0; ix < nx; ++ix) row[ix] = fg.v1[ix * ny + iy];
    for (std::size_t ix = 0; ix < nx; ++ix)
      u[ix * ny + iy] = u0y + trapz_prefix(fg.xs, row, ix);
  }
  return u;
}

double bilinear(const FieldGrid& fg, const std::vector<double>& comp, double x, double y) {
  const auto& xs = fg.xs;
  const auto& ys = fg.ys;
  const std::size_t nx = xs.size(), ny = ys.size();
  auto locate = [](const std::vector<double>& nodes, double v) {
    auto it = std::upper_bound(nodes.begin(), nodes.end(), v);
    std::size_t hi = static_cast<std::size_t>(it - nodes.begin());
    hi = std::clamp<std::size_t>(hi, 1, nodes.size() - 1);
    return hi - 1;
  };
  const std::size_t i = locate(xs, x), j = locate(ys, y);
  const double tx = (x - xs[i]) / (xs[i + 1] - xs[i]);
  const double ty = (y - ys[j]) / (ys[j + 1] - ys[j]);
  (void)nx;
  auto at = [&](std::size_t a, std::size_t b) { return comp[a * ny + b]; };
  return (1 - tx) * (1 - ty) * at(i, j) + tx * (1 - ty) * at(i + 1, j) +
         (1 - tx) * ty * at(i, j + 1) + tx * ty * at(i + 1, j + 1);
}

std::vector<double> integrate_straight(const FieldGrid& fg) {
  const std::size_t nx = fg.xs.size(), ny = fg.ys.size();
  const std::size_t steps = std::max(nx, ny);
  std::vector<double> u(nx * ny, 0.0);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t iy = 0; iy < ny; ++iy) {
      const double X = fg.xs[ix] - fg.xs[0];
      const double Y = fg.ys[iy] - fg.ys[0];
      // u = int_0^1 V(x0 + t P) . P dt, trapezoid in t.
      double acc = 0.0;
      double prev = 0.0;
      for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(steps);
        const double px = fg.xs[0] + t * X;
        const double py = fg.ys[0] + t * Y;
        const double dot = bilinear(fg, fg.v1, px, py) * X + bilinear(fg, fg.v2, px, py) * Y;
        if (k > 0) acc += 0.5 * (prev + dot) / static_cast<double>(steps);
        prev = dot;
      }
      u[ix * ny + iy] = acc;
    }
  }
  return u;
}

}  // namespace

FieldGrid integrate_field(const FieldGrid& field, PathMode mode) {
  YM_CHECK(!field.v1.empty() && field.v1.size() == field.xs.size() * field.ys.size(),
           "integrate_field: barycenter components missing");
  FieldGrid out = field;
  switch (mode) {
    case PathMode::kStaircaseXY: out.u = integrate_xy(field); break;
    case PathMode::kStaircaseYX: out.u = integrate_yx(field); break;
    case PathMode::kStraight: out.u = integrate_straight(field); break;
  }
  return out;
}

double path_discrepancy(const FieldGrid& field) {
  const auto a = integrate_xy(field);
  const auto b = integrate_yx(field);
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

FieldGrid reconstruct_u_2d(const PotentialNetwork& net, span<const double> xs,
                           span<const double> ys, const AxisSpec& latent_axis, PathMode mode) {
  FieldGrid v = barycenter_field(net, xs, ys, latent_axis, /*normalized=*/true);
  return integrate_field(v, mode);
}

double w2_samples(span<const double> a, span<const double> b) {
  YM_CHECK(!a.empty() && !b.empty(), "w2_samples: empty sample set");
  YM_CHECK(a.size() == b.size(), "w2_samples: quantile pairing needs equal counts");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double s = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const double d = sa[i] - sb[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(sa.size()));
}

double w2_two_atoms(span<const double> samples, double lo_atom, double hi_atom, double lo_mass) {
  YM_CHECK(!samples.empty(), "w2_two_atoms: empty sample set");
  YM_CHECK(lo_mass >= 0.0 && lo_mass <= 1.0, "w2_two_atoms: bad mass");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double p = (static_cast<double>(i) + 0.5) / n;
    const double q = p < lo_mass ? lo_atom : hi_atom;
    const double d = s[i] - q;
    acc += d * d;
  }
  return std::sqrt(acc / n);
}

double energy_estimate(const JetFn& f, const ProblemSpec& prob, const Batch& probe,
                       bool normalized) {
  if (prob.case_id == CaseId::kBolza1D) {
    YM_CHECK(probe.mesh && probe.dim() == 2, "energy_estimate: case-1 probe must be a grid");
    std::vector<double> g = components_bolza(f, probe);
    auto w = probe.mesh_weights[1];
    std::vector<double> wn(w.begin(), w.end());
    if (normalized) {
      double mass = 0.0;
      for (double v : w) mass += v;
      for (double& v : wn) v *= static_cast<double>(w.size()) / mass;
    }
    auto terms = assemble::bolza_mesh<double>(probe.axis_points(0), probe.axis_points(1), wn, g,
                                              prob.weights);
    return terms.energy;
  }
  YM_CHECK(probe.mesh && probe.dim() == 4, "energy_estimate: 2D probe must be a grid");
  const bool tau_two_well = prob.case_id == CaseId::kFourWell;
  const std::size_t nx = probe.axis_points(0), ny = probe.axis_points(1);
  const std::size_t r = probe.axis_points(2), tq = probe.axis_points(3);
  const auto& wxi = probe.mesh_weights[2];
  const auto& wtau = probe.mesh_weights[3];
  double mass = 0.0;
  for (std::size_t p = 0; p < r; ++p)
    for (std::size_t q = 0; q < tq; ++q) mass += wxi[p] * wtau[q];
  const double denom = normalized ? mass : static_cast<double>(r * tq);

  double energy = 0.0;
  double pt[4];
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      pt[0] = probe.cols[0][i];
      pt[1] = probe.cols[1][j];
      double acc = 0.0;
      for (std::size_t p = 0; p < r; ++p) {
        for (std::size_t q = 0; q < tq; ++q) {
          pt[2] = probe.cols[2][p];
          pt[3] = probe.cols[3][q];
          Jet2d jj = f(span<const double>(pt, 4), 2, 3);
          const double gq = jj.da * jj.da - 1.0;
          double e = gq * gq;
          if (tau_two_well) {
            const double hq = jj.db * jj.db - 1.0;
            e += hq * hq;
          } else {
            e += jj.db * jj.db;
          }
          acc += e * (wxi[p] * wtau[q]);
        }
      }
      energy += acc / denom;
    }
  }
  return energy / static_cast<double>(nx * ny);
}

double energy_estimate(const PotentialNetwork& net, const ProblemSpec& prob, const Batch& probe,
                       bool normalized) {
  return energy_estimate(jet_fn(net), prob, probe, normalized);
}

double ks_statistic_normal(span<const double> samples) {
  YM_CHECK(!samples.empty(), "ks_statistic_normal: empty sample set");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double cdf = norm_cdf(s[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(std::abs(cdf - lo), std::abs(hi - cdf)));
  }
  return d;
}

double curl_rms(const FieldGrid& fg) {
  const std::size_t nx = fg.xs.size(), ny = fg.ys.size();
  if (nx < 3 || ny < 3) return 0.0;
  double acc = 0.0;
  std::size_t cnt = 0;
  for (std::size_t i = 1; i + 1 < nx; ++i) {
    for (std::size_t j = 1; j + 1 < ny; ++j) {
      const double dv2dx =
          (fg.v2[(i + 1) * ny + j] - fg.v2[(i - 1) * ny + j]) / (fg.xs[i + 1] - fg.xs[i - 1]);
      const double dv1dy =
          (fg.v1[i * ny + (j + 1)] - fg.v1[i * ny + (j - 1)]) / (fg.ys[j + 1] - fg.ys[j - 1]);
      const double c = dv2dx - dv1dy;
      acc += c * c;
      ++cnt;
    }
  }
  return std::sqrt(acc / static_cast<double>(cnt));
}

}  // namespace ym
