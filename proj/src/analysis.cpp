#include "mmot/analysis.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "mmot/errors.hpp"

namespace mmot {

TerminalCoupling terminal_coupling(const StaggeredField& u) {
  const GridSpec& g = u.grid();
  const auto slice = u.pi_slice(g.n_t);
  TerminalCoupling out;
  out.coupling = DiscreteMeasure(g.n_x, g.k);
  double total = 0.0;
  for (std::size_t x = 0; x < slice.size(); ++x) {
    if (slice[x] > 0.0) {
      out.coupling.mass[x] = slice[x];
      total += slice[x];
    } else {
      out.clipped_mass -= slice[x];
    }
  }
  if (!(total > 0.0)) throw DegenerateOutputError("terminal slice has no positive mass");
  for (double& v : out.coupling.mass) v /= total;
  return out;
}

DiscreteMeasure pair_marginal(const DiscreteMeasure& coupling, int i, int j) {
  const int k = coupling.dims;
  if (i < 0 || j < 0 || i >= k || j >= k || i == j) throw ValidationError("pair_marginal needs two distinct axes");
  const std::size_t n = static_cast<std::size_t>(coupling.n_x);
  DiscreteMeasure out(coupling.n_x, 2);
  std::size_t si = 1, sj = 1;
  for (int l = k - 1; l > i; --l) si *= n;
  for (int l = k - 1; l > j; --l) sj *= n;
  for (std::size_t f = 0; f < coupling.mass.size(); ++f) {
    out.mass[((f / si) % n) * n + (f / sj) % n] += coupling.mass[f];
  }
  return out;
}

MapEstimate circular_map_extract(const DiscreteMeasure& pair, const DiscreteMeasure& mu1, Conditioning mode) {
  const int n = pair.n_x;
  if (pair.dims != 2) throw DimensionError("map extraction needs a two-axis measure");
  if (mu1.dims != 1 || mu1.n_x != n) throw DimensionError("conditioning measure does not match the pair grid");
  const double threshold = 1e-3 / n;
  MapEstimate est;
  for (int a = 0; a < n; ++a) {
    double row = 0.0;
    std::complex<double> z = 0.0;
    for (int b = 0; b < n; ++b) {
      const double w = pair.mass[static_cast<std::size_t>(a) * n + b];
      row += w;
      z += w * std::polar(1.0, 2.0 * std::numbers::pi * b / n);
    }
    const double cond = mode == Conditioning::row_marginal ? row : mu1.mass[a];
    bool ok = cond > threshold;
    if (ok) z /= cond;
    ok = ok && std::abs(z) > 1e-12;
    double t = ok ? std::arg(z) / (2.0 * std::numbers::pi) : 0.0;
    if (t < 0.0) t += 1.0;
    if (t >= 1.0) t -= 1.0;
    est.x.push_back(static_cast<double>(a) / n);
    est.value.push_back(t);
    est.valid.push_back(ok);
  }
  return est;
}

double circular_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), 1.0);
  return std::min(d, 1.0 - d);
}

MapError map_error(const MapEstimate& est, const MapTable& ref, const DiscreteMeasure& weight) {
  if (est.value.size() != ref.value.size() || est.value.size() != weight.mass.size())
    throw DimensionError("map_error inputs have different lengths");
  MapError e;
  double valid_w = 0.0, total_w = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < est.value.size(); ++i) {
    total_w += weight.mass[i];
    if (!est.valid[i]) continue;
    const double d = circular_distance(est.value[i], ref.value[i]);
    valid_w += weight.mass[i];
    acc += weight.mass[i] * d;
    e.linf = std::max(e.linf, d);
  }
  e.l1 = valid_w > 0.0 ? acc / valid_w : 0.0;
  e.coverage = total_w > 0.0 ? valid_w / total_w : 0.0;
  return e;
}

MapEstimate identity_estimate(int n_x) {
  MapEstimate est;
  for (int j = 0; j < n_x; ++j) {
    est.x.push_back(static_cast<double>(j) / n_x);
    est.value.push_back(static_cast<double>(j) / n_x);
    est.valid.push_back(true);
  }
  return est;
}

}  // namespace mmot
