#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "roughfio/grid.hpp"

namespace roughfio {

/**
 * Dyadic cubes Q with witness sets E(Q) (flat lattice indices). `eta` is the
 * claimed sparsity constant: |E(Q)| >= eta |Q| by lattice counting.
 */
template <int Dim>
struct SparseCollection {
  struct Entry {
    DyadicCube<Dim> cube;
    std::vector<std::size_t> witness;
  };
  std::vector<Entry> entries;
  double eta = 1.0;
};

struct SparseCheck {
  bool contained = true;
  bool dense = true;
  bool disjoint = true;
  double measured_eta = 1.0;  // min |E(Q)| / |Q|; 1 for the empty collection
  bool valid() const { return contained && dense && disjoint; }
};

template <int Dim>
SparseCheck check_sparse(const SparseCollection<Dim>& s, const Grid<Dim>& grid) {
  SparseCheck c;
  std::vector<char> used(grid.size(), 0);
  const auto n = grid.samples_per_axis();
  for (const auto& e : s.entries) {
    const std::size_t q = e.cube.lattice_count(n);
    if (!e.cube.valid() || q == 0) {
      c.contained = false;
      continue;
    }
    std::size_t inside = 0;
    for (auto k : e.witness) {
      if (k >= grid.size() || !e.cube.contains_index(grid.unflatten(k), n)) {
        c.contained = false;
        continue;
      }
      ++inside;
      if (used[k]) c.disjoint = false;
      used[k] = 1;
    }
    const double ratio = static_cast<double>(inside) / static_cast<double>(q);
    c.measured_eta = std::min(c.measured_eta, ratio);
    if (static_cast<double>(inside) < s.eta * static_cast<double>(q) * (1.0 - 1e-12)) c.dense = false;
  }
  return c;
}

template <int Dim>
bool verify_sparse(const SparseCollection<Dim>& s, const Grid<Dim>& grid) {
  return check_sparse(s, grid).valid();
}

/// sum over Q containing x of <f>_{r,Q}, on the whole lattice.
template <int Dim>
std::vector<double> sparse_operator_values(const SparseCollection<Dim>& s, const SampledFunction<Dim>& f, double r) {
  std::vector<double> sum(f.size(), 0.0);
  for (const auto& e : s.entries) {
    const double avg = cube_average(f, r, e.cube);
    for (auto k : e.cube.lattice_points(f.grid)) sum[k] += avg;
  }
  return sum;
}

/// max over the lattice of |Tf(x)| / sum_{Q contains x} <f>_{r,Q}; +infinity if some
/// point with Tf != 0 has an empty (or zero) sum.
template <int Dim>
double verify_pointwise_domination(const SampledFunction<Dim>& tf, const SparseCollection<Dim>& s,
                                   const SampledFunction<Dim>& f, double r) {
  require(tf.grid == f.grid, "Tf and f live on different grids");
  const auto sum = sparse_operator_values(s, f, r);
  double c = 0.0;
  for (std::size_t k = 0; k < tf.size(); ++k) {
    const double v = std::abs(tf[k]);
    if (v == 0.0) continue;
    if (sum[k] <= 0.0) return std::numeric_limits<double>::infinity();
    c = std::max(c, v / sum[k]);
  }
  return c;
}

struct SparseBuildStats {
  std::size_t retries = 0;     // lambda doublings over all cubes
  std::size_t forced = 0;      // cubes where the cap was applied after the last retry
  std::size_t cubes = 0;
};

template <int Dim>
struct SparseBuild {
  SparseCollection<Dim> collection;
  double constant = 0.0;
  SparseBuildStats stats;
};

namespace detail {

template <int Dim>
double cube_sup(const std::vector<double>& mag, const DyadicCube<Dim>& q, const Grid<Dim>& grid) {
  double s = 0.0;
  for (auto k : q.lattice_points(grid)) s = std::max(s, mag[k]);
  return s;
}

// Maximal dyadic cubes whose lattice points all satisfy `inside`.
template <int Dim>
void maximal_cubes(const DyadicCube<Dim>& q, const Grid<Dim>& grid, const std::vector<char>& inside,
                   std::vector<DyadicCube<Dim>>& out) {
  const auto pts = q.lattice_points(grid);
  if (pts.empty()) return;
  std::size_t hits = 0;
  for (auto k : pts) hits += inside[k] ? 1 : 0;
  if (hits == 0) return;
  if (hits == pts.size()) {
    out.push_back(q);
    return;
  }
  for (const auto& c : q.children()) maximal_cubes(c, grid, inside, out);
}

}  // namespace detail

/**
 * Stopping-time construction of a sparse collection for |Tf| against
 * <f>_{r,Q}. Top cubes are the maximal dyadic cubes inside supp f u supp Tf.
 * In a cube Q with <f>_{r,Q} > 0 the children whose sup |Tf| exceeds
 * lambda <f>_{r,Q} are selected and recursed into; lambda starts at 2^{n+1}
 * and is doubled (at most 6 times) while the selected children leave less
 * than eta_target of Q. If that still fails, the children with the largest
 * sups are kept up to the allowed count. E(Q) is Q minus the selected children.
 */
template <int Dim>
SparseBuild<Dim> build_sparse_pointwise(const SampledFunction<Dim>& tf, const SampledFunction<Dim>& f, double r,
                                        double eta_target) {
  require(tf.grid == f.grid, "Tf and f live on different grids");
  require(eta_target > 0.0 && eta_target <= 1.0, "eta_target must lie in (0, 1]");
  require(tf.all_finite(), "Tf contains non-finite values");
  require(f.sup_norm() > 0.0, "f must not vanish identically");
  const auto& grid = f.grid;
  const auto n = grid.samples_per_axis();
  std::vector<double> mag(tf.size());
  std::vector<char> support(tf.size());
  for (std::size_t k = 0; k < tf.size(); ++k) {
    mag[k] = std::abs(tf[k]);
    support[k] = (mag[k] != 0.0 || f[k] != Complex{0.0, 0.0}) ? 1 : 0;
  }
  SparseBuild<Dim> out;
  out.collection.eta = eta_target;
  std::vector<DyadicCube<Dim>> stack;
  detail::maximal_cubes(DyadicCube<Dim>{}, grid, support, stack);
  std::reverse(stack.begin(), stack.end());

  while (!stack.empty()) {
    const DyadicCube<Dim> q = stack.back();
    stack.pop_back();
    ++out.stats.cubes;
    const auto points = q.lattice_points(grid);
    std::vector<DyadicCube<Dim>> chosen;
    const double avg = cube_average(f, r, q);
    if (avg > 0.0 && points.size() > 1) {
      std::vector<std::pair<double, DyadicCube<Dim>>> kids;
      for (const auto& c : q.children())
        if (c.lattice_count(n) > 0) kids.emplace_back(detail::cube_sup(mag, c, grid), c);
      auto allowed = [&](const std::vector<DyadicCube<Dim>>& sel) {
        std::size_t taken = 0;
        for (const auto& c : sel) taken += c.lattice_count(n);
        return static_cast<double>(points.size() - taken) >= eta_target * static_cast<double>(points.size());
      };
      double lambda = std::exp2(Dim + 1);
      for (int attempt = 0; attempt <= 6; ++attempt) {
        chosen.clear();
        for (const auto& [s, c] : kids)
          if (s > lambda * avg) chosen.push_back(c);
        if (allowed(chosen)) break;
        if (attempt == 6) {
          // Keep the strongest children while the witness bound holds.
          auto sorted = kids;
          std::stable_sort(sorted.begin(), sorted.end(),
                           [](const auto& a, const auto& b) { return a.first > b.first; });
          chosen.clear();
          for (const auto& [s, c] : sorted) {
            if (!(s > lambda * avg)) break;
            chosen.push_back(c);
            if (!allowed(chosen)) {
              chosen.pop_back();
              break;
            }
          }
          ++out.stats.forced;
          break;
        }
        lambda *= 2.0;
        ++out.stats.retries;
      }
    }
    typename SparseCollection<Dim>::Entry entry{q, {}};
    for (auto k : points) {
      const auto idx = grid.unflatten(k);
      if (std::none_of(chosen.begin(), chosen.end(), [&](const auto& c) { return c.contains_index(idx, n); }))
        entry.witness.push_back(k);
    }
    out.collection.entries.push_back(std::move(entry));
    for (auto it = chosen.rbegin(); it != chosen.rend(); ++it) stack.push_back(*it);
  }
  out.constant = verify_pointwise_domination(tf, out.collection, f, r);
  return out;
}

/// Lattice inner product sum Tf(x) conj(g(x)) h^n.
template <int Dim>
Complex lattice_pairing(const SampledFunction<Dim>& a, const SampledFunction<Dim>& b) {
  require(a.grid == b.grid, "functions live on different grids");
  Complex s{0.0, 0.0};
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * std::conj(b[k]);
  return s * a.grid.cell_volume();
}

/// sum over Q of <f>_{r,Q} <g>_{s',Q} |Q|.
template <int Dim>
double sparse_form_value(const SampledFunction<Dim>& f, const SampledFunction<Dim>& g, double r, double s_dual,
                         const SparseCollection<Dim>& s) {
  require(r >= 1.0 && s_dual >= 1.0, "sparse form exponents must be >= 1");
  double total = 0.0;
  for (const auto& e : s.entries)
    total += cube_average(f, r, e.cube) * cube_average(g, s_dual, e.cube) *
             std::pow(e.cube.side(f.grid.period()), Dim);
  return total;
}

struct FormCheck {
  double pairing = 0.0;
  double form = 0.0;
  double constant = 0.0;  // +infinity when the form vanishes but the pairing does not
};

template <int Dim>
FormCheck verify_form_domination(const SampledFunction<Dim>& tf, const SampledFunction<Dim>& f,
                                 const SampledFunction<Dim>& g, double r, double s_dual,
                                 const SparseCollection<Dim>& s) {
  FormCheck c;
  c.pairing = std::abs(lattice_pairing(tf, g));
  c.form = sparse_form_value(f, g, r, s_dual, s);
  if (c.form > 0.0)
    c.constant = c.pairing / c.form;
  else
    c.constant = c.pairing == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return c;
}

/**
 * Localized hypothesis check for a family of pieces T^j: each piece maps
 * f chi_{Q_j/3} to values at lattice probes. B_j is the largest ratio
 * |T^j(f chi_{Q_j/3})(x)| / <f>_{r,Q_j} over probes inside Q_j; probes
 * outside Q_j must see (numerically) zero output.
 */
template <int Dim>
struct LocalizedHypothesis {
  std::vector<double> bound;
  std::vector<bool> support_ok;
  double total = 0.0;
  bool violation = false;
};

template <int Dim>
using LocalizedPiece =
    std::function<std::vector<Complex>(const SampledFunction<Dim>&, const std::vector<std::size_t>&)>;

template <int Dim>
SampledFunction<Dim> restrict_to_third(const SampledFunction<Dim>& f, const DyadicCube<Dim>& q);

template <int Dim>
LocalizedHypothesis<Dim> check_localized_hypothesis(const std::vector<LocalizedPiece<Dim>>& pieces,
                                                    const SampledFunction<Dim>& f,
                                                    const std::vector<DyadicCube<Dim>>& cubes, double r,
                                                    const std::vector<std::size_t>& probes,
                                                    double support_tolerance = 1e-10) {
  require(pieces.size() == cubes.size(), "one cube per piece is required");
  LocalizedHypothesis<Dim> out;
  const auto n = f.grid.samples_per_axis();
  for (std::size_t j = 0; j < pieces.size(); ++j) {
    const auto values = pieces[j](restrict_to_third(f, cubes[j]), probes);
    require(values.size() == probes.size(), "piece returned the wrong number of values");
    const double avg = cube_average(f, r, cubes[j]);
    double inside = 0.0, outside = 0.0;
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const double v = std::abs(values[p]);
      if (cubes[j].contains_index(f.grid.unflatten(probes[p]), n))
        inside = std::max(inside, v);
      else
        outside = std::max(outside, v);
    }
    double b = 0.0;
    if (avg > 0.0)
      b = inside / avg;
    else if (inside > 0.0) {
      b = std::numeric_limits<double>::infinity();
      out.violation = true;
    }
    const bool ok = outside <= support_tolerance * std::max(1.0, inside);
    out.violation = out.violation || !ok;
    out.bound.push_back(b);
    out.support_ok.push_back(ok);
    out.total += b;
  }
  return out;
}

/// f chi_{Q/3}: restriction to the concentric cube of one third the side.
template <int Dim>
SampledFunction<Dim> restrict_to_third(const SampledFunction<Dim>& f, const DyadicCube<Dim>& q) {
  const auto& grid = f.grid;
  const Vec<Dim> c = q.center(grid.period());
  const double half = q.side(grid.period()) / 6.0;
  SampledFunction<Dim> out(grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vec<Dim> x = grid.point(k);
    bool inside = true;
    for (int i = 0; i < Dim; ++i) inside = inside && std::abs(std::remainder(x[i] - c[i], grid.period())) < half;
    if (inside) out[k] = f[k];
  }
  return out;
}

}  // namespace roughfio
