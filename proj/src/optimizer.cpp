#include "lacal/optimizer.hpp"

#include "lacal/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace lacal {

namespace {

constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

double sanitize(double v) { return std::isfinite(v) ? v : kMinusInf; }

std::vector<double> key_of(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

BoxDomain BoxDomain::unit(Index dim) { return BoxDomain{Vector::Zero(dim), Vector::Ones(dim)}; }

void BoxDomain::validate() const {
  require(lower.size() >= 1 && lower.size() == upper.size(), "box: bounds must be nonempty and of equal length");
  require(lower.allFinite() && upper.allFinite(), "box: bounds must be finite");
  require((lower.array() < upper.array()).all(), "box: need lower < upper in every dimension");
}

bool BoxDomain::contains(const Vector& point) const {
  return point.size() == dim() && (point.array() >= lower.array()).all() && (point.array() <= upper.array()).all();
}

Vector BoxDomain::project(const Vector& point) const { return point.cwiseMax(lower).cwiseMin(upper); }

double BoxDomain::min_width() const { return (upper - lower).minCoeff(); }

InitResult space_filling_init(const Objective& objective, const BoxDomain& box, Index candidate_count, Index keep,
                              Rng& rng) {
  box.validate();
  require(candidate_count >= 1 && keep >= 1, "space-filling init: counts must be positive");
  require(keep <= candidate_count, "space-filling init: keep exceeds candidate count");
  const DesignMatrix unit = lhs_sample(candidate_count, box.dim(), rng);
  const std::vector<Index> chosen = maximin_subset(unit, keep, rng);

  InitResult out;
  out.best_value = kMinusInf;
  for (Index row : chosen) {
    Vector u = box.lower.array() + unit.row(row).transpose().array() * (box.upper - box.lower).array();
    double value = kMinusInf;
    try {
      value = sanitize(objective(u));
    } catch (const std::exception&) {
      value = kMinusInf;
    }
    if (out.trace.empty() || value > out.best_value) {
      out.best = u;
      out.best_value = value;
    }
    out.trace.push_back({std::move(u), value});
  }
  return out;
}

MeshState maximize(const Objective& objective, const BoxDomain& box, const Vector& start,
                   const OptimizerSettings& settings, std::optional<double> start_value) {
  box.validate();
  require(box.contains(start), "maximize: start must lie in the box");
  const double init_mesh = settings.init_mesh_size > 0.0 ? settings.init_mesh_size : 0.25 * box.min_width();
  require(settings.min_mesh_size > 0.0 && settings.min_mesh_size < init_mesh,
          "maximize: need 0 < min_mesh_size < init_mesh_size");
  require(settings.max_evaluations >= 1, "maximize: max_evaluations must be positive");

  MeshState state;
  std::map<std::vector<double>, double> cache;
  auto evaluate = [&](const Vector& u) {
    const double v = sanitize(objective(u));
    ++state.evaluations;
    state.trace.push_back({u, v});
    cache.emplace(key_of(u), v);
    return v;
  };

  state.incumbent = start;
  state.mesh_size = init_mesh;
  if (start_value) {
    state.incumbent_value = sanitize(*start_value);
    cache.emplace(key_of(start), state.incumbent_value);
  } else {
    state.incumbent_value = evaluate(start);
  }
  require(std::isfinite(state.incumbent_value), "maximize: objective is not finite at the start");

  const Index q = box.dim();
  while (state.mesh_size >= settings.min_mesh_size && state.evaluations < settings.max_evaluations) {
    ++state.iterations;
    // Poll points in fixed direction order.
    std::vector<Vector> poll;
    for (Index i = 0; i < q; ++i) {
      for (double sign : {1.0, -1.0}) {
        Vector u = state.incumbent;
        u[i] += sign * state.mesh_size;
        u = box.project(u);
        if (u != state.incumbent) poll.push_back(std::move(u));
      }
    }

    Index improved = -1;
    double improved_value = state.incumbent_value;
    if (settings.opportunistic) {
      for (std::size_t j = 0; j < poll.size(); ++j) {
        double v;
        const auto hit = cache.find(key_of(poll[j]));
        if (hit != cache.end()) {
          v = hit->second;
        } else {
          if (state.evaluations >= settings.max_evaluations) break;
          v = evaluate(poll[j]);
        }
        if (v > improved_value) {
          improved = static_cast<Index>(j);
          improved_value = v;
          break;
        }
      }
    } else {
      std::vector<double> values(poll.size(), kMinusInf);
      std::vector<std::size_t> fresh;
      for (std::size_t j = 0; j < poll.size(); ++j) {
        const auto hit = cache.find(key_of(poll[j]));
        if (hit != cache.end()) {
          values[j] = hit->second;
        } else if (std::find_if(fresh.begin(), fresh.end(), [&](std::size_t f) { return poll[f] == poll[j]; }) ==
                   fresh.end()) {
          fresh.push_back(j);
        }
      }
      const std::size_t budget = static_cast<std::size_t>(settings.max_evaluations - state.evaluations);
      if (fresh.size() > budget) fresh.resize(budget);
      std::vector<double> fresh_values(fresh.size());
      parallel_for(fresh.size(), settings.threads,
                   [&](std::size_t f) { fresh_values[f] = sanitize(objective(poll[fresh[f]])); });
      for (std::size_t f = 0; f < fresh.size(); ++f) {
        ++state.evaluations;
        state.trace.push_back({poll[fresh[f]], fresh_values[f]});
        cache.emplace(key_of(poll[fresh[f]]), fresh_values[f]);
      }
      for (std::size_t j = 0; j < poll.size(); ++j) {
        const auto hit = cache.find(key_of(poll[j]));
        if (hit != cache.end()) values[j] = hit->second;
        if (values[j] > improved_value) {
          improved = static_cast<Index>(j);
          improved_value = values[j];
        }
      }
    }

    if (improved >= 0) {
      state.incumbent = poll[static_cast<std::size_t>(improved)];
      state.incumbent_value = improved_value;
      state.mesh_size = std::min(2.0 * state.mesh_size, init_mesh);
    } else {
      state.mesh_size *= 0.5;
    }
  }
  state.converged = state.mesh_size < settings.min_mesh_size;
  return state;
}

}  // namespace lacal
