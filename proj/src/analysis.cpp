#include "bdia/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <random>

#include "json.hpp"

#include "bdia/errors.hpp"
#include "bdia/kernels.hpp"
#include "bdia/parallel.hpp"
#include "bdia/random.hpp"

namespace bdia {

namespace {

std::size_t common_dim(const SampleSet& a, const SampleSet& b) {
  if (a.empty() || b.empty()) throw ShapeError("sample sets must be non-empty");
  const std::size_t dim = a.front().size();
  if (dim == 0) throw ShapeError("samples are empty vectors");
  for (const auto& x : a) {
    if (x.size() != dim) throw ShapeError("samples differ in dimension");
  }
  for (const auto& x : b) {
    if (x.size() != dim) throw ShapeError("samples differ in dimension");
  }
  return dim;
}

// Column-major copy: coordinate k of sample j at [k * n + j].
Vector to_columns(const SampleSet& s, std::size_t dim) {
  const std::size_t n = s.size();
  Vector cols(dim * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < dim; ++k) cols[k * n + j] = s[j][k];
  }
  return cols;
}

// Sum of ||x_i - y_j|| over all pairs.  Row sums are reduced in row order.
double all_pairs_sum(const SampleSet& x, const SampleSet& y, std::size_t dim,
                     int workers) {
  const Vector cols = to_columns(y, dim);
  const auto& table = kernels::active();
  std::vector<double> rows(x.size());
  parallel_for(x.size(), workers, [&](std::size_t i) {
    rows[i] = table.distance_sum(x[i].data(), cols.data(), y.size(), y.size(), dim);
  });
  double total = 0.0;
  for (double r : rows) total += r;
  return total;
}

double sampled_pairs_mean(const SampleSet& x, const SampleSet& y, std::size_t pairs,
                          std::uint64_t seed, int workers) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_x(0, x.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_y(0, y.size() - 1);
  std::vector<std::pair<std::size_t, std::size_t>> idx(pairs);
  for (auto& p : idx) {
    p.first = pick_x(rng);
    p.second = pick_y(rng);
  }
  std::vector<double> dist(pairs);
  parallel_for(pairs, workers, [&](std::size_t k) {
    dist[k] = std::sqrt(kernels::squared_distance(x[idx[k].first], y[idx[k].second]));
  });
  double total = 0.0;
  for (double d : dist) total += d;
  return total / static_cast<double>(pairs);
}

// Strict weak order on sample sets used to fix the argument orientation.
bool canonical_less(const SampleSet& a, const SampleSet& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

ReconstructionError reconstruction_error(const SampleSet& original,
                                         const SampleSet& reconstructed) {
  if (original.size() != reconstructed.size()) {
    throw ShapeError("batches differ in length");
  }
  ReconstructionError out;
  double sq = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    const auto& x = original[i];
    const auto& y = reconstructed[i];
    if (x.size() != y.size()) throw ShapeError("batch entries differ in dimension");
    const double worst = kernels::max_abs_diff(x, y);
    if (std::isnan(worst)) return {worst, worst};
    out.max_abs = std::max(out.max_abs, worst);
    sq += kernels::squared_distance(x, y);
    count += x.size();
  }
  out.rms = count == 0 ? 0.0 : std::sqrt(sq / static_cast<double>(count));
  return out;
}

double energy_distance(const SampleSet& a, const SampleSet& b,
                       const EnergyDistanceOptions& options) {
  const std::size_t dim = common_dim(a, b);
  const bool swap = canonical_less(b, a);
  const SampleSet& first = swap ? b : a;
  const SampleSet& second = swap ? a : b;
  const int w = options.workers;

  double within_first = 0.0;
  double within_second = 0.0;
  double cross = 0.0;
  if (first.size() > options.subsample_threshold ||
      second.size() > options.subsample_threshold) {
    if (options.pairs == 0) throw ConfigError("energy distance needs pairs >= 1");
    within_first = sampled_pairs_mean(first, first, options.pairs,
                                      substream_seed(options.seed, "ed-first"), w);
    within_second = sampled_pairs_mean(second, second, options.pairs,
                                       substream_seed(options.seed, "ed-second"), w);
    cross = sampled_pairs_mean(first, second, options.pairs,
                               substream_seed(options.seed, "ed-cross"), w);
  } else {
    const double nf = static_cast<double>(first.size());
    const double ns = static_cast<double>(second.size());
    within_first = all_pairs_sum(first, first, dim, w) / (nf * nf);
    within_second = all_pairs_sum(second, second, dim, w) / (ns * ns);
    cross = all_pairs_sum(first, second, dim, w) / (nf * ns);
  }
  return 2.0 * cross - (within_first + within_second);
}

double sliced_w1(const SampleSet& a, const SampleSet& b, const SlicedW1Options& options) {
  const std::size_t dim = common_dim(a, b);
  if (options.projections < 1) throw ConfigError("sliced_w1 needs projections >= 1");
  const std::size_t m = static_cast<std::size_t>(options.projections);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> dirs(m, Vector(dim));
  for (auto& d : dirs) {
    double norm = 0.0;
    do {
      for (double& x : d) x = normal(rng);
      norm = std::sqrt(kernels::squared_distance(d, Vector(dim, 0.0)));
    } while (!(norm > 0.0));
    for (double& x : d) x /= norm;
  }

  std::vector<double> per(m);
  parallel_for(m, options.workers, [&](std::size_t p) {
    const Vector& d = dirs[p];
    auto project = [&](const SampleSet& s) {
      Vector out(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < dim; ++k) acc += s[i][k] * d[k];
        out[i] = acc;
      }
      std::sort(out.begin(), out.end());
      return out;
    };
    const Vector pa = project(a);
    const Vector pb = project(b);
    const double na = static_cast<double>(pa.size());
    const double nb = static_cast<double>(pb.size());
    std::size_t ia = 0;
    std::size_t ib = 0;
    double prev = std::min(pa.front(), pb.front());
    double total = 0.0;
    while (ia < pa.size() || ib < pb.size()) {
      const bool take_a = ib == pb.size() || (ia < pa.size() && pa[ia] <= pb[ib]);
      const double x = take_a ? pa[ia] : pb[ib];
      total += std::fabs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb) *
               (x - prev);
      prev = x;
      if (take_a) {
        ++ia;
      } else {
        ++ib;
      }
    }
    per[p] = total;
  });
  double total = 0.0;
  for (double v : per) total += v;
  return total / static_cast<double>(m);
}

double convergence_order(const std::vector<std::pair<double, double>>& h_and_error) {
  if (h_and_error.size() < 3) throw ConfigError("convergence_order needs >= 3 points");
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& [h, e] : h_and_error) {
    if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("step sizes must be positive");
    if (!(e > 0.0) || !std::isfinite(e)) throw DomainError("errors must be positive");
    x.push_back(std::log(h));
    y.push_back(std::log(e));
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  if (!(sxx > 0.0)) throw DomainError("step sizes must not all be equal");
  return sxy / sxx;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string report_csv_header() {
  return "solver,n_steps,param,terminal_error,roundtrip_error,energy_distance,"
         "sliced_w1,nfe,wall_time_s";
}

std::string report_csv_row(const ComparisonReport& r) {
  std::string row = r.solver;
  row += ',' + std::to_string(r.n_steps);
  for (double v : {r.param, r.terminal_error, r.roundtrip_error, r.energy_distance,
                   r.sliced_w1}) {
    row += ',' + format_double(v);
  }
  row += ',' + std::to_string(r.nfe);
  row += ',' + format_double(r.wall_time_s);
  return row;
}

void write_reports_csv(std::ostream& out, const std::vector<ComparisonReport>& reports) {
  out << report_csv_header() << '\n';
  for (const auto& r : reports) out << report_csv_row(r) << '\n';
}

void write_reports_json(std::ostream& out,
                        const std::vector<ComparisonReport>& reports) {
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    row["solver"] = r.solver;
    row["n_steps"] = r.n_steps;
    row["param"] = num(r.param);
    row["terminal_error"] = num(r.terminal_error);
    row["roundtrip_error"] = num(r.roundtrip_error);
    row["energy_distance"] = num(r.energy_distance);
    row["sliced_w1"] = num(r.sliced_w1);
    row["nfe"] = r.nfe;
    row["wall_time_s"] = num(r.wall_time_s);
    arr.push_back(std::move(row));
  }
  out << arr.dump(2) << '\n';
}

}  // namespace bdia
