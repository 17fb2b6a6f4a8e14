#include "gsc/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gsc/errors.hpp"

namespace gsc {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kLn2 = 0.6931471805599453;

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// sigmoid'(x) = sigmoid(x) * (1 - sigmoid(x)), symmetric in x.
double sigmoid_deriv(double x) {
  double e = std::exp(-std::abs(x));
  double d = 1.0 + e;
  return e / (d * d);
}

}  // namespace

GaussianBin gaussian_bin(double v, double mu, double sigma) {
  if (!std::isfinite(v) || !std::isfinite(mu) || !std::isfinite(sigma) ||
      sigma <= 0.0) {
    throw EvalError("gaussian_bin: non-finite input or non-positive scale");
  }
  // Reflect to d >= 0 so both tail arguments grow together; p and dp/dsigma
  // are even in (v - mu), dp/dv is odd.
  double d = v - mu;
  double sign = 1.0;
  if (d < 0.0) {
    d = -d;
    sign = -1.0;
  }
  const double zl = (d - 0.5) / sigma;
  const double zh = (d + 0.5) / sigma;
  const double p = 0.5 * (std::erfc(zl / kSqrt2) - std::erfc(zh / kSqrt2));
  const double pl = normal_pdf(zl);
  const double ph = normal_pdf(zh);

  GaussianBin out;
  out.p = p;
  out.dp_dv = sign * (ph - pl) / sigma;
  out.dp_dmu = -out.dp_dv;
  out.dp_dsigma = -(ph * zh - pl * zl) / sigma;
  return out;
}

LogisticBin logistic_bin(double v, double loc, double log_scale) {
  if (!std::isfinite(v) || !std::isfinite(loc) || !std::isfinite(log_scale)) {
    throw EvalError("logistic_bin: non-finite input");
  }
  const double s = std::exp(log_scale);
  double d = v - loc;
  double sign = 1.0;
  if (d < 0.0) {
    d = -d;
    sign = -1.0;
  }
  const double ul = (d - 0.5) / s;
  const double uh = (d + 0.5) / s;
  // F(uh) - F(ul) = F(-ul) - F(-uh); the right side keeps both sigmoid
  // arguments on the small side for d in the tail.
  const double p = stable_sigmoid(-ul) - stable_sigmoid(-uh);
  const double gl = sigmoid_deriv(ul);
  const double gh = sigmoid_deriv(uh);

  LogisticBin out;
  out.p = p;
  out.dp_dv = sign * (gh - gl) / s;
  out.dp_dloc = -out.dp_dv;
  out.dp_dlog_scale = -(gh * uh - gl * ul);
  return out;
}

FactorizedEval factorized_bits_eval(const FactorizedModel& m, const Tensor& latents) {
  if (latents.rank() != 3) {
    throw DimensionError("factorized_bits_eval: expected rank-3 grid, got " +
                         latents.shape_str());
  }
  const int c = latents.dim(2);
  if (c != m.channels()) {
    throw DimensionError("factorized_bits_eval: grid has " + std::to_string(c) +
                         " channels, model has " + std::to_string(m.channels()));
  }

  FactorizedEval out;
  out.d_latents = Tensor::zeros_like(latents);
  out.d_loc = Tensor({c});
  out.d_log_scale = Tensor({c});

  const double* z = latents.data();
  double* dz = out.d_latents.data();
  const int64_t n = latents.size();
  for (int64_t i = 0; i < n; ++i) {
    const int ch = static_cast<int>(i % c);
    LogisticBin b = logistic_bin(z[i], m.loc[ch], m.log_scale[ch]);
    double p = b.p;
    if (p < kLikelihoodFloor) {
      p = kLikelihoodFloor;
      ++out.clamped;
    }
    out.bits += -std::log2(p);
    const double f = -1.0 / (p * kLn2);
    dz[i] = f * b.dp_dv;
    out.d_loc[ch] += f * b.dp_dloc;
    out.d_log_scale[ch] += f * b.dp_dlog_scale;
  }
  return out;
}

GaussianEval gaussian_bits_eval(const Tensor& latents, const Tensor& mu,
                                const Tensor& sigma) {
  require_same_shape(latents, mu, "gaussian_bits_eval mu");
  require_same_shape(latents, sigma, "gaussian_bits_eval sigma");

  GaussianEval out;
  out.d_latents = Tensor::zeros_like(latents);
  out.d_mu = Tensor::zeros_like(latents);
  out.d_sigma = Tensor::zeros_like(latents);

  const double* y = latents.data();
  const double* m = mu.data();
  const double* s = sigma.data();
  double* dy = out.d_latents.data();
  double* dm = out.d_mu.data();
  double* ds = out.d_sigma.data();
  const int64_t n = latents.size();
  for (int64_t i = 0; i < n; ++i) {
    GaussianBin b = gaussian_bin(y[i], m[i], s[i]);
    double p = b.p;
    if (p < kLikelihoodFloor) {
      p = kLikelihoodFloor;
      ++out.clamped;
    }
    out.bits += -std::log2(p);
    const double f = -1.0 / (p * kLn2);
    dy[i] = f * b.dp_dv;
    dm[i] = f * b.dp_dmu;
    ds[i] = f * b.dp_dsigma;
  }
  return out;
}

double DiscretePmf::coded_bits(int32_t v) const {
  if (contains(v)) {
    return 16.0 - std::log2(static_cast<double>(freq[static_cast<size_t>(v - min_symbol)]));
  }
  // 16-bit escape slot followed by a 16-bit raw bypass.
  return 32.0;
}

void DiscretePmf::validate() const {
  if (freq.empty()) throw CoderError("pmf: empty support");
  if (cum.size() != freq.size() + 1 || cum.front() != 0) {
    throw CoderError("pmf: malformed prefix sums");
  }
  uint64_t total = 0;
  for (size_t i = 0; i < freq.size(); ++i) {
    if (freq[i] == 0) throw CoderError("pmf: zero frequency in support");
    total += freq[i];
    if (cum[i + 1] != cum[i] + freq[i]) throw CoderError("pmf: malformed prefix sums");
  }
  if (total != kTotal - kEscapeFreq) {
    throw CoderError("pmf: frequencies sum to " + std::to_string(total) +
                     ", expected " + std::to_string(kTotal - kEscapeFreq));
  }
}

DiscretePmf DiscretePmf::from_counts(int32_t min_symbol, std::vector<uint32_t> counts) {
  DiscretePmf pmf;
  pmf.min_symbol = min_symbol;
  pmf.freq = std::move(counts);
  pmf.cum.assign(pmf.freq.size() + 1, 0);
  for (size_t i = 0; i < pmf.freq.size(); ++i) pmf.cum[i + 1] = pmf.cum[i] + pmf.freq[i];
  pmf.validate();
  return pmf;
}

namespace {

// Shared discretizer: bin masses over a candidate +/- 12-standard-deviation
// grid, largest-remainder rounding to 2^16 - 1 counts, then zero-count edge
// bins are trimmed so every retained frequency is positive.
DiscretePmf discretize_grid(const std::vector<double>& mass, int32_t lo) {
  const size_t n = mass.size();
  constexpr uint32_t kBudget = DiscretePmf::kTotal - DiscretePmf::kEscapeFreq;

  double total_mass = 0.0;
  for (double m : mass) total_mass += m;
  if (!(total_mass > 0.0) || !std::isfinite(total_mass)) {
    throw CoderError("discretize: degenerate bin masses");
  }

  std::vector<uint32_t> counts(n, 0);
  std::vector<std::pair<double, size_t>> remainder(n);
  uint64_t assigned = 0;
  for (size_t i = 0; i < n; ++i) {
    double target = mass[i] / total_mass * static_cast<double>(kBudget);
    double fl = std::floor(target);
    counts[i] = static_cast<uint32_t>(fl);
    assigned += counts[i];
    remainder[i] = {target - fl, i};
  }
  // Largest remainder first; ties resolved toward the lower symbol so the
  // table is a pure function of the masses.
  std::sort(remainder.begin(), remainder.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  uint64_t leftover = kBudget - assigned;
  for (uint64_t k = 0; k < leftover; ++k) {
    counts[remainder[k % n].second] += 1;
  }

  size_t first = 0;
  while (first < n && counts[first] == 0) ++first;
  size_t last = n;
  while (last > first && counts[last - 1] == 0) --last;
  if (first == last) throw CoderError("discretize: no symbols received mass");

  std::vector<uint32_t> core(counts.begin() + static_cast<std::ptrdiff_t>(first),
                             counts.begin() + static_cast<std::ptrdiff_t>(last));
  // Interior zeros are possible only for near-flat masses; keep every
  // retained symbol codable by borrowing from the current peak.
  for (size_t i = 0; i < core.size(); ++i) {
    if (core[i] != 0) continue;
    size_t peak = static_cast<size_t>(
        std::max_element(core.begin(), core.end()) - core.begin());
    if (core[peak] < 2) throw CoderError("discretize: support too wide for 16-bit counts");
    core[peak] -= 1;
    core[i] += 1;
  }

  return DiscretePmf::from_counts(lo + static_cast<int32_t>(first), std::move(core));
}

}  // namespace

DiscretePmf discretize_gaussian(double mu, double sigma) {
  if (!std::isfinite(mu) || !std::isfinite(sigma) || sigma <= 0.0) {
    throw CoderError("discretize_gaussian: bad parameters");
  }
  const double hw = 12.0 * sigma;
  const int32_t lo = static_cast<int32_t>(std::floor(mu - hw));
  const int32_t hi = static_cast<int32_t>(std::ceil(mu + hw));
  const int64_t n = static_cast<int64_t>(hi) - lo + 1;
  if (n > (1 << 20)) throw CoderError("discretize_gaussian: scale too large");

  std::vector<double> mass(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    mass[static_cast<size_t>(i)] = gaussian_bin(static_cast<double>(lo + i), mu, sigma).p;
  }
  return discretize_grid(mass, lo);
}

DiscretePmf discretize_logistic(double loc, double log_scale) {
  if (!std::isfinite(loc) || !std::isfinite(log_scale)) {
    throw CoderError("discretize_logistic: bad parameters");
  }
  const double s = std::exp(log_scale);
  // Logistic standard deviation is s*pi/sqrt(3); match the Gaussian's
  // +/- 12-standard-deviation candidate span.
  const double hw = 12.0 * s * 1.8137993642342178;
  const int32_t lo = static_cast<int32_t>(std::floor(loc - hw));
  const int32_t hi = static_cast<int32_t>(std::ceil(loc + hw));
  const int64_t n = static_cast<int64_t>(hi) - lo + 1;
  if (n > (1 << 20)) throw CoderError("discretize_logistic: scale too large");

  std::vector<double> mass(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    mass[static_cast<size_t>(i)] = logistic_bin(static_cast<double>(lo + i), loc, log_scale).p;
  }
  return discretize_grid(mass, lo);
}

}  // namespace gsc
