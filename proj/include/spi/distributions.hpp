#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <utility>

#include "json.hpp"
#include "spi/errors.hpp"
#include "spi/rng.hpp"

namespace spi {

namespace detail {

inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr double kInvSqrt2Pi = 0.3989422804014327;

inline double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

inline double standard_normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

// Acklam's rational approximation to the standard normal quantile, polished by
// one Halley step; good to ~1e-15 over (0,1).
// https://web.archive.org/web/20151030215612/http://home.online.no/~pjacklam/notes/invnorm/
inline double standard_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal quantile: p outside (0,1)");
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = standard_normal_cdf(x) - p;
  const double u = e / standard_normal_pdf(x);
  return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace detail

// A one-dimensional continuous score distribution. Immutable and shareable;
// sampling goes through the caller's engine via inverse-CDF so the draw stream
// is fully reproducible.
class Distribution {
 public:
  virtual ~Distribution() = default;
  virtual double cdf(double x) const = 0;
  virtual double pdf(double x) const = 0;
  virtual double quantile(double p) const = 0;
  virtual nlohmann::json to_json() const = 0;

  virtual double sample(std::mt19937_64& eng) const { return quantile(uniform01(eng)); }
};

using DistPtr = std::shared_ptr<const Distribution>;

class NormalDist final : public Distribution {
 public:
  NormalDist(double mu, double sigma) : mu_(mu), sigma_(sigma) {
    if (!(sigma > 0.0)) throw DomainError("normal: sigma must be > 0");
  }
  double cdf(double x) const override { return detail::standard_normal_cdf((x - mu_) / sigma_); }
  double pdf(double x) const override {
    return detail::standard_normal_pdf((x - mu_) / sigma_) / sigma_;
  }
  double quantile(double p) const override {
    return mu_ + sigma_ * detail::standard_normal_quantile(p);
  }
  nlohmann::json to_json() const override {
    return {{"family", "normal"}, {"mu", mu_}, {"sigma", sigma_}};
  }

 private:
  double mu_, sigma_;
};

class UniformDist final : public Distribution {
 public:
  UniformDist(double a, double b) : a_(a), b_(b) {
    if (!(a < b)) throw DomainError("uniform: need a < b");
  }
  double cdf(double x) const override {
    if (x <= a_) return 0.0;
    if (x >= b_) return 1.0;
    return (x - a_) / (b_ - a_);
  }
  double pdf(double x) const override { return (x < a_ || x > b_) ? 0.0 : 1.0 / (b_ - a_); }
  double quantile(double p) const override {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("uniform quantile: p outside (0,1)");
    return a_ + p * (b_ - a_);
  }
  nlohmann::json to_json() const override {
    return {{"family", "uniform"}, {"a", a_}, {"b", b_}};
  }

 private:
  double a_, b_;
};

class LogNormalDist final : public Distribution {
 public:
  LogNormalDist(double mu, double sigma) : mu_(mu), sigma_(sigma) {
    if (!(sigma > 0.0)) throw DomainError("lognormal: sigma must be > 0");
  }
  double cdf(double x) const override {
    if (x <= 0.0) return 0.0;
    return detail::standard_normal_cdf((std::log(x) - mu_) / sigma_);
  }
  double pdf(double x) const override {
    if (x <= 0.0) return 0.0;
    return detail::standard_normal_pdf((std::log(x) - mu_) / sigma_) / (sigma_ * x);
  }
  double quantile(double p) const override {
    return std::exp(mu_ + sigma_ * detail::standard_normal_quantile(p));
  }
  nlohmann::json to_json() const override {
    return {{"family", "lognormal"}, {"mu", mu_}, {"sigma", sigma_}};
  }

 private:
  double mu_, sigma_;
};

class LocScaleDist final : public Distribution {
 public:
  LocScaleDist(DistPtr base, double shift, double scale)
      : base_(std::move(base)), shift_(shift), scale_(scale) {
    if (!(scale > 0.0)) throw DomainError("locscale: scale must be > 0");
  }
  double cdf(double x) const override { return base_->cdf((x - shift_) / scale_); }
  double pdf(double x) const override { return base_->pdf((x - shift_) / scale_) / scale_; }
  double quantile(double p) const override { return shift_ + scale_ * base_->quantile(p); }
  nlohmann::json to_json() const override {
    return {{"family", "locscale"}, {"base", base_->to_json()}, {"shift", shift_}, {"scale", scale_}};
  }

 private:
  DistPtr base_;
  double shift_, scale_;
};

class MixtureDist final : public Distribution {
 public:
  MixtureDist(double weight, DistPtr a, DistPtr b)
      : w_(weight), a_(std::move(a)), b_(std::move(b)) {
    if (!(weight > 0.0 && weight < 1.0)) throw DomainError("mixture: weight outside (0,1)");
  }
  double cdf(double x) const override { return w_ * a_->cdf(x) + (1.0 - w_) * b_->cdf(x); }
  double pdf(double x) const override { return w_ * a_->pdf(x) + (1.0 - w_) * b_->pdf(x); }

  // The mixture CDF has no closed-form inverse; bisect between the component
  // quantiles, which always bracket the mixture quantile.
  double quantile(double p) const override {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("mixture quantile: p outside (0,1)");
    double lo = std::min(a_->quantile(p), b_->quantile(p));
    double hi = std::max(a_->quantile(p), b_->quantile(p));
    for (int iter = 0; iter < 200 && hi - lo > 0.0; ++iter) {
      double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      double f = cdf(mid);
      if (std::abs(f - p) <= 1e-13) return mid;
      (f < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  double sample(std::mt19937_64& eng) const override {
    const double pick = uniform01(eng);
    const double u = uniform01(eng);
    return pick < w_ ? a_->quantile(u) : b_->quantile(u);
  }

  nlohmann::json to_json() const override {
    return {{"family", "mixture"}, {"weight", w_}, {"a", a_->to_json()}, {"b", b_->to_json()}};
  }

 private:
  double w_;
  DistPtr a_, b_;
};

inline DistPtr make_normal(double mu, double sigma) {
  return std::make_shared<NormalDist>(mu, sigma);
}
inline DistPtr make_uniform(double a, double b) { return std::make_shared<UniformDist>(a, b); }
inline DistPtr make_lognormal(double mu, double sigma) {
  return std::make_shared<LogNormalDist>(mu, sigma);
}
inline DistPtr make_locscale(DistPtr base, double shift, double scale) {
  return std::make_shared<LocScaleDist>(std::move(base), shift, scale);
}
inline DistPtr make_mixture(double weight, DistPtr a, DistPtr b) {
  return std::make_shared<MixtureDist>(weight, std::move(a), std::move(b));
}

// {"family":"normal","mu":0,"sigma":1} and friends; see README for the schema.
inline DistPtr dist_from_json(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("family")) {
    throw ConfigError("distribution spec must be an object with a \"family\" field");
  }
  const std::string family = spec.at("family").get<std::string>();
  try {
    if (family == "normal") {
      return make_normal(spec.at("mu").get<double>(), spec.at("sigma").get<double>());
    }
    if (family == "uniform") {
      return make_uniform(spec.at("a").get<double>(), spec.at("b").get<double>());
    }
    if (family == "lognormal") {
      return make_lognormal(spec.at("mu").get<double>(), spec.at("sigma").get<double>());
    }
    if (family == "locscale") {
      return make_locscale(dist_from_json(spec.at("base")), spec.at("shift").get<double>(),
                           spec.at("scale").get<double>());
    }
    if (family == "mixture") {
      return make_mixture(spec.at("weight").get<double>(), dist_from_json(spec.at("a")),
                          dist_from_json(spec.at("b")));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad distribution spec for family '" + family + "': " + e.what());
  }
  throw ConfigError("unknown distribution family '" + family + "'");
}

}  // namespace spi
