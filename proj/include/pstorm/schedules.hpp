#ifndef PSTORM_SCHEDULES_HPP
#define PSTORM_SCHEDULES_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pstorm/error.hpp"

namespace pstorm {

// Parameter laws for the momentum estimator.
//
//   Varying     eta_k = eta / (L (k+4)^{1/3}),  beta_k from the ratio eta_{k+1}/eta_k
//   ConstantI   eta_k = eta / (L K^{1/3}),      beta_k = constant coupled to (eta, m, K)
//   ConstantII  eta_k = eta / (L K^{1/3}),      beta_k = 3[(k+3)^{1/3} - (k+2)^{1/3}]
//   Fixed       eta_k = eta, beta_k = beta      (hand-picked; no theory invariant)
enum class ScheduleKind { Varying, ConstantI, ConstantII, Fixed };

inline const char* to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Varying: return "varying";
    case ScheduleKind::ConstantI: return "constant1";
    case ScheduleKind::ConstantII: return "constant2";
    case ScheduleKind::Fixed: return "fixed";
  }
  return "?";
}

inline std::optional<ScheduleKind> parse_schedule_kind(const std::string& s) {
  if (s == "varying") return ScheduleKind::Varying;
  if (s == "constant1" || s == "constant-i") return ScheduleKind::ConstantI;
  if (s == "constant2" || s == "constant-ii") return ScheduleKind::ConstantII;
  if (s == "fixed") return ScheduleKind::Fixed;
  return std::nullopt;
}

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::Varying;
  double eta = 0.1;        // the eta inside each law; the stepsize itself for Fixed
  double L = 1.0;          // smoothness constant
  std::size_t m = 1;       // minibatch size
  std::size_t K = 1;       // horizon; used by ConstantI/ConstantII and the validators
  double fixed_beta = 1.0; // Fixed only
};

// Upper bound on eta for the Varying law.
inline double varying_eta_max() { return std::cbrt(4.0) / 8.0; }

class Schedule {
 public:
  // enforce = false skips the theory bounds on eta (the beta values must still
  // land in range when queried).
  explicit Schedule(const ScheduleSpec& spec, bool enforce = true) : spec_(spec) {
    if (!(spec.eta > 0.0) || !std::isfinite(spec.eta)) throw ParameterError("schedule: eta must be positive");
    if (!(spec.L > 0.0) || !std::isfinite(spec.L)) throw ParameterError("schedule: L must be positive");
    if (spec.m == 0) throw ParameterError("schedule: m must be positive");
    if (spec.K == 0) throw ParameterError("schedule: K must be positive");
    const double cbrt_k = std::cbrt(static_cast<double>(spec.K));
    switch (spec.kind) {
      case ScheduleKind::Varying:
        if (enforce && spec.eta > varying_eta_max())
          throw ParameterError("varying schedule requires eta <= cbrt(4)/8 = " + fmt(varying_eta_max()));
        break;
      case ScheduleKind::ConstantI:
        if (enforce && !(spec.eta < cbrt_k / 5.0))
          throw ParameterError("constant-I schedule requires eta < cbrt(K)/5 = " + fmt(cbrt_k / 5.0));
        if (spec.eta > cbrt_k / 10.0)
          warnings_.push_back("constant-I: eta = " + fmt(spec.eta) + " exceeds cbrt(K)/10 = " + fmt(cbrt_k / 10.0) +
                              "; the complexity bound needs eta <= cbrt(K)/10");
        constant_beta_ = constant1_beta();
        break;
      case ScheduleKind::ConstantII:
        if (enforce && spec.eta > 0.25) throw ParameterError("constant-II schedule requires eta <= 1/4");
        break;
      case ScheduleKind::Fixed:
        if (!(spec.fixed_beta >= 0.0 && spec.fixed_beta <= 1.0))
          throw ParameterError("fixed schedule: beta must lie in [0, 1]");
        break;
    }
  }

  static Schedule fixed(double eta, double beta, double L = 1.0, std::size_t m = 1, std::size_t K = 1) {
    return Schedule(ScheduleSpec{ScheduleKind::Fixed, eta, L, m, K, beta});
  }

  const ScheduleSpec& spec() const { return spec_; }
  ScheduleKind kind() const { return spec_.kind; }
  double L() const { return spec_.L; }
  std::size_t m() const { return spec_.m; }
  std::size_t K() const { return spec_.K; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  // Defined for every k >= 0, including k = K.
  double eta_at(std::size_t k) const {
    switch (spec_.kind) {
      case ScheduleKind::Varying:
        return spec_.eta / (spec_.L * std::cbrt(static_cast<double>(k) + 4.0));
      case ScheduleKind::ConstantI:
      case ScheduleKind::ConstantII:
        return spec_.eta / (spec_.L * std::cbrt(static_cast<double>(spec_.K)));
      case ScheduleKind::Fixed:
        return spec_.eta;
    }
    return 0.0;
  }

  double beta_at(std::size_t k) const {
    double beta = 0.0;
    switch (spec_.kind) {
      case ScheduleKind::Varying: {
        const double ek = eta_at(k);
        const double ratio = eta_at(k + 1) / ek;
        const double s = ek * ek * spec_.L * spec_.L;
        beta = (1.0 + 24.0 * s - ratio) / (1.0 + 4.0 * s);
        break;
      }
      case ScheduleKind::ConstantI:
        beta = constant_beta_;
        break;
      case ScheduleKind::ConstantII: {
        const double kk = static_cast<double>(k);
        beta = 3.0 * (std::cbrt(kk + 3.0) - std::cbrt(kk + 2.0));
        break;
      }
      case ScheduleKind::Fixed:
        return spec_.fixed_beta;
    }
    if (!(beta > 0.0 && beta < 1.0))
      throw ScheduleError("beta_" + std::to_string(k) + " = " + fmt(beta) + " lies outside (0, 1)");
    return beta;
  }

 private:
  static std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
  }

  double constant1_beta() const {
    const double eta = spec_.eta;
    const double m = static_cast<double>(spec_.m);
    const double cbrt_k = std::cbrt(static_cast<double>(spec_.K));
    const double num = 4.0 * eta * eta / m + 10.0 * eta * eta * (2.0 - eta / cbrt_k);
    const double den = cbrt_k * cbrt_k + 4.0 * eta * eta / m;
    return num / den;
  }

  ScheduleSpec spec_;
  double constant_beta_ = 0.0;
  std::vector<std::string> warnings_;
};

// Gamma_0 = 1, Gamma_{k+1} = Gamma_k (1 - beta_k)^2; entries 0..K.
inline std::vector<double> gamma_table(const Schedule& s) {
  std::vector<double> g(s.K() + 1);
  g[0] = 1.0;
  for (std::size_t k = 0; k < s.K(); ++k) {
    const double f = 1.0 - s.beta_at(k);
    g[k + 1] = g[k] * f * f;
  }
  return g;
}

struct Thm1Check {
  bool ok = true;
  std::optional<std::size_t> first_violation;
  int condition = 0;  // 1 or 2 when violated
  double value = 0.0; // left-hand side at the violation

  std::string describe() const {
    if (ok) return "both descent conditions hold";
    std::ostringstream os;
    os.precision(10);
    if (condition == 1)
      os << "violated at k = " << *first_violation
         << ": (1 - eta_k L)/4 - eta_k (1 - beta_k)^2 / (5 m eta_{k+1}) = " << value << " is not > 0";
    else
      os << "violated at k = " << *first_violation
         << ": eta_k (2 - eta_k L)/2 - 1/(20 eta_k L^2) + (1 - beta_k)^2 (1 + 4 eta_k^2 L^2 / m) / (20 eta_{k+1} L^2) = "
         << value << " is not <= 0";
    return os.str();
  }
};

// Slack applied to every validator inequality.
inline constexpr double kValidatorSlack = 1e-12;

// Both inequalities guaranteeing descent of the merit function for k < K.
inline Thm1Check validate_thm1(const Schedule& s, std::size_t K) {
  const double L = s.L();
  const double m = static_cast<double>(s.m());
  Thm1Check out;
  double eta_next = s.eta_at(0);
  for (std::size_t k = 0; k < K; ++k) {
    const double ek = eta_next;
    eta_next = s.eta_at(k + 1);
    const double beta = s.beta_at(k);
    const double q = (1.0 - beta) * (1.0 - beta);
    const double c1 = 0.25 * (1.0 - ek * L) - ek / (5.0 * m * eta_next) * q;
    if (!(c1 > -kValidatorSlack) || ek * L >= 1.0) {
      return Thm1Check{false, k, 1, c1};
    }
    const double c2 = 0.5 * ek * (2.0 - ek * L) - 1.0 / (20.0 * ek * L * L) +
                      q * (1.0 + 4.0 * ek * ek * L * L / m) / (20.0 * eta_next * L * L);
    if (!(c2 <= kValidatorSlack)) return Thm1Check{false, k, 2, c2};
  }
  return out;
}

struct Thm5Check {
  bool ok = true;
  bool condition1 = true;
  std::optional<std::size_t> first_violation;
  double A = 0.0;        // sum_{k>=1} eta_k Gamma_k
  double B = 0.0;        // sum_{k>=1} eta_k Gamma_k sum_{j<k} beta_j^2 / Gamma_{j+1}
  double A_bound = 0.0;
  double B_bound = 0.0;
  bool A_within = true;
  bool B_within = true;

  std::string describe() const {
    std::ostringstream os;
    os.precision(10);
    if (!condition1) os << "step condition violated at k = " << *first_violation << "; ";
    os << "A = " << A << (A_within ? " <= " : " > ") << A_bound << ", B = " << B << (B_within ? " <= " : " > ")
       << B_bound;
    return os.str();
  }
};

// S_k = sum_{j=k+1}^{K-1} eta_j Gamma_j / Gamma_k for k = 0..K-1, by the
// backward recursion S_k = (1 - beta_k)^2 (eta_{k+1} + S_{k+1}). Avoids
// forming Gamma_k, which underflows for long horizons.
inline std::vector<double> discounted_eta_tails(const Schedule& s) {
  const std::size_t K = s.K();
  std::vector<double> tail(K, 0.0);
  for (std::size_t k = K - 1; k-- > 0;) {
    const double f = 1.0 - s.beta_at(k);
    tail[k] = f * f * (s.eta_at(k + 1) + tail[k + 1]);
  }
  return tail;
}

// Step condition and the two accumulated constants for the constant-II law,
// checked against the closed-form bounds on A and B.
inline Thm5Check validate_thm5(const Schedule& s) {
  if (s.kind() != ScheduleKind::ConstantII) throw ParameterError("validate_thm5 applies to the constant-II law");
  const std::size_t K = s.K();
  const double L = s.L();
  const double m = static_cast<double>(s.m());
  const std::vector<double> tail = discounted_eta_tails(s);

  Thm5Check out;
  for (std::size_t k = 0; k < K; ++k) {
    const double ek = s.eta_at(k);
    const double lhs = 2.0 * ek * L + 4.0 * L * L / m * ek * tail[k];
    if (!(lhs <= 1.0 + kValidatorSlack)) {
      out.condition1 = false;
      out.first_violation = k;
      break;
    }
  }

  // A = sum_{k=1}^{K-1} eta_k Gamma_k = tail[0] since Gamma_0 = 1.
  // B = sum_{j=0}^{K-2} beta_j^2 / (1 - beta_j)^2 * tail[j].
  out.A = K > 1 ? tail[0] : 0.0;
  double B = 0.0;
  for (std::size_t j = 0; j + 1 < K; ++j) {
    const double beta = s.beta_at(j);
    B += beta * beta / ((1.0 - beta) * (1.0 - beta)) * tail[j];
  }
  out.B = B;

  const double eta = s.spec().eta;
  const double c = std::pow(2.0, -1.0 / 3.0) + std::cbrt(2.0) / 6.0 + 1.0 / 36.0;
  out.A_bound = c * eta / (L * std::cbrt(static_cast<double>(K)));
  const double d = 1.0 - std::pow(2.0, -2.0 / 3.0);
  out.B_bound = 2.0 * eta / (d * d * L);
  out.A_within = out.A <= out.A_bound + kValidatorSlack;
  out.B_within = out.B <= out.B_bound + kValidatorSlack;
  out.ok = out.condition1 && out.A_within && out.B_within;
  return out;
}

// R_k = sum_{j=k+1}^{K-1} Gamma_j / Gamma_k for k = 0..K-1.
inline std::vector<double> gamma_ratio_tails(const Schedule& s) {
  const std::size_t K = s.K();
  std::vector<double> tail(K, 0.0);
  for (std::size_t k = K - 1; k-- > 0;) {
    const double f = 1.0 - s.beta_at(k);
    tail[k] = f * f * (1.0 + tail[k + 1]);
  }
  return tail;
}

inline double lemma5_rhs(std::size_t k) {
  const double t = std::cbrt(static_cast<double>(k) + 2.0);
  return 0.5 * t * t + t / 6.0 + 1.0 / 36.0;
}

// Tail bound on the discount sums for the constant-II law at index k < K.
inline bool lemma5_bound_check(const Schedule& s, std::size_t k) {
  if (s.kind() != ScheduleKind::ConstantII) throw ParameterError("lemma5_bound_check applies to the constant-II law");
  if (k >= s.K()) throw ParameterError("lemma5_bound_check: k must be < K");
  double r = 0.0;
  for (std::size_t j = s.K() - 1; j > k; --j) {
    const double f = 1.0 - s.beta_at(j - 1);
    r = f * f * (1.0 + r);
  }
  return r <= lemma5_rhs(k) + 1e-10;
}

// Output-selection distribution over k = 0..K-1, proportional to
//   (eta_k/4)(1 - eta_k L) - eta_k^2 (1 - beta_k)^2 / (5 m eta_{k+1}).
inline std::vector<double> tau_weights(const Schedule& s, std::size_t K) {
  if (K == 0) throw ParameterError("tau_weights: K must be positive");
  const double L = s.L();
  const double m = static_cast<double>(s.m());
  std::vector<double> w(K);
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double ek = s.eta_at(k);
    const double en = s.eta_at(k + 1);
    const double beta = s.beta_at(k);
    const double raw = ek / 4.0 * (1.0 - ek * L) - ek * ek / (5.0 * m * en) * (1.0 - beta) * (1.0 - beta);
    if (!(raw > 0.0)) throw ScheduleError("tau_weights: nonpositive weight at k = " + std::to_string(k));
    w[k] = raw;
    total += raw;
  }
  for (double& v : w) v /= total;
  return w;
}

}  // namespace pstorm

#endif  // PSTORM_SCHEDULES_HPP
