#include "bacon/graded_logic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "bacon/error.hpp"

namespace bacon {
namespace {

constexpr std::string_view kMustHaveAll = "Must have all";
constexpr std::string_view kNiceMost = "Nice to have most";
constexpr std::string_view kNice = "Nice to have";
constexpr std::string_view kNiceSome = "Nice to have some";
constexpr std::string_view kEnoughAny = "Enough to have any";

constexpr std::array<AndnessCodeInfo, 23> kTable{{
    {AndnessCode::CC, "CC", "Drastic conjunction", "Conjunctive", "Hard conjunction", kMustHaveAll, 2.0, 2.0},
    {AndnessCode::HHC, "HHC", "High hyper-conjunction", "Conjunctive", "Hard conjunction", kMustHaveAll, 5.0 / 4, 2.0},
    {AndnessCode::CP, "CP", "Product t-norm", "Conjunctive", "Hard conjunction", kMustHaveAll, 5.0 / 4, 5.0 / 4},
    {AndnessCode::LHC, "LHC", "Low hyper-conjunction", "Conjunctive", "Hard conjunction", kMustHaveAll, 1.0, 5.0 / 4},
    {AndnessCode::C, "C", "Pure conjunction", "Conjunctive", "Hard conjunction", kMustHaveAll, 1.0, 1.0},
    {AndnessCode::HCplus, "HC+", "High hard conjunction", "Conjunctive", "Hard conjunction", kMustHaveAll, 13.0 / 14, 13.0 / 14},
    {AndnessCode::HC, "HC", "Medium hard conjunction", "Conjunctive", "Hard conjunction", kMustHaveAll, 12.0 / 14, 12.0 / 14},
    {AndnessCode::HCminus, "HC-", "Low hard conjunction", "Conjunctive", "Hard conjunction", kMustHaveAll, 11.0 / 14, 11.0 / 14},
    {AndnessCode::SCplus, "SC+", "High soft conjunction", "Conjunctive", "Soft conjunction", kNiceMost, 10.0 / 14, 10.0 / 14},
    {AndnessCode::SC, "SC", "Medium soft conjunction", "Conjunctive", "Soft conjunction", kNiceMost, 9.0 / 14, 9.0 / 14},
    {AndnessCode::SCminus, "SC-", "Low soft conjunction", "Conjunctive", "Soft conjunction", kNiceMost, 8.0 / 14, 8.0 / 14},
    {AndnessCode::A, "A", "Logic neutrality", "Neutral", "Arithmetic mean", kNice, 7.0 / 14, 7.0 / 14},
    {AndnessCode::SDminus, "SD-", "Low soft disjunction", "Disjunctive", "Soft disjunction", kNiceSome, 6.0 / 14, 6.0 / 14},
    {AndnessCode::SD, "SD", "Medium soft disjunction", "Disjunctive", "Soft disjunction", kNiceSome, 5.0 / 14, 5.0 / 14},
    {AndnessCode::SDplus, "SD+", "High soft disjunction", "Disjunctive", "Soft disjunction", kNiceSome, 4.0 / 14, 4.0 / 14},
    {AndnessCode::HDminus, "HD-", "Low hard disjunction", "Disjunctive", "Hard disjunction", kEnoughAny, 3.0 / 14, 3.0 / 14},
    {AndnessCode::HD, "HD", "Medium hard disjunction", "Disjunctive", "Hard disjunction", kEnoughAny, 2.0 / 14, 2.0 / 14},
    {AndnessCode::HDplus, "HD+", "High hard disjunction", "Disjunctive", "Hard disjunction", kEnoughAny, 1.0 / 14, 1.0 / 14},
    {AndnessCode::D, "D", "Pure disjunction", "Disjunctive", "Hard disjunction", kEnoughAny, 0.0, 0.0},
    {AndnessCode::LHD, "LHD", "Low hyper-disjunction", "Disjunctive", "Hard disjunction", kEnoughAny, -1.0 / 4, 0.0},
    {AndnessCode::DP, "DP", "Product t-conorm", "Disjunctive", "Hard disjunction", kEnoughAny, -1.0 / 4, -1.0 / 4},
    {AndnessCode::HHD, "HHD", "High hyper-disjunction", "Disjunctive", "Hard disjunction", kEnoughAny, -1.0, -1.0 / 4},
    {AndnessCode::DD, "DD", "Drastic disjunction", "Disjunctive", "Hard disjunction", kEnoughAny, -1.0, -1.0},
}};

void require_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw DomainError(std::string(what) + " must lie in [0,1], got " + std::to_string(v));
  }
}

void require_andness(double alpha) {
  if (!(alpha >= kAndnessMin && alpha <= kAndnessMax)) {
    throw DomainError("andness must lie in [-1,2], got " + std::to_string(alpha));
  }
}

double geometric_exponent(double alpha) { return std::sqrt(3.0 / (2.0 - alpha)) - 1.0; }

// Conjunctive half (alpha >= 0.5), unchecked.
double gcd2_conjunctive(double x, double y, double w, double alpha) {
  if (alpha == 2.0) return (x == 1.0 && y == 1.0) ? 1.0 : 0.0;
  const double mean = w * x + (1.0 - w) * y;
  if (alpha == 0.5) return mean;
  const double geo = std::pow(std::pow(x, 2.0 * w) * std::pow(y, 2.0 * (1.0 - w)), geometric_exponent(alpha));
  if (alpha >= 0.75) return geo;
  return (3.0 - 4.0 * alpha) * mean + (4.0 * alpha - 2.0) * geo;
}

Gcd2Partials conjunctive_partials(double x, double y, double w, double alpha) {
  const double lo = kGradientClamp;
  const double hi = 1.0 - kGradientClamp;
  const double xc = std::clamp(x, lo, hi);
  const double yc = std::clamp(y, lo, hi);
  const double sx = (x >= lo && x <= hi) ? 1.0 : 0.0;
  const double sy = (y >= lo && y <= hi) ? 1.0 : 0.0;

  const double e = geometric_exponent(alpha);
  const double de = 0.5 * std::sqrt(3.0) * std::pow(2.0 - alpha, -1.5);
  const double lx = std::log(xc);
  const double ly = std::log(yc);
  const double s = 2.0 * w * lx + 2.0 * (1.0 - w) * ly;
  const double g = std::exp(e * s);

  Gcd2Partials geo;
  geo.value = g;
  geo.dx = sx * g * e * 2.0 * w / xc;
  geo.dy = sy * g * e * 2.0 * (1.0 - w) / yc;
  geo.dw = g * e * 2.0 * (lx - ly);
  geo.dalpha = g * s * de;
  if (alpha >= 0.75) return geo;

  const double mean = w * x + (1.0 - w) * y;
  const double c1 = 3.0 - 4.0 * alpha;
  const double c2 = 4.0 * alpha - 2.0;
  Gcd2Partials out;
  out.value = c1 * mean + c2 * g;
  out.dx = c1 * w + c2 * geo.dx;
  out.dy = c1 * (1.0 - w) + c2 * geo.dy;
  out.dw = c1 * (x - y) + c2 * geo.dw;
  out.dalpha = -4.0 * mean + 4.0 * g + c2 * geo.dalpha;
  return out;
}

}  // namespace

double gcd2(double x, double y, double w, double alpha) {
  require_unit(x, "x");
  require_unit(y, "y");
  require_unit(w, "weight");
  require_andness(alpha);
  if (alpha >= 0.5) return gcd2_conjunctive(x, y, w, alpha);
  return 1.0 - gcd2_conjunctive(1.0 - x, 1.0 - y, w, 1.0 - alpha);
}

double negate(double x) {
  require_unit(x, "x");
  return 1.0 - x;
}

Gcd2Partials gcd2_partials(double x, double y, double w, double alpha) {
  if (!(alpha > kAndnessMin && alpha < kAndnessMax)) {
    throw DomainError("gradient evaluation requires andness in (-1,2), got " + std::to_string(alpha));
  }
  if (alpha >= 0.5) return conjunctive_partials(x, y, w, alpha);
  const Gcd2Partials inner = conjunctive_partials(1.0 - x, 1.0 - y, w, 1.0 - alpha);
  return {1.0 - inner.value, inner.dx, inner.dy, -inner.dw, inner.dalpha};
}

std::span<const AndnessCodeInfo> andness_table() { return kTable; }

const AndnessCodeInfo& code_info(AndnessCode code) { return kTable[static_cast<std::size_t>(code)]; }

std::string_view code_symbol(AndnessCode code) { return code_info(code).symbol; }

std::optional<AndnessCode> code_from_symbol(std::string_view symbol) {
  for (const auto& row : kTable) {
    if (row.symbol == symbol) return row.code;
  }
  return std::nullopt;
}

double code_andness(AndnessCode code) {
  const auto& row = code_info(code);
  return 0.5 * (row.lo + row.hi);
}

AndnessCode andness_to_code(double alpha) {
  require_andness(alpha);
  for (const auto& row : kTable) {
    if (row.is_interval() && alpha > row.lo && alpha < row.hi) return row.code;
  }
  constexpr double kTieTolerance = 1e-12;
  AndnessCode best = AndnessCode::CC;
  double best_distance = std::numeric_limits<double>::infinity();
  for (const auto& row : kTable) {
    if (row.is_interval()) continue;
    const double d = std::abs(alpha - row.lo);
    if (d < best_distance - kTieTolerance) {
      best_distance = d;
      best = row.code;
    }
  }
  return best;
}

std::string_view role_name(Role role) {
  switch (role) {
    case Role::mandatory: return "mandatory";
    case Role::desired: return "desired";
    case Role::optional: return "optional";
    case Role::sufficient: return "sufficient";
    case Role::neutral: return "neutral";
  }
  return "unknown";
}

Role classify_role(double alpha) {
  struct Band {
    Role role;
    double lo;
    double hi;
  };
  // In units of 1/14, most conjunctive first.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr std::array<Band, 5> kBands{{
      {Role::mandatory, 11.0, kInf},
      {Role::desired, 8.0, 10.0},
      {Role::neutral, 7.0, 7.0},
      {Role::optional, 4.0, 6.0},
      {Role::sufficient, -kInf, 3.0},
  }};
  constexpr double kTolerance = 1e-9;
  const double t = alpha * 14.0;
  Role best = Role::mandatory;
  double best_distance = kInf;
  for (const auto& band : kBands) {
    double d = 0.0;
    if (t < band.lo) d = band.lo - t;
    if (t > band.hi) d = t - band.hi;
    if (d <= kTolerance) d = 0.0;
    if (d < best_distance - kTolerance) {
      best_distance = d;
      best = band.role;
    }
  }
  return best;
}

}  // namespace bacon
