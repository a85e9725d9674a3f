#pragma once

// Andness-directed graded conjunction/disjunction (GCD) of two arguments.
//
// Andness alpha spans [-1, 2]:
//   alpha = 2            drastic conjunction
//   0.75 <= alpha < 2    weighted geometric form raised to sqrt(3/(2-alpha)) - 1
//   0.5 < alpha < 0.75   affine blend of the arithmetic and geometric forms
//   alpha = 0.5          weighted arithmetic mean (logic neutrality)
//   -1 <= alpha < 0.5    De Morgan dual: 1 - gcd2(1-x, 1-y, w, 1-alpha)
//
// The weight w applies to the first argument and 1-w to the second.
//
// Note: the blend region is not idempotent. gcd2(0.5, 0.5, 0.5, 0.6) is about
// 0.525, and gcd2(x, x, 0.5, 1) = x^(2(sqrt(3)-1)). Callers must not assume
// min(x,y) <= gcd2 <= max(x,y).

#include <optional>
#include <span>
#include <string_view>

namespace bacon {

inline constexpr double kAndnessMin = -1.0;
inline constexpr double kAndnessMax = 2.0;
inline constexpr double kNeutralAndness = 0.5;

/// Lower/upper clamp applied to arguments of the geometric form during
/// gradient-bearing evaluation.
inline constexpr double kGradientClamp = 1e-9;

/// Pure evaluation. Throws DomainError when x, y, w are outside [0,1] or
/// alpha outside [-1,2]. A zero exponent factor evaluates to 1 (0^0 = 1).
double gcd2(double x, double y, double w, double alpha);

double negate(double x);

struct Gcd2Partials {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double dw = 0.0;
  double dalpha = 0.0;
};

/// Evaluation with partial derivatives, as used during training. The
/// geometric form sees x and y clamped to [1e-9, 1-1e-9] (with zero slope
/// outside that band). Requires alpha strictly inside (-1, 2) and w in (0,1).
Gcd2Partials gcd2_partials(double x, double y, double w, double alpha);

enum class AndnessCode {
  CC, HHC, CP, LHC, C, HCplus, HC, HCminus, SCplus, SC, SCminus, A,
  SDminus, SD, SDplus, HDminus, HD, HDplus, D, LHD, DP, HHD, DD
};

struct AndnessCodeInfo {
  AndnessCode code;
  std::string_view symbol;
  std::string_view name;
  std::string_view type;     // Conjunctive / Neutral / Disjunctive
  std::string_view subtype;  // Hard conjunction, Soft disjunction, ...
  std::string_view verbalization;
  double lo;  // anchor; lo == hi for point anchors
  double hi;
  bool is_interval() const { return lo != hi; }
};

/// The 23 aggregator codes ordered from most conjunctive to most disjunctive.
std::span<const AndnessCodeInfo> andness_table();

const AndnessCodeInfo& code_info(AndnessCode code);
std::string_view code_symbol(AndnessCode code);
std::optional<AndnessCode> code_from_symbol(std::string_view symbol);

/// Representative andness of a code: the point anchor, or the interval midpoint.
double code_andness(AndnessCode code);

/// Nearest code to alpha. Values strictly inside a hyper interval
/// (HHC, LHC, LHD, HHD) map to the interval code; otherwise the nearest point
/// anchor wins, ties going to the more conjunctive code.
AndnessCode andness_to_code(double alpha);

enum class Role { mandatory, desired, optional, sufficient, neutral };

std::string_view role_name(Role role);

/// Feature role implied by the andness of the node that admits it.
/// Bands (in 14ths): >= 11 mandatory, [8,10] desired, exactly 7 neutral,
/// [4,6] optional, <= 3 sufficient. Gaps snap to the nearest band, ties
/// toward the conjunctive side.
Role classify_role(double alpha);

}  // namespace bacon
