/**
 * @file special_functions.hpp
 * @brief Scaled complementary error function.
 */
#pragma once

namespace moeagg {

/// erfcx(x) = exp(x^2) * erfc(x), evaluated without overflow for large
/// positive x. For x <= 26 the product form with the libm erfc is accurate to
/// a few ulp; beyond that erfc underflows and an asymptotic expansion takes
/// over. Negative arguments use the reflection erfcx(-x) = 2 exp(x^2) -
/// erfcx(x) and overflow to +inf once exp(x^2) does.
double erfcx(double x);

}  // namespace moeagg
