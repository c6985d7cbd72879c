#pragma once

// Numeric expressions in config values: "sqrt(18)", "0.97*pi/2", "2*sqrt(18)".

#include <string>

namespace tbscat::app {

/// Evaluates + - * / ^, unary signs, parentheses, the constants pi and e, and
/// sqrt exp log sin cos tan abs. Throws std::invalid_argument with the offending
/// position on malformed input.
double evaluate_expression(const std::string& text);

}  // namespace tbscat::app
