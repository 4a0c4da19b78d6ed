#pragma once

#include <string>
#include <string_view>

#include "xformlab/core.hpp"

namespace xformlab {

/// Malformed coefficient expression; `column` is 1-based.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& message, int column);
  int column() const { return column_; }

 private:
  int column_;
};

/// Grammar: numeric literals, x, + - * /, unary minus, parentheses, sin, cos, exp.
ScalarFunction parse_coefficient_expression(std::string_view text);

}  // namespace xformlab
