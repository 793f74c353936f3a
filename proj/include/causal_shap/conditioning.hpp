#pragma once

#include <string>
#include <string_view>

namespace cshap {

// How out-of-coalition features are distributed given the coalition.
enum class Variant {
  marginal,     // P(X_out)
  conditional,  // P(X_out | x_in)
  causal,       // P(X_out | do(x_in)) on a chain graph
};

std::string to_string(Variant v);
// Throws ValidationError for anything outside {marginal, conditional, causal}.
Variant parse_variant(std::string_view text);

}  // namespace cshap
