#pragma once

#include <string>

#include "difflstm/numerics.hpp"

namespace difflstm {

/// A univariate sampled signal. `dt` is the sampling step in model time
/// units. `derivative_of` is non-empty when this series holds the
/// differentials of another named series.
struct Series {
    Vector values;
    double dt = 1.0;
    std::string name;
    std::string derivative_of;

    std::size_t size() const { return values.size(); }
};

} // namespace difflstm
