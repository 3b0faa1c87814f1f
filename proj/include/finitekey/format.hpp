#pragma once

#include <string>

namespace finitekey {

/// Shortest decimal string that reads back to the same double.
std::string format_double(double value);

}  // namespace finitekey
