#pragma once

#include <string_view>

#include "tidyfit/frame.hpp"

namespace tidyfit {

/// The 32-car motor trend table as CSV, first column "model".
std::string_view mtcars_csv();

/// Parsed with car names as row labels.
Frame mtcars();

}  // namespace tidyfit
