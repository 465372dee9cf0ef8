#include "tidyfit/fixtures.hpp"

#include "tidyfit/csv.hpp"

namespace tidyfit {

Frame mtcars() {
  static const Frame frame = read_csv(mtcars_csv(), CsvOptions{.rowname_column = "model"});
  return frame;
}

}  // namespace tidyfit
