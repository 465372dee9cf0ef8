#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tidyfit/frame.hpp"
#include "tidyfit/types.hpp"

namespace tidyfit {

enum class BinaryOp { Add, Subtract, Multiply, Divide, Power };
enum class Function { Log, Log10, Exp, Sqrt };

std::string_view to_string(BinaryOp op);
std::string_view to_string(Function fn);
std::optional<Function> function_from_name(std::string_view name);

class Expr;

struct Constant {
  double value;
};
struct Symbol {
  std::string name;
};
struct Negate {
  std::shared_ptr<const Expr> operand;
};
struct Binary {
  BinaryOp op;
  std::shared_ptr<const Expr> lhs;
  std::shared_ptr<const Expr> rhs;
};
struct Call {
  Function fn;
  std::shared_ptr<const Expr> arg;
};

/// Immutable expression tree. Copies share structure.
class Expr {
 public:
  using Node = std::variant<Constant, Symbol, Negate, Binary, Call>;

  explicit Expr(Node node) : node_(std::move(node)) {}

  const Node& node() const { return node_; }

  template <typename T>
  const T* as() const {
    return std::get_if<T>(&node_);
  }

 private:
  Node node_;
};

using ExprPtr = std::shared_ptr<const Expr>;

ExprPtr make_constant(double value);
ExprPtr make_symbol(std::string name);
ExprPtr make_negate(ExprPtr operand);
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr make_call(Function fn, ExprPtr arg);

/// Structural equality (constants compared exactly).
bool structurally_equal(const Expr& a, const Expr& b);

/// Source form that parses back to the same tree.
std::string to_string(const Expr& expr);

/// Symbol names in first-appearance order.
std::vector<std::string> symbols(const Expr& expr);
bool depends_on(const Expr& expr, std::string_view name);

/// Parses a single expression (no "~").
ExprPtr parse_expression(std::string_view text);

struct LinearFormula {
  ExprPtr response;
  std::vector<ExprPtr> terms;
  std::vector<std::string> term_names;  // trimmed source text of each term
  bool intercept = true;
};

using StartValues = std::vector<std::pair<std::string, double>>;

struct NlsFormula {
  ExprPtr response;
  ExprPtr rhs;
  StartValues parameters;  // declaration order

  std::vector<std::string> parameter_names() const;
  /// Symbols of the formula that are not parameters, i.e. data columns.
  std::vector<std::string> data_symbols() const;
};

using Formula = std::variant<LinearFormula, NlsFormula>;

/// Parses "response ~ rhs". Without start values the right side is split on
/// top-level "+" into terms; with start values it is kept as one expression.
Formula parse_formula(std::string_view text, const std::optional<StartValues>& start = std::nullopt);
LinearFormula parse_linear_formula(std::string_view text);
NlsFormula parse_nls_formula(std::string_view text, StartValues start);

/// A scalar broadcasts; a vector must match the common length.
using Binding = std::variant<double, VectorXd>;
using Bindings = std::map<std::string, Binding, std::less<>>;

/// Element-wise IEEE evaluation. The result length is the common length of the
/// vector bindings (1 if there are none).
VectorXd eval_expr(const Expr& expr, const Bindings& bindings);

/// Symbolic derivative with 0/1 identity folding.
ExprPtr differentiate(const ExprPtr& expr, std::string_view with_respect_to);

struct DesignMatrix {
  VectorXd y;
  MatrixXd x;
  std::vector<std::string> names;
};

/// Column 0 is the all-ones "(Intercept)"; later columns are the evaluated terms.
DesignMatrix design_matrix(const LinearFormula& formula, const Frame& frame);

/// Binds every listed symbol to the corresponding numeric frame column.
Bindings bind_columns(const Frame& frame, const std::vector<std::string>& names);

}  // namespace tidyfit
