#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "conicd/systems.hpp"

namespace conicd {

struct ParseError : std::runtime_error {
  int line, col;
  std::string token;
  ParseError(int line, int col, std::string token, const std::string& msg);
};

enum class Form { Primal, Subspace, Dual };
const char* form_name(Form f);

// One sparse entry, value kept as its token so each mode converts it its own way.
struct CpaEntry {
  int block = 0, row = 0, col = 0;  // 0-based
  std::string value;
  int line = 0, column = 0;
};

struct CpaFile {
  ConeSpec k;
  Form form = Form::Primal;
  int vars = 0;
  std::vector<std::vector<CpaEntry>> mats;  // MATRIX i or LBASIS j
  std::vector<CpaEntry> rhs;                // RHS or Z0
  std::vector<CpaEntry> obj;
  std::vector<CpaEntry> slack;
  bool has_obj = false, has_slack = false;
  bool float_tokens = false;  // some value is written as a decimal
};

CpaFile parse_cpa(const std::string& text);
std::string read_file(const std::string& path);

// Exact unless the file uses decimals, or the caller forces a mode.
Mode choose_mode(const CpaFile& f, std::optional<Mode> forced);

template <class T>
struct Instance {
  Form form = Form::Primal;
  PrimalSystem<T> primal;
  SubspaceSystem<T> subspace;
  DualFormSystem<T> dual;
  std::optional<Vec<T>> objective;  // sup <c, x> for the primal form
  std::optional<Vec<T>> slack;      // claimed maximum slack (dual form: claimed y)
};

template <class T>
Instance<T> build_instance(const CpaFile& f);

// The analyzed system: the primal form itself or its primal reformulation.
template <class T>
PrimalSystem<T> analyzed_system(const Instance<T>& in, const Tolerance& tol);

template <class T>
std::string emit_cpa(const Instance<T>& in);

std::string format_value(double x);

}  // namespace conicd
