#include "conicd/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace conicd {

ParseError::ParseError(int line, int col, std::string token, const std::string& msg)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg +
                         (token.empty() ? "" : " ('" + token + "')")),
      line(line),
      col(col),
      token(std::move(token)) {}

const char* form_name(Form f) {
  switch (f) {
    case Form::Primal: return "PRIMAL";
    case Form::Subspace: return "SUBSPACE";
    case Form::Dual: return "DUAL";
  }
  return "?";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace {

struct Tok {
  std::string s;
  int col;
};

std::vector<Tok> split(const std::string& line) {
  std::vector<Tok> out;
  size_t i = 0;
  size_t end = line.find('#');
  if (end == std::string::npos) end = line.size();
  while (i < end) {
    while (i < end && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= end) break;
    size_t j = i;
    while (j < end && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    out.push_back({line.substr(i, j - i), static_cast<int>(i) + 1});
    i = j;
  }
  return out;
}

int to_int(const Tok& t, int line, const char* what) {
  if (t.s.empty() || t.s.size() > 9 || !std::all_of(t.s.begin(), t.s.end(), ::isdigit))
    throw ParseError(line, t.col, t.s, std::string("expected ") + what);
  return std::stoi(t.s);
}

bool is_number(const std::string& s) {
  try {
    parse_rational(s);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

CpaFile parse_cpa(const std::string& text) {
  CpaFile f;
  std::istringstream in(text);
  std::string line;
  int ln = 0;
  enum class Stage { Header, Cone, Form, Vars, Body } stage = Stage::Header;
  std::vector<CpaEntry>* cur = nullptr;
  std::set<std::string> seen;
  std::set<std::tuple<const void*, int, int, int>> dup;
  int last_line = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto t = split(line);
    if (t.empty()) continue;
    last_line = ln;
    switch (stage) {
      case Stage::Header:
        if (t[0].s != "CPA") throw ParseError(ln, t[0].col, t[0].s, "expected header 'CPA 1'");
        if (t.size() != 2 || t[1].s != "1")
          throw ParseError(ln, t.size() > 1 ? t[1].col : t[0].col, t.size() > 1 ? t[1].s : "", "unsupported version");
        stage = Stage::Cone;
        continue;
      case Stage::Cone: {
        if (t[0].s != "CONE") throw ParseError(ln, t[0].col, t[0].s, "expected CONE");
        size_t i = 1;
        while (i < t.size()) {
          const Tok& kw = t[i];
          auto arg = [&](const char* what) -> const Tok& {
            if (i + 1 >= t.size()) throw ParseError(ln, kw.col, kw.s, std::string("missing ") + what);
            return t[++i];
          };
          if (kw.s == "PSD" || kw.s == "SOC" || kw.s == "ORTH") {
            const Tok& n = arg("size");
            int v = to_int(n, ln, "a block size");
            if (v < 1) throw ParseError(ln, n.col, n.s, "block size must be positive");
            f.k.blocks.push_back(kw.s == "PSD" ? Block::psd(v) : kw.s == "SOC" ? Block::soc(v) : Block::orthant(v));
          } else if (kw.s == "PCONE") {
            const Tok& n = arg("size");
            int v = to_int(n, ln, "a block size");
            const Tok& p = arg("exponent");
            Rational pv;
            try {
              pv = parse_rational(p.s);
            } catch (const std::exception&) {
              throw ParseError(ln, p.col, p.s, "bad exponent");
            }
            if (v < 1 || pv <= 1) throw ParseError(ln, p.col, p.s, "need size >= 1 and p > 1");
            f.k.blocks.push_back(Block::pcone(v, pv));
          } else {
            throw ParseError(ln, kw.col, kw.s, "unknown cone block");
          }
          ++i;
        }
        if (f.k.blocks.empty()) throw ParseError(ln, t[0].col, t[0].s, "empty cone");
        stage = Stage::Form;
        continue;
      }
      case Stage::Form:
        if (t[0].s != "FORM" || t.size() != 2) throw ParseError(ln, t[0].col, t[0].s, "expected FORM PRIMAL|SUBSPACE|DUAL");
        if (t[1].s == "PRIMAL") f.form = Form::Primal;
        else if (t[1].s == "SUBSPACE") f.form = Form::Subspace;
        else if (t[1].s == "DUAL") f.form = Form::Dual;
        else throw ParseError(ln, t[1].col, t[1].s, "unknown form");
        stage = Stage::Vars;
        continue;
      case Stage::Vars:
        if (t[0].s != "VARS" || t.size() != 2) throw ParseError(ln, t[0].col, t[0].s, "expected VARS m");
        f.vars = to_int(t[1], ln, "a variable count");
        f.mats.assign(f.vars, {});
        stage = Stage::Body;
        continue;
      case Stage::Body: break;
    }
    const std::string& kw = t[0].s;
    if (std::isalpha(static_cast<unsigned char>(kw[0]))) {
      bool indexed = kw == "MATRIX" || kw == "LBASIS";
      bool allowed = false;
      switch (f.form) {
        case Form::Primal: allowed = kw == "MATRIX" || kw == "RHS" || kw == "OBJ" || kw == "SLACK"; break;
        case Form::Dual: allowed = kw == "MATRIX" || kw == "OBJ" || kw == "SLACK"; break;
        case Form::Subspace: allowed = kw == "Z0" || kw == "LBASIS" || kw == "SLACK"; break;
      }
      if (!allowed) throw ParseError(ln, t[0].col, kw, std::string("section not allowed in FORM ") + form_name(f.form));
      if (t.size() != (indexed ? 2u : 1u)) throw ParseError(ln, t[0].col, kw, "bad section header");
      std::string key = kw;
      if (indexed) {
        int i = to_int(t[1], ln, "a section index");
        if (i < 1 || i > f.vars) throw ParseError(ln, t[1].col, t[1].s, "section index out of range");
        cur = &f.mats[i - 1];
        key += " " + std::to_string(i);
      } else if (kw == "RHS" || kw == "Z0") {
        cur = &f.rhs;
      } else if (kw == "OBJ") {
        cur = &f.obj;
        f.has_obj = true;
      } else {
        cur = &f.slack;
        f.has_slack = true;
      }
      if (!seen.insert(key).second) throw ParseError(ln, t[0].col, kw, "duplicate section");
      continue;
    }
    if (!cur) throw ParseError(ln, t[0].col, kw, "entry outside a section");
    if (t.size() != 4) throw ParseError(ln, t[0].col, kw, "entry needs 'block row col value'");
    CpaEntry e;
    e.line = ln;
    e.column = t[3].col;
    e.value = t[3].s;
    if (!is_number(e.value)) throw ParseError(ln, t[3].col, e.value, "bad value");
    if (!is_rational_token(e.value)) f.float_tokens = true;
    if (cur == &f.obj) {
      // OBJ: one coefficient per variable, written as block 1, row = variable, col 1.
      if (to_int(t[0], ln, "a block index") != 1) throw ParseError(ln, t[0].col, t[0].s, "OBJ entries use block 1");
      int r = to_int(t[1], ln, "a row index");
      if (r < 1 || r > f.vars) throw ParseError(ln, t[1].col, t[1].s, "variable index out of range");
      if (to_int(t[2], ln, "a column index") != 1) throw ParseError(ln, t[2].col, t[2].s, "OBJ entries use column 1");
      e.block = 0;
      e.row = r - 1;
      e.col = 0;
    } else {
      int b = to_int(t[0], ln, "a block index");
      if (b < 1 || b > static_cast<int>(f.k.blocks.size())) throw ParseError(ln, t[0].col, t[0].s, "no such block");
      const Block& bl = f.k.blocks[b - 1];
      int r = to_int(t[1], ln, "a row index"), c = to_int(t[2], ln, "a column index");
      if (r < 1 || r > bl.n) throw ParseError(ln, t[1].col, t[1].s, "row out of range");
      if (bl.kind == BlockKind::PSD) {
        if (c < 1 || c > bl.n) throw ParseError(ln, t[2].col, t[2].s, "column out of range");
        if (c < r) throw ParseError(ln, t[2].col, t[2].s, "PSD entries use the upper triangle (row <= col)");
      } else if (c != 1) {
        throw ParseError(ln, t[2].col, t[2].s, "vector blocks use column 1");
      }
      e.block = b - 1;
      e.row = r - 1;
      e.col = c - 1;
    }
    if (!dup.insert({cur, e.block, e.row, e.col}).second) throw ParseError(ln, t[0].col, t[0].s, "duplicate entry");
    cur->push_back(e);
  }
  if (stage != Stage::Body)
    throw ParseError(last_line + 1, 1, "", stage == Stage::Header ? "missing header" : "incomplete header");
  if (f.form == Form::Dual && !f.has_obj) throw ParseError(last_line + 1, 1, "", "FORM DUAL needs an OBJ section");
  return f;
}

Mode choose_mode(const CpaFile& f, std::optional<Mode> forced) {
  if (forced) return *forced;
  return f.float_tokens ? Mode::Float : Mode::Exact;
}

namespace {

template <class T>
T value_of(const CpaEntry& e) {
  if constexpr (Field<T>::exact) {
    return parse_rational(e.value);
  } else {
    if (is_rational_token(e.value)) return parse_rational(e.value).get_d();
    return std::strtod(e.value.c_str(), nullptr);
  }
}

template <class T>
Vec<T> to_vec(const ConeSpec& k, const std::vector<CpaEntry>& es) {
  Vec<T> v(k.dim(), T(0));
  for (const auto& e : es) {
    const Block& bl = k.blocks[e.block];
    int idx = k.offset(e.block) + (bl.kind == BlockKind::PSD ? Sym<T>::index(bl.n, e.row, e.col) : e.row);
    v[idx] = value_of<T>(e);
  }
  return v;
}

template <class T>
std::string str_value(const T& x) {
  if constexpr (Field<T>::exact)
    return Field<T>::str(x);
  else
    return format_value(x);
}

template <class T>
void emit_vec(std::ostringstream& os, const ConeSpec& k, const Vec<T>& v) {
  for (size_t b = 0; b < k.blocks.size(); ++b) {
    const Block& bl = k.blocks[b];
    int off = k.offset(static_cast<int>(b));
    if (bl.kind == BlockKind::PSD) {
      for (int i = 0; i < bl.n; ++i)
        for (int j = i; j < bl.n; ++j) {
          const T& x = v[off + Sym<T>::index(bl.n, i, j)];
          if (!Field<T>::is_zero(x, 0.0)) os << b + 1 << ' ' << i + 1 << ' ' << j + 1 << ' ' << str_value(x) << '\n';
        }
    } else {
      for (int i = 0; i < bl.n; ++i)
        if (!Field<T>::is_zero(v[off + i], 0.0)) os << b + 1 << ' ' << i + 1 << " 1 " << str_value(v[off + i]) << '\n';
    }
  }
}

}  // namespace

std::string format_value(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s = buf;
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

template <class T>
Instance<T> build_instance(const CpaFile& f) {
  Instance<T> in;
  in.form = f.form;
  const ConeSpec& k = f.k;
  std::vector<Vec<T>> mats;
  for (const auto& m : f.mats) mats.push_back(to_vec<T>(k, m));
  Vec<T> obj(f.vars, T(0));
  for (const auto& e : f.obj) obj[e.row] = value_of<T>(e);
  switch (f.form) {
    case Form::Primal:
      in.primal = {k, mats, to_vec<T>(k, f.rhs)};
      if (f.has_obj) in.objective = obj;
      break;
    case Form::Dual: in.dual = {k, mats, obj}; break;
    case Form::Subspace:
      in.subspace.k = k;
      in.subspace.z0 = to_vec<T>(k, f.rhs);
      in.subspace.l = Subspace<T>{k.dim(), mats};
      break;
  }
  if (f.has_slack) in.slack = to_vec<T>(f.form == Form::Dual ? k.dual() : k, f.slack);
  return in;
}

template <class T>
PrimalSystem<T> analyzed_system(const Instance<T>& in, const Tolerance& tol) {
  switch (in.form) {
    case Form::Primal: return in.primal;
    case Form::Subspace: return to_primal(in.subspace);
    case Form::Dual: return dual_to_primal(in.dual, tol);
  }
  return in.primal;
}

template <class T>
std::string emit_cpa(const Instance<T>& in) {
  std::ostringstream os;
  const ConeSpec& k = in.form == Form::Primal ? in.primal.k : in.form == Form::Dual ? in.dual.k : in.subspace.k;
  const std::vector<Vec<T>>& mats =
      in.form == Form::Primal ? in.primal.a : in.form == Form::Dual ? in.dual.a : in.subspace.l.basis;
  os << "CPA 1\nCONE " << k.str() << "\nFORM " << form_name(in.form) << "\nVARS " << mats.size() << '\n';
  const char* mk = in.form == Form::Subspace ? "LBASIS" : "MATRIX";
  for (size_t i = 0; i < mats.size(); ++i) {
    os << mk << ' ' << i + 1 << '\n';
    emit_vec(os, k, mats[i]);
  }
  if (in.form != Form::Dual) {
    os << (in.form == Form::Primal ? "RHS" : "Z0") << '\n';
    emit_vec(os, k, in.form == Form::Primal ? in.primal.b : in.subspace.z0);
  }
  const Vec<T>* obj = in.form == Form::Dual ? &in.dual.c : in.objective ? &*in.objective : nullptr;
  if (obj) {
    os << "OBJ\n";
    for (size_t i = 0; i < obj->size(); ++i)
      if (!Field<T>::is_zero((*obj)[i], 0.0)) os << "1 " << i + 1 << " 1 " << str_value((*obj)[i]) << '\n';
  }
  if (in.slack) {
    os << "SLACK\n";
    emit_vec(os, in.form == Form::Dual ? k.dual() : k, *in.slack);
  }
  return os.str();
}

#define CONICD_INST(T)                                                    \
  template Instance<T> build_instance(const CpaFile&);                    \
  template PrimalSystem<T> analyzed_system(const Instance<T>&, const Tolerance&); \
  template std::string emit_cpa(const Instance<T>&);
CONICD_INST(double)
CONICD_INST(Rational)
#undef CONICD_INST

}  // namespace conicd
