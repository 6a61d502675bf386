#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "conicd/io.hpp"
#include "conicd/reducer.hpp"

namespace conicd {

using json = nlohmann::ordered_json;

std::string sha256_hex(const std::string& bytes);

struct RunInfo {
  std::string digest;
  Form form = Form::Primal;
  std::string cone;
  Mode mode = Mode::Exact;
  std::optional<double> millis;  // emitted only when timing was requested
};

// Exact values become "p/q" strings, floats become JSON numbers.
template <class T>
json to_json(const T& x);
template <class T>
T scalar_from_json(const json& j);
template <class T>
json vec_json(const Vec<T>& v);
template <class T>
Vec<T> vec_from_json(const json& j);

template <class T>
json system_json(const PrimalSystem<T>& p);

template <class T>
json certificate_json(const Verdict<T>& v);

template <class T>
json trace_json(const ReductionTrace<T>& tr);

template <class T>
json report_json(const RunInfo& info, const Verdict<T>& v, const std::optional<ReductionTrace<T>>& trace,
                 const OracleStats& stats, const std::optional<T>& lambda = std::nullopt);

// Certificate section of a report read back for verification.
template <class T>
struct ParsedCertificate {
  std::optional<BadCert<T>> bad;
  std::optional<GoodCert<T>> good;
};

template <class T>
ParsedCertificate<T> certificate_from_json(const json& report);

ConeSpec cone_from_string(const std::string& s);

}  // namespace conicd
