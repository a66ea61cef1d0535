#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "freeconv/density.hpp"
#include "freeconv/errors.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/oracles.hpp"
#include "freeconv/subordination.hpp"
#include "freeconv/support.hpp"

namespace freeconv {

using Json = nlohmann::ordered_json;

/// Lossless decimal form of a double: 17 significant digits.
inline std::string format_double(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Compact JSON with every floating-point number at 17 significant digits.
inline void dump_json(const Json& j, std::string& out) {
  switch (j.type()) {
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ',';
        first = false;
        out += Json(key).dump();
        out += ':';
        dump_json(value, out);
      }
      out += '}';
      break;
    }
    case Json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        dump_json(j[i], out);
      }
      out += ']';
      break;
    }
    case Json::value_t::number_float:
      out += format_double(j.get<double>());
      break;
    default:
      out += j.dump();
  }
}

inline std::string dump_json(const Json& j) {
  std::string out;
  dump_json(j, out);
  return out;
}

// ---------------------------------------------------------------------------
// Measure specifications
// ---------------------------------------------------------------------------

namespace detail {

inline double spec_number(const Json& j, const char* key) {
  if (!j.contains(key)) throw SpecParseError(std::string("measure spec: missing field '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number()) throw SpecParseError(std::string("measure spec: field '") + key + "' must be a number");
  return v.get<double>();
}

inline void reject_unknown(const Json& j, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw SpecParseError("measure spec: unknown field '" + key + "'");
  }
}

inline std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss{std::string(text)};
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw SpecParseError("");
      out.push_back(v);
    } catch (const std::exception&) {
      throw SpecParseError("measure spec: '" + item + "' is not a number");
    }
  }
  return out;
}

/// Converts library argument errors into parse errors so that malformed
/// specifications surface uniformly.
template <class F>
JacobiMeasure build_or_parse_error(F&& build) {
  try {
    return build();
  } catch (const SpecParseError&) {
    throw;
  } catch (const Error& e) {
    throw SpecParseError(std::string("measure spec: ") + e.what());
  }
}

}  // namespace detail

inline JacobiMeasure measure_from_json(const Json& j) {
  if (!j.is_object()) throw SpecParseError("measure spec: expected a JSON object");
  if (!j.contains("type") || !j.at("type").is_string()) {
    throw SpecParseError("measure spec: missing string field 'type'");
  }
  const auto type = j.at("type").get<std::string>();
  return detail::build_or_parse_error([&] {
    if (type == "semicircle") {
      detail::reject_unknown(j, {"type", "variance"});
      return semicircle(detail::spec_number(j, "variance"));
    }
    if (type == "arcsine") {
      detail::reject_unknown(j, {"type", "radius"});
      return arcsine(detail::spec_number(j, "radius"));
    }
    if (type == "marchenko_pastur") {
      detail::reject_unknown(j, {"type", "ratio"});
      return marchenko_pastur(detail::spec_number(j, "ratio"));
    }
    if (type == "jacobi") {
      detail::reject_unknown(j, {"type", "support", "t_minus", "t_plus", "smooth_cheb"});
      if (!j.contains("support") || !j.at("support").is_array() || j.at("support").size() != 2 ||
          !j.at("support")[0].is_number() || !j.at("support")[1].is_number()) {
        throw SpecParseError("measure spec: 'support' must be [lower, upper]");
      }
      std::vector<double> coeffs{1.0};
      if (j.contains("smooth_cheb")) {
        const auto& c = j.at("smooth_cheb");
        if (!c.is_array() || c.empty()) throw SpecParseError("measure spec: 'smooth_cheb' must be a non-empty array");
        coeffs.clear();
        for (const auto& v : c) {
          if (!v.is_number()) throw SpecParseError("measure spec: 'smooth_cheb' entries must be numbers");
          coeffs.push_back(v.get<double>());
        }
      }
      return make_jacobi(j.at("support")[0].get<double>(), j.at("support")[1].get<double>(),
                         detail::spec_number(j, "t_minus"), detail::spec_number(j, "t_plus"),
                         std::move(coeffs));
    }
    throw SpecParseError("measure spec: unknown type '" + type + "'");
  });
}

/// Canonical JSON of a measure: the support as constructed (before
/// centering), exponents and Chebyshev coefficients. Parsing it back yields
/// an equal measure.
inline Json measure_to_json(const JacobiMeasure& mu) {
  Json j;
  j["type"] = "jacobi";
  j["support"] = Json::array({mu.input_lower(), mu.input_upper()});
  j["t_minus"] = mu.t_minus();
  j["t_plus"] = mu.t_plus();
  j["smooth_cheb"] = mu.smooth_coeffs();
  return j;
}

/// Accepts `semicircle:t`, `arcsine:r`, `mp:ratio`, `jacobi:a,b,t-,t+[,c0,c1,...]`,
/// inline JSON, or a path to a JSON file.
inline JacobiMeasure parse_measure_spec(std::string_view spec) {
  const auto first = spec.find_first_not_of(" \t\n");
  if (first == std::string_view::npos) throw SpecParseError("measure spec: empty");
  spec.remove_prefix(first);

  auto parse_json_text = [](const std::string& text) {
    try {
      return measure_from_json(Json::parse(text));
    } catch (const Json::exception& e) {
      throw SpecParseError(std::string("measure spec: invalid JSON: ") + e.what());
    }
  };
  if (spec.front() == '{') return parse_json_text(std::string(spec));

  const auto colon = spec.find(':');
  if (colon != std::string_view::npos) {
    const auto kind = spec.substr(0, colon);
    const auto args = detail::parse_number_list(spec.substr(colon + 1));
    auto expect = [&](std::size_t n) {
      if (args.size() != n) {
        throw SpecParseError("measure spec: '" + std::string(kind) + "' expects " +
                             std::to_string(n) + " value(s)");
      }
    };
    return detail::build_or_parse_error([&] {
      if (kind == "semicircle") {
        expect(1);
        return semicircle(args[0]);
      }
      if (kind == "arcsine") {
        expect(1);
        return arcsine(args[0]);
      }
      if (kind == "mp" || kind == "marchenko_pastur") {
        expect(1);
        return marchenko_pastur(args[0]);
      }
      if (kind == "jacobi") {
        if (args.size() < 4) throw SpecParseError("measure spec: 'jacobi' expects a,b,t-,t+");
        std::vector<double> coeffs(args.begin() + 4, args.end());
        if (coeffs.empty()) coeffs = {1.0};
        return make_jacobi(args[0], args[1], args[2], args[3], std::move(coeffs));
      }
      throw SpecParseError("measure spec: unknown shorthand '" + std::string(kind) + "'");
    });
  }

  std::ifstream in{std::string(spec)};
  if (!in) throw SpecParseError("measure spec: cannot open '" + std::string(spec) + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str());
}

// ---------------------------------------------------------------------------
// Result serialization
// ---------------------------------------------------------------------------

inline Json complex_to_json(complex z) { return Json::array({z.real(), z.imag()}); }

inline Json point_to_json(const SubordinationPoint& p) {
  Json j;
  j["z"] = complex_to_json(p.z);
  j["omega_alpha"] = complex_to_json(p.omega_alpha);
  j["omega_beta"] = complex_to_json(p.omega_beta);
  j["m"] = complex_to_json(p.m_value);
  j["iterations"] = p.iterations;
  j["residual"] = p.residual;
  return j;
}

inline Json points_to_json(std::span<const SubordinationPoint> points) {
  Json arr = Json::array();
  for (const auto& p : points) arr.push_back(point_to_json(p));
  return arr;
}

inline Json support_to_json(const SupportResult& s) {
  Json j;
  j["E_minus"] = s.e_minus;
  j["E_plus"] = s.e_plus;
  j["omega"] = {{"alpha", s.omega_alpha_at}, {"beta", s.omega_beta_at}};
  j["gamma"] = {{"alpha", s.gamma_alpha}, {"beta", s.gamma_beta}};
  j["edge_residuals"] = s.edge_residuals;
  return j;
}

inline std::string density_csv(const DensityGrid& grid) {
  std::string out = "x,rho,cdf\n";
  for (std::size_t i = 0; i < grid.xs.size(); ++i) {
    out += format_double(grid.xs[i]) + ',' + format_double(grid.rho[i]) + ',' +
           format_double(grid.cdf[i]) + '\n';
  }
  return out;
}

inline Json density_metadata(const DensityGrid& grid) {
  Json j;
  j["eta_used"] = grid.eta_used;
  j["n"] = grid.xs.size();
  j["E_minus"] = grid.e_minus;
  j["E_plus"] = grid.e_plus;
  j["mass"] = grid.mass;
  j["mean"] = grid.mean;
  j["variance"] = grid.variance;
  return j;
}

inline std::string spectrum_csv(const EmpiricalSpectrum& s) {
  std::string out = "eigenvalue\n";
  for (double e : s.eigenvalues) out += format_double(e) + '\n';
  return out;
}

inline Json spectrum_metadata(const EmpiricalSpectrum& s) {
  return Json{{"n_matrix", s.n_matrix}, {"n_samples", s.n_samples}, {"seed", s.seed}};
}

}  // namespace freeconv
