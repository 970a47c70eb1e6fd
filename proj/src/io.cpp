#include "regdet/io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "regdet/errors.hpp"

namespace regdet {

json expansion_to_json(const Expansion& e) {
  json terms = json::array();
  for (const auto& t : e.terms()) terms.push_back({t.alpha, t.k, t.coeff});
  return {{"direction", e.direction() == Direction::ToInfinity ? "infinity" : "zero"},
          {"terms", terms},
          {"remainder", {e.remainder().alpha, e.remainder().log_power}}};
}

Expansion expansion_from_json(const json& j) {
  try {
    const std::string dir = j.at("direction").get<std::string>();
    if (dir != "infinity" && dir != "zero") throw InputError("expansion direction must be 'infinity' or 'zero'");
    std::vector<ExpTerm> terms;
    for (const auto& t : j.at("terms")) terms.push_back({t.at(0).get<double>(), t.at(1).get<int>(), t.at(2).get<double>()});
    std::optional<Remainder> rem;
    if (j.contains("remainder")) rem = Remainder{j["remainder"].at(0).get<double>(), j["remainder"].at(1).get<int>()};
    return Expansion(dir == "infinity" ? Direction::ToInfinity : Direction::ToZero, terms, rem);
  } catch (const json::exception& ex) {
    throw InputError(std::string("malformed expansion JSON: ") + ex.what());
  }
}

json fit_to_json(const FitReport& r) {
  json coeffs = json::array();
  for (const auto& [p, c] : r.coefficients) coeffs.push_back({p.alpha, p.k, c});
  return {{"coefficients", coeffs},
          {"rms_residual", r.rms_residual},
          {"condition_estimate", r.condition_estimate},
          {"stability_delta", r.stability_delta},
          {"residuals", r.residuals}};
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

void write_csv(const std::string& path, const std::string& x_name, const std::string& y_name,
               const std::vector<std::pair<double, double>>& rows, const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << "# config-hash " << config_hash << "\n" << x_name << "," << y_name << "\n";
  char buf[64];
  for (const auto& [x, y] : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out << buf << ",";
    std::snprintf(buf, sizeof buf, "%.17g", y);
    out << buf << "\n";
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace regdet
