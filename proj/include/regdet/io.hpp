#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "regdet/expansion.hpp"

namespace regdet {

using json = nlohmann::json;

// {"direction": "infinity"|"zero", "terms": [[alpha, k, coeff], ...], "remainder": [alpha, k]}
json expansion_to_json(const Expansion& e);
Expansion expansion_from_json(const json& j);

json fit_to_json(const FitReport& r);

// 64-bit FNV-1a
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

// Two-column CSV preceded by "# config-hash <hex>".
void write_csv(const std::string& path, const std::string& x_name, const std::string& y_name,
               const std::vector<std::pair<double, double>>& rows, const std::string& config_hash);

// Pretty-printed with a trailing newline.
void write_json(const std::string& path, const json& j);

}  // namespace regdet
