#pragma once

#include <json.hpp>

#include "vbmi/data.hpp"
#include "vbmi/imputer.hpp"
#include "vbmi/simstudy.hpp"
#include "vbmi/vb.hpp"

namespace vbmi {

using nlohmann::json;

json to_json(const VariableSpec& v);
VariableSpec variable_from_json(const json& j);
json to_json(const Schema& s);
Schema schema_from_json(const json& j);

json to_json(const Hyperparameters& h);
Hyperparameters hyper_from_json(const json& j, std::size_t l);
json to_json(const FitOptions& o);
FitOptions fit_options_from_json(const json& j, FitOptions base = {});

json to_json(const VariationalState& s);
json to_json(const FitDiagnostics& d);

json to_json(const SimConfig& c);
SimConfig sim_config_from_json(const json& j);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace vbmi
