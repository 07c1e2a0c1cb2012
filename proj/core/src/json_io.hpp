#ifndef CJSIS_SRC_JSON_IO_HPP
#define CJSIS_SRC_JSON_IO_HPP

#include <filesystem>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "cjsis/isweights.hpp"
#include "cjsis/mcmc.hpp"
#include "cjsis/model.hpp"
#include "cjsis/subsample.hpp"

namespace cjsis::detail {

using json = nlohmann::ordered_json;

/// Throws ConfigError naming `where` if `j` holds a key outside `allowed`.
void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where);

json to_json(const ModelSpec& spec);
ModelSpec model_from_json(const json& j);

json to_json(const ChainConfig& config);
ChainConfig chain_from_json(const json& j, ChainConfig base = {});

json to_json(const SubsamplePlan& plan);
SubsamplePlan subsample_from_json(const json& j, SubsamplePlan base = {});

json to_json(const WeightEstimatorConfig& config);
WeightEstimatorConfig weights_from_json(const json& j, WeightEstimatorConfig base = {});

json theta_to_json(const ModelSpec& spec, int num_occasions, const Theta& theta);
Theta theta_from_json(const ModelSpec& spec, int num_occasions, const json& j);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

}  // namespace cjsis::detail

#endif
