#include "faor/manifest.hpp"

#include <fstream>

#include "faor/errors.hpp"
#include "json.hpp"

#ifndef FAOR_VERSION
#define FAOR_VERSION "0.0.0"
#endif

namespace faor {

std::string version_string() { return FAOR_VERSION; }

std::string RunManifest::to_json() const {
  for (double t : {timings.encode_ms, timings.resample_ms, timings.sgif_ms, timings.total_ms}) {
    if (!(t >= 0.0)) throw InputError("manifest timings must be non-negative");
  }
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config"] = config_path;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["seed"] = seed;
  j["timings_ms"] = {{"encode", timings.encode_ms},
                     {"resample", timings.resample_ms},
                     {"sgif", timings.sgif_ms},
                     {"total", timings.total_ms}};
  j["version"] = version;
  j["details"] = details;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.config_path = j.at("config").get<std::string>();
    m.inputs = j.at("inputs").get<std::vector<std::string>>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto& t = j.at("timings_ms");
    m.timings = {t.at("encode").get<double>(), t.at("resample").get<double>(),
                 t.at("sgif").get<double>(), t.at("total").get<double>()};
    m.version = j.at("version").get<std::string>();
    m.details = j.at("details").get<std::map<std::string, std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed manifest: ") + e.what());
  }
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_json();
  if (!out) throw InputError("failed writing " + path.string());
}

}  // namespace faor
