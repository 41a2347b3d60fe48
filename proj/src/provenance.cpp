#include "ktube/provenance.hpp"

#include <cstdio>

namespace ktube {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const nlohmann::json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

Provenance make_provenance(const nlohmann::json& config, const Seeds& seeds) {
  return Provenance{config_hash(config), seeds};
}

nlohmann::json provenance_json(const Provenance& p) {
  return nlohmann::json{{"config_hash", p.config_hash}, {"seeds", p.seeds}};
}

Provenance provenance_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("config_hash") && j.contains("seeds"),
          "provenance: expected config_hash and seeds");
  return Provenance{j.at("config_hash").get<std::string>(), j.at("seeds").get<Seeds>()};
}

std::string csv_provenance_line(const Provenance& p) { return "# provenance: " + provenance_json(p).dump(); }

std::string svg_provenance_comment(const Provenance& p) {
  return "<!-- provenance: " + provenance_json(p).dump() + " -->";
}

std::optional<Provenance> extract_provenance(std::string_view text) {
  const auto doc = nlohmann::json::parse(text, nullptr, false);
  if (!doc.is_discarded() && doc.is_object() && doc.contains("provenance")) {
    return provenance_from_json(doc.at("provenance"));
  }
  constexpr std::string_view marker = "provenance: ";
  const auto at = text.find(marker);
  if (at == std::string_view::npos) return std::nullopt;
  const auto start = at + marker.size();
  auto end = text.find('\n', start);
  if (end == std::string_view::npos) end = text.size();
  std::string_view payload = text.substr(start, end - start);
  if (const auto close = payload.rfind("-->"); close != std::string_view::npos) payload = payload.substr(0, close);
  const auto j = nlohmann::json::parse(payload, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return provenance_from_json(j);
}

}  // namespace ktube
