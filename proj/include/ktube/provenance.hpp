#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "ktube/pipeline.hpp"

namespace ktube {

struct Provenance {
  std::string config_hash;  ///< 16 hex digits, FNV-1a 64 of the canonical config JSON
  Seeds seeds;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

std::uint64_t fnv1a64(std::string_view bytes);
/// Canonical form is nlohmann's compact dump, whose object keys are sorted.
std::string config_hash(const nlohmann::json& config);
Provenance make_provenance(const nlohmann::json& config, const Seeds& seeds);

nlohmann::json provenance_json(const Provenance& p);
Provenance provenance_from_json(const nlohmann::json& j);

/// Single-line comments embedding the provenance in text artifacts.
std::string csv_provenance_line(const Provenance& p);  ///< "# provenance: {...}"
std::string svg_provenance_comment(const Provenance& p);  ///< "<!-- provenance: {...} -->"

/// Finds the provenance in any artifact this library writes: a JSON document
/// with a top-level "provenance" key, or a text file with a provenance comment.
std::optional<Provenance> extract_provenance(std::string_view artifact_text);

}  // namespace ktube
