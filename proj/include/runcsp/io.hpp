#pragma once

// File formats: DIMACS CNF, Gset and plain edge lists, assignments, the model
// container and dataset manifests.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "runcsp/csp.hpp"
#include "runcsp/generators.hpp"
#include "runcsp/model.hpp"
#include "runcsp/trainer.hpp"

namespace runcsp::io {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "max2sat", "maxcut", "3col", "maxis" or "kcol:<d>".
LanguagePtr language_by_name(const std::string& name);

/// 2-CNF in DIMACS format. A clause (!a | b) becomes R01 on (a, b).
Instance parse_dimacs_cnf(std::istream& in);
Instance parse_dimacs_cnf(const std::filesystem::path& path);
void write_dimacs_cnf(std::ostream& out, const Instance& inst);

enum class EdgeFormat { Gset, Simple };

/// Gset: "n m" header then 1-based "u v w" lines; weights must be +-1 (the
/// absolute value is used, with a warning for -1). Simple: 0-based "u v" lines,
/// with the node count taken from a "# nodes N" comment when present.
/// Repeated edges are kept and reported in `warnings`.
Instance parse_edge_list(std::istream& in, EdgeFormat format, std::vector<std::string>* warnings = nullptr);
Instance parse_edge_list(const std::filesystem::path& path, EdgeFormat format,
                         std::vector<std::string>* warnings = nullptr);
void write_edge_list(std::ostream& out, const Instance& graph);

/// Reads a graph or formula, choosing the parser from the extension: .cnf is
/// DIMACS, .gset is Gset, .edges a simple edge list; other files are sniffed
/// (an "n m" line followed by a three-column line means Gset). Graphs are relabelled to `language` when given.
Instance read_instance(const std::filesystem::path& path, LanguagePtr language = nullptr,
                       std::vector<std::string>* warnings = nullptr);

/// One "index value" line per variable plus a "# ..." summary line.
void write_assignment(std::ostream& out, const HardAssignment& a, const std::string& summary);

/// Writes via a temporary file in the same directory and renames it.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

// ---- model container -------------------------------------------------------

struct ModelFile {
  ModelConfig config;
  Parameters params;
  nlohmann::json train_config = nlohmann::json::object();
  nlohmann::json provenance = nlohmann::json::object();
};

nlohmann::json language_to_json(const ConstraintLanguage& lang);
LanguagePtr language_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& c);
/// Overrides the fields present in `j`; unknown keys are an error.
void train_config_from_json(const nlohmann::json& j, TrainConfig& c);

/// Magic, little-endian u64 header length, JSON header, then every parameter
/// as little-endian IEEE-754 doubles in header order.
std::string serialize_model(const ModelFile& model);
ModelFile deserialize_model(const std::string& bytes);
void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(const std::filesystem::path& path);

// ---- datasets --------------------------------------------------------------

nlohmann::json spec_to_json(const GenSpec& spec);
GenSpec spec_from_json(const nlohmann::json& j);

struct ManifestEntry {
  GenSpec spec;
  std::uint64_t seed = 0;
  std::vector<std::string> files;  // relative to the dataset directory
};

struct DatasetManifest {
  int version = 1;
  std::uint64_t global_seed = 0;
  std::string language;  // language name of the written instances
  std::vector<ManifestEntry> entries;
};

nlohmann::json manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);

/// Expands a generation plan into concrete manifest entries:
///   {"seed": S, "language": "maxcut", "families": [
///      {"kind": "er", "n": 100, "m": [100, 2000], "count": 500}, ...]}
/// A two-element array draws the parameter uniformly per instance (integers
/// inclusive for integer fields). Entry i is seeded with derive_seed(S, {i}).
DatasetManifest manifest_from_plan(const nlohmann::json& plan);

/// Generates every entry and writes the instances plus manifest.json into
/// `dir`. Instances are written as DIMACS (formulas) or simple edge lists.
void write_dataset(const std::filesystem::path& dir, DatasetManifest& manifest);
/// Loads all instances listed in dir/manifest.json, in manifest order.
std::vector<Instance> read_dataset(const std::filesystem::path& dir, LanguagePtr language = nullptr);
/// FNV-1a hash of the manifest file, as 16 hex digits.
std::string manifest_hash(const std::filesystem::path& dir);

}  // namespace runcsp::io
