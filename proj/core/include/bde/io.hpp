#pragma once

#include <string>
#include <vector>

#include "bde/ensemble.hpp"

namespace bde {

struct LoadedCsv {
    Dataset data;
    std::vector<std::string> feature_names;
    std::vector<std::string> target_names;
    /// Classification label strings in first-appearance order; label i in
    /// Dataset::labels maps to label_dictionary[i].
    std::vector<std::string> label_dictionary;
};

/// Parses an RFC-style CSV (header row, comma separated, optional quotes).
/// Every non-target column becomes a feature, in file order. Errors carry
/// the offending data row and column.
LoadedCsv load_csv(const std::string& path, const std::vector<std::string>& target_names,
                   Task task);

/// CLI-level metadata persisted alongside the ensemble.
struct ModelExtras {
    std::vector<std::string> target_columns;
    std::vector<std::string> label_dictionary;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Writes the BDE1 container: magic, canonical JSON metadata block, dense
/// little-endian float64 sample payload, trailing FNV-1a 64 checksum.
/// The round trip is bitwise lossless.
void save_model(const PosteriorEnsemble& ens, const std::string& path,
                const ModelExtras& extras = {});

struct LoadedModel {
    PosteriorEnsemble ensemble;
    ModelExtras extras;
};

LoadedModel load_model(const std::string& path);

/// In-memory container encode/decode, shared by save/load and the tests.
std::string encode_model(const PosteriorEnsemble& ens, const ModelExtras& extras = {});
LoadedModel decode_model(const std::string& bytes);

/// Reads a JSON config file with exactly the documented keys (all optional;
/// unknown keys are errors). Architecture fields that depend on the data
/// (input_dim, head_dim, task) are filled in later by the caller.
EnsembleConfig load_config(const std::string& path);
EnsembleConfig parse_config_json(const std::string& text);

std::uint64_t fnv1a64(const void* bytes, std::size_t len);

}  // namespace bde
