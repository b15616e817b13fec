#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>

#include "speclaw/resolvent.hpp"
#include "speclaw/statistics.hpp"

namespace speclaw {

using nlohmann::json;

/// {"phi": f, "atoms": [{"s": f, "weight": f}], "dims": {"M", "Mhat", "N"}}
json model_to_json(const PopulationModel& model);
PopulationModel model_from_json(const json& j);

/// Rejects any key of j not listed in allowed; context names the object
/// in the error message.
void require_keys(const json& j, const std::vector<std::string>& allowed,
                  const std::string& context);

json profile_to_json(const DensityProfile& profile);

/// CSV with header "E,rho" over an evaluation window padded around the
/// support. Values are printed with 17 significant digits so reruns are
/// byte-identical.
void write_density_csv(const std::filesystem::path& path, const DensityProfile& profile,
                       int points);

void write_gamma_csv(const std::filesystem::path& path, const std::vector<double>& gamma);

/// Columns: z_re, z_im, psi, max_aniso, aniso_ratio, avg_err, avg_ratio,
/// n_vec, seed.
void write_scan_csv(const std::filesystem::path& path, const ErrorScan& scan);

void write_edge_samples_csv(const std::filesystem::path& path, const EdgeSampleSet& set);

/// Minimal static SVG line plot; deterministic bytes for fixed input.
struct Curve {
    std::string name;
    std::vector<std::pair<double, double>> points;
};
void write_svg_curves(const std::filesystem::path& path, const std::string& title,
                      const std::vector<Curve>& curves, bool log_x = false);

std::uint64_t fnv1a_hash(const std::string& data);

/// Reproducibility record: inputs, seeds, thresholds, outputs.
struct RunManifest {
    std::string command;
    json config;
    std::uint64_t seed = 0;
    int trials = 0;
    json thresholds;
    std::vector<std::string> outputs;
    double wall_seconds = 0.0;
};
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

/// Flat binary sample dump: magic, version, complex flag, dims, seed,
/// then row-major 64-bit floats (re,im interleaved when complex).
void write_sample_binary(const std::filesystem::path& path, const EnsembleSample& sample);
EnsembleSample read_sample_binary(const std::filesystem::path& path);

}  // namespace speclaw
