#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "sgdrf/inference.hpp"
#include "sgdrf/latent_model.hpp"
#include "sgdrf/metrics.hpp"
#include "sgdrf/variational.hpp"
#include "sgdrf/vgp.hpp"

namespace sgdrf {

// Text outputs may begin with '#'-prefixed provenance lines
// (e.g. "# config_hash=..."); readers skip them.

struct Dataset {
  int dim = 0;
  int W = 0;
  std::vector<ObservationRecord> records;
};

// Wide CSV: header "x1[,x2],c0,...,c{W-1}", one record per line.
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(const Dataset& data, const std::filesystem::path& path,
                   const std::string& config_hash = "");

// CSV with header "x1[,x2]".
std::vector<Location> read_locations(const std::filesystem::path& path);

// Coordinates plus p0..p{W-1}, 17 significant digits.
void write_predictions(const PredictiveDistribution& pred,
                       const std::filesystem::path& path,
                       const std::string& config_hash,
                       const std::string& model_kind);
PredictiveDistribution read_predictions(const std::filesystem::path& path);

// Coordinates plus theta0..theta{K-1}.
void write_theta(const PredictiveDistribution& pred,
                 const std::filesystem::path& path, const std::string& config_hash);
// K rows, header c0..c{W-1}.
void write_phi(const PhiMatrix& phi, const std::filesystem::path& path,
               const std::string& config_hash);

// "checkpoint_t,coverage_fraction,q25,median,q75" after provenance lines
// carrying epsilon, config hash, and model kind.
void write_metrics(const std::vector<PklSummary>& summaries,
                   const std::filesystem::path& path, double epsilon,
                   const std::string& config_hash, const std::string& model_kind);
std::vector<PklSummary> read_metrics(const std::filesystem::path& path);

// Label grid as CSV (one line per dimension-1 row, or a single line in 1-D)
// and a P2 PGM image at the same path with extension ".pgm".
void write_community_map(const CommunityMap& map, int K,
                         const std::filesystem::path& csv_path,
                         const std::string& config_hash);
CommunityMap read_community_map(const std::filesystem::path& csv_path);

struct SgdrfCheckpoint {
  VariationalState state;
  OptimizerState optimizer;
  std::string config_hash;
};

struct VgpCheckpoint {
  VgpState state;
  std::string config_hash;
};

using Checkpoint = std::variant<SgdrfCheckpoint, VgpCheckpoint>;

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary little-endian: magic, version, kind, config hash, dimensions,
// parameters, optimizer moments and counters, end marker.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws ValidationError naming both values on mismatch.
void check_checkpoint_dimensions(const Checkpoint& ckpt, int K, Eigen::Index m, int W);

// Temp file + rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace sgdrf
