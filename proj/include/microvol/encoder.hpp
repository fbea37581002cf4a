#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "microvol/lod.hpp"
#include "microvol/micro_model.hpp"
#include "microvol/volume.hpp"

namespace microvol {

/// RMSE of a fit per searched NCP.
using ErrorProfile = std::map<int, double>;

/// RMS of (decoded - sample) over every sample of the micro-block.
double error_rmse(const ScalarVolume& block, const MicroModel& model);

struct SearchResult {
    int ncp_star = 0;
    ErrorProfile profile;
    bool complex = false;
    bool unmeetable = false;  // no NCP met the bound; ncp_star is the max NCP
    MicroModel model;         // fitted at ncp_star
};

/// Smallest NCP whose fit has RMSE strictly below `error_bound`.
///
/// The default sweeps every NCP from the block edge down to degree+1 so the
/// result holds without assuming RMSE is monotone in NCP. `assume_monotone`
/// bisects instead and may miss a smaller admissible NCP.
SearchResult in_level_search(const ScalarVolume& block, double error_bound, int degree, int lod = 0,
                             bool assume_monotone = false);

struct EncodeOptions {
    double error_bound = 1e-4;
    int degree = 2;
    bool assume_monotone = false;
};

struct EncodedBlock {
    MicroModel model;
    ErrorProfile profile;  // empty for blocks encoded without a search
    double rmse = 0.0;
    bool searched = false;
    bool complex = false;
    bool unmeetable = false;
};

struct EncodeResult {
    LODManifest manifest;
    std::map<BlockAddress, EncodedBlock> blocks;
    std::size_t searched_blocks = 0;
    std::size_t total_blocks = 0;
    std::size_t fits = 0;
    std::vector<std::string> warnings;
};

/// Cross-level adaptive encoding. The coarsest level is searched in full; a
/// finer block is searched only when its parent was complex, otherwise it is
/// fitted at degree+1 control points and marked simple. Blocks of a level are
/// encoded in parallel; a level completes before the next begins.
EncodeResult cross_level_encode(const ScalarVolume& volume, const HierarchySpec& spec, const EncodeOptions& opts);

/// Single-threaded reference of cross_level_encode; identical output.
EncodeResult cross_level_encode_serial(const ScalarVolume& volume, const HierarchySpec& spec,
                                       const EncodeOptions& opts);

/// Searches every block on every level (no cross-level pruning).
EncodeResult full_in_level_encode(const ScalarVolume& volume, const HierarchySpec& spec, const EncodeOptions& opts);

/// Every block fitted at one fixed NCP (ncp <= 0 means the micro edge length).
EncodeResult fixed_ncp_encode(const ScalarVolume& volume, const HierarchySpec& spec, int ncp, int degree);

/// Writes manifest.json and one .mfa file per block under `root`.
void write_mfa_store(const std::filesystem::path& root, const EncodeResult& result);

/// Raw volume bytes divided by the summed micro-model bytes of all levels.
double compression_ratio(const LODManifest& manifest, std::size_t raw_bytes);

}  // namespace microvol
