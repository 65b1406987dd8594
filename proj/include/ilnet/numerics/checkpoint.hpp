#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ilnet/numerics/dense_array.hpp"
#include "ilnet/numerics/param_store.hpp"

namespace ilnet {

/// On-disk checkpoint: `manifest.txt` lists metadata and every array's name and
/// shape in blob order; `weights.bin` holds the arrays' values as little-endian
/// IEEE-754 doubles, concatenated in manifest order.
///
/// Manifest grammar (one record per line):
///   ilnet-checkpoint <version>
///   meta <key> <value...>
///   array <name> <d0>x<d1>x...      ("scalar" for rank 0)
struct Checkpoint {
  static constexpr int kVersion = 1;

  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, DenseArray>> arrays;

  const DenseArray& array(const std::string& name) const;
  bool has_array(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);
/// Throws VersionError on a foreign header, ParseError on malformed content.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// Appends every store entry (values only) to the checkpoint.
void append_params(Checkpoint& ckpt, const ParamStore& store, const std::string& prefix = "");
/// Copies arrays `prefix + name` into the store; shapes and names must match exactly.
void restore_params(const Checkpoint& ckpt, ParamStore& store, const std::string& prefix = "");

}  // namespace ilnet
