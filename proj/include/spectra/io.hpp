#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spectra/grid.hpp"

namespace spectra::io {

/// GRD1 layout, little-endian: "GRD1", u32 channels, u32 H, u32 W, f64 dx,
/// per channel (u32 length + UTF-8 name), then channels*H*W f64 values in
/// (channel, row, col) order.
std::string encode_grd(const GridField& field);
GridField decode_grd(const std::string& bytes, const std::string& source = "<memory>");

void write_grd(const std::filesystem::path& path, const GridField& field);
GridField read_grd(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

struct ManifestEntry {
  std::size_t index = 0;
  std::string input_path;
  std::string target_path;
  std::uint64_t seed = 0;
  std::string region_tag;
};

/// CSV with header index,input_path,target_path,seed,region_tag. Paths are
/// stored relative to the manifest's directory.
std::string encode_manifest(const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> decode_manifest(const std::string& text, const std::string& source);

/// Loads every pair listed in a manifest; relative paths resolve against the
/// manifest's directory.
std::vector<FieldPair> load_dataset(const std::filesystem::path& manifest);

}  // namespace spectra::io
