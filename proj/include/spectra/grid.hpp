#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spectra {

/// Multi-channel scalar field on a uniform, isotropic grid.
///
/// Values are stored row-major as (channel, row, col). Rows run along y
/// (meridional), columns along x (zonal); every derivative in the toolkit
/// follows this convention. Instances are immutable once built; use
/// make_field() to construct one.
class GridField {
 public:
  std::size_t channels() const noexcept { return names_.size(); }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return height_ * width_; }
  double dx() const noexcept { return dx_; }
  const std::vector<std::string>& channel_names() const noexcept { return names_; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> channel(std::size_t c) const;
  double at(std::size_t c, std::size_t row, std::size_t col) const {
    return values_[(c * height_ + row) * width_ + col];
  }

  std::optional<std::size_t> find_channel(const std::string& name) const;
  /// Throws ChannelOutOfRange when the name is absent.
  std::size_t channel_index(const std::string& name) const;

  /// Same H, W and dx (channel layout not compared).
  bool same_grid(const GridField& other) const noexcept;

  /// New single-channel field holding a copy of channel `c`.
  GridField extract(std::size_t c) const;

 private:
  friend GridField make_field(std::vector<double>, std::size_t, std::size_t, double,
                              std::vector<std::string>);
  GridField() = default;

  std::vector<double> values_;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  double dx_ = 0.0;
  std::vector<std::string> names_;
};

/// Validating constructor. Channel count is taken from `channel_names`.
GridField make_field(std::vector<double> values, std::size_t height, std::size_t width,
                     double dx, std::vector<std::string> channel_names);

/// Stacks the channels of several fields on one grid into a single field.
GridField stack_channels(const std::vector<GridField>& parts);

struct FieldPair {
  GridField input;
  GridField target;
  double factor = 1.0;
};

FieldPair make_field_pair(GridField input, GridField target);

/// Mean over non-overlapping factor x factor blocks; dx grows by `factor`.
GridField block_average_downsample(const GridField& field, std::size_t factor);

struct ChannelStats {
  double mean = 0.0;
  double variance = 0.0;  // population variance
  double min = 0.0;
  double max = 0.0;
};

std::vector<ChannelStats> field_stats(const GridField& field);

void require_same_grid(const GridField& a, const GridField& b, const char* context);

}  // namespace spectra
