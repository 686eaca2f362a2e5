#include "spectra/grid.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "spectra/error.hpp"

namespace spectra {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::InvalidSpacing: return "InvalidSpacing";
    case ErrorCode::NotDivisible: return "NotDivisible";
    case ErrorCode::ChannelOutOfRange: return "ChannelOutOfRange";
    case ErrorCode::TooFewBins: return "TooFewBins";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::FairEstimatorNeedsTwoMembers: return "FairEstimatorNeedsTwoMembers";
    case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EvenKernel: return "EvenKernel";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

GridField make_field(std::vector<double> values, std::size_t height, std::size_t width,
                     double dx, std::vector<std::string> channel_names) {
  if (height < 2 || width < 2) {
    fail(ErrorCode::DimensionMismatch,
         "grid must have at least 2 rows and 2 columns, got " + std::to_string(height) + "x" +
             std::to_string(width));
  }
  if (channel_names.empty()) fail(ErrorCode::DimensionMismatch, "field needs at least one channel");
  if (!(dx > 0.0) || !std::isfinite(dx)) {
    fail(ErrorCode::InvalidSpacing, "grid spacing must be positive and finite");
  }
  const std::size_t expected = channel_names.size() * height * width;
  if (values.size() != expected) {
    fail(ErrorCode::DimensionMismatch, "expected " + std::to_string(expected) + " values, got " +
                                           std::to_string(values.size()));
  }
  std::set<std::string> unique(channel_names.begin(), channel_names.end());
  if (unique.size() != channel_names.size()) {
    fail(ErrorCode::DimensionMismatch, "channel names must be unique");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      fail(ErrorCode::NonFiniteValue, "non-finite value at flat index " + std::to_string(i));
    }
  }
  GridField f;
  f.values_ = std::move(values);
  f.height_ = height;
  f.width_ = width;
  f.dx_ = dx;
  f.names_ = std::move(channel_names);
  return f;
}

std::span<const double> GridField::channel(std::size_t c) const {
  if (c >= channels()) {
    fail(ErrorCode::ChannelOutOfRange, "channel " + std::to_string(c) + " out of range (" +
                                           std::to_string(channels()) + " channels)");
  }
  return std::span<const double>(values_).subspan(c * plane_size(), plane_size());
}

std::optional<std::size_t> GridField::find_channel(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

std::size_t GridField::channel_index(const std::string& name) const {
  if (auto idx = find_channel(name)) return *idx;
  fail(ErrorCode::ChannelOutOfRange, "no channel named '" + name + "'");
}

bool GridField::same_grid(const GridField& other) const noexcept {
  return height_ == other.height_ && width_ == other.width_ && dx_ == other.dx_;
}

GridField GridField::extract(std::size_t c) const {
  auto plane = channel(c);
  return make_field(std::vector<double>(plane.begin(), plane.end()), height_, width_, dx_,
                    {names_[c]});
}

GridField stack_channels(const std::vector<GridField>& parts) {
  if (parts.empty()) fail(ErrorCode::DimensionMismatch, "nothing to stack");
  std::vector<double> values;
  std::vector<std::string> names;
  for (const auto& p : parts) {
    require_same_grid(parts.front(), p, "stack_channels");
    values.insert(values.end(), p.values().begin(), p.values().end());
    names.insert(names.end(), p.channel_names().begin(), p.channel_names().end());
  }
  const auto& f = parts.front();
  return make_field(std::move(values), f.height(), f.width(), f.dx(), std::move(names));
}

FieldPair make_field_pair(GridField input, GridField target) {
  const double factor = static_cast<double>(target.height()) / static_cast<double>(input.height());
  const auto expect_h = std::llround(factor * static_cast<double>(input.height()));
  const auto expect_w = std::llround(factor * static_cast<double>(input.width()));
  if (expect_h != static_cast<long long>(target.height()) ||
      expect_w != static_cast<long long>(target.width())) {
    fail(ErrorCode::DimensionMismatch, "target grid is not a uniform refinement of the input grid");
  }
  for (const auto& name : target.channel_names()) {
    if (!input.find_channel(name)) {
      fail(ErrorCode::ChannelMismatch, "target channel '" + name + "' missing from input");
    }
  }
  return FieldPair{std::move(input), std::move(target), factor};
}

GridField block_average_downsample(const GridField& field, std::size_t factor) {
  if (factor == 0 || field.height() % factor != 0 || field.width() % factor != 0) {
    fail(ErrorCode::NotDivisible, "grid " + std::to_string(field.height()) + "x" +
                                      std::to_string(field.width()) +
                                      " is not divisible by factor " + std::to_string(factor));
  }
  const std::size_t h = field.height() / factor;
  const std::size_t w = field.width() / factor;
  const double inv = 1.0 / static_cast<double>(factor * factor);
  std::vector<double> out(field.channels() * h * w, 0.0);
  for (std::size_t c = 0; c < field.channels(); ++c) {
    auto src = field.channel(c);
    double* dst = out.data() + c * h * w;
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        double sum = 0.0;
        for (std::size_t a = 0; a < factor; ++a) {
          const double* row = src.data() + (i * factor + a) * field.width() + j * factor;
          for (std::size_t b = 0; b < factor; ++b) sum += row[b];
        }
        dst[i * w + j] = sum * inv;
      }
    }
  }
  return make_field(std::move(out), h, w, field.dx() * static_cast<double>(factor),
                    field.channel_names());
}

std::vector<ChannelStats> field_stats(const GridField& field) {
  std::vector<ChannelStats> stats;
  stats.reserve(field.channels());
  const double n = static_cast<double>(field.plane_size());
  for (std::size_t c = 0; c < field.channels(); ++c) {
    auto v = field.channel(c);
    ChannelStats s;
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / n;
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.variance = ss / n;
    stats.push_back(s);
  }
  return stats;
}

void require_same_grid(const GridField& a, const GridField& b, const char* context) {
  if (!a.same_grid(b)) {
    fail(ErrorCode::GridMismatch,
         std::string(context) + ": grids differ (" + std::to_string(a.height()) + "x" +
             std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
             std::to_string(b.width()) + ")");
  }
}

}  // namespace spectra
