#include "spectra/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "spectra/error.hpp"

namespace spectra::io {
namespace {

constexpr char kGridMagic[4] = {'G', 'R', 'D', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      fail(ErrorCode::FormatError, source_ + ": truncated payload at byte " + std::to_string(pos_));
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::string& bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_grd(const GridField& field) {
  std::string out(kGridMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(field.channels()));
  put_u32(out, static_cast<std::uint32_t>(field.height()));
  put_u32(out, static_cast<std::uint32_t>(field.width()));
  put_f64(out, field.dx());
  for (const auto& name : field.channel_names()) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
  }
  out.reserve(out.size() + 8 * field.values().size());
  for (double v : field.values()) put_f64(out, v);
  return out;
}

GridField decode_grd(const std::string& bytes, const std::string& source) {
  Reader r(bytes, source);
  if (r.bytes(4) != std::string(kGridMagic, 4)) {
    fail(ErrorCode::FormatError, source + ": not a GRD1 file (bad magic)");
  }
  const std::uint32_t channels = r.u32();
  const std::uint32_t height = r.u32();
  const std::uint32_t width = r.u32();
  const double dx = r.f64();
  std::vector<std::string> names;
  for (std::uint32_t c = 0; c < channels; ++c) {
    const std::uint32_t len = r.u32();
    names.push_back(r.bytes(len));
  }
  const std::uint64_t count = std::uint64_t{channels} * height * width;
  if (r.remaining() / 8 < count) {
    fail(ErrorCode::FormatError, source + ": truncated payload (expected " +
                                     std::to_string(count) + " values)");
  }
  if (r.remaining() != count * 8) {
    fail(ErrorCode::FormatError, source + ": trailing bytes after value block");
  }
  std::vector<double> values(count);
  for (auto& v : values) v = r.f64();
  try {
    return make_field(std::move(values), height, width, dx, std::move(names));
  } catch (const Error& e) {
    throw Error(e.code(), source + ": " + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, path.string() + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, tmp.string() + ": cannot open for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) fail(ErrorCode::IoError, tmp.string() + ": write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    fail(ErrorCode::IoError, path.string() + ": rename failed: " + ec.message());
  }
}

void write_grd(const std::filesystem::path& path, const GridField& field) {
  write_atomic(path, encode_grd(field));
}

GridField read_grd(const std::filesystem::path& path) {
  return decode_grd(read_file(path), path.string());
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), ptr);
}

std::string encode_manifest(const std::vector<ManifestEntry>& entries) {
  std::string out = "index,input_path,target_path,seed,region_tag\n";
  for (const auto& e : entries) {
    out += std::to_string(e.index) + "," + e.input_path + "," + e.target_path + "," +
           std::to_string(e.seed) + "," + e.region_tag + "\n";
  }
  return out;
}

std::vector<ManifestEntry> decode_manifest(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "index,input_path,target_path,seed,region_tag") {
    fail(ErrorCode::FormatError, source + ": unexpected manifest header");
  }
  std::vector<ManifestEntry> entries;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string col;
    while (std::getline(ls, col, ',')) cols.push_back(col);
    if (cols.size() != 5) {
      fail(ErrorCode::FormatError, source + ":" + std::to_string(line_no) + ": expected 5 columns");
    }
    ManifestEntry e;
    try {
      e.index = std::stoull(cols[0]);
      e.seed = std::stoull(cols[3]);
    } catch (const std::exception&) {
      fail(ErrorCode::FormatError, source + ":" + std::to_string(line_no) + ": bad number");
    }
    e.input_path = cols[1];
    e.target_path = cols[2];
    e.region_tag = cols[4];
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<FieldPair> load_dataset(const std::filesystem::path& manifest) {
  const auto entries = decode_manifest(read_file(manifest), manifest.string());
  const auto base = manifest.parent_path();
  std::vector<FieldPair> pairs;
  pairs.reserve(entries.size());
  for (const auto& e : entries) {
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_absolute() ? path : base / path;
    };
    pairs.push_back(make_field_pair(read_grd(resolve(e.input_path)), read_grd(resolve(e.target_path))));
  }
  return pairs;
}

}  // namespace spectra::io
