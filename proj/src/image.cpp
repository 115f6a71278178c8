#include "revision/image.hpp"

#include "revision/error.hpp"
#include "revision/io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>

namespace revision {

namespace {

struct PgmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
};

int read_token(std::istream& is, const std::filesystem::path& path) {
  int c = is.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = is.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = is.get();
  }
  if (c == EOF || !std::isdigit(c)) fail(ErrorCode::ParseError, path.string() + ": malformed PGM header");
  long v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    if (v > 1 << 24) fail(ErrorCode::ParseError, path.string() + ": PGM dimension too large");
    c = is.get();
  }
  return static_cast<int>(v);  // the single whitespace after the token is consumed
}

PgmHeader read_header(std::istream& is, const std::filesystem::path& path) {
  char magic[2] = {};
  is.read(magic, 2);
  if (!is || magic[0] != 'P' || magic[1] != '5') fail(ErrorCode::ParseError, path.string() + " is not a binary PGM");
  PgmHeader h;
  h.width = read_token(is, path);
  h.height = read_token(is, path);
  h.maxval = read_token(is, path);
  if (h.width < 1 || h.height < 1 || h.maxval < 1 || h.maxval > 65535)
    fail(ErrorCode::ParseError, path.string() + ": invalid PGM header");
  return h;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::IoError, "cannot write " + path.string());
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::IoError, "cannot read " + path.string());
  return is;
}

std::filesystem::path sidecar(const std::filesystem::path& path) { return path.string() + ".json"; }

}  // namespace

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (!os) fail(ErrorCode::IoError, "failed writing " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
  auto is = open_in(path);
  const PgmHeader h = read_header(is, path);
  if (h.maxval > 255) fail(ErrorCode::ParseError, path.string() + ": expected an 8-bit PGM");
  GrayImage img(h.width, h.height);
  is.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (!is) fail(ErrorCode::ParseError, path.string() + ": truncated pixel data");
  return img;
}

void write_pgm16(const Grid<std::uint16_t>& img, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
  for (std::uint16_t v : img.data) {
    os.put(static_cast<char>(v >> 8));  // PGM stores 16-bit samples big-endian
    os.put(static_cast<char>(v & 0xff));
  }
  if (!os) fail(ErrorCode::IoError, "failed writing " + path.string());
}

Grid<std::uint16_t> read_pgm16(const std::filesystem::path& path) {
  auto is = open_in(path);
  const PgmHeader h = read_header(is, path);
  if (h.maxval < 256) fail(ErrorCode::ParseError, path.string() + ": expected a 16-bit PGM");
  Grid<std::uint16_t> img(h.width, h.height);
  for (auto& v : img.data) {
    const int hi = is.get();
    const int lo = is.get();
    if (lo == EOF || hi == EOF) fail(ErrorCode::ParseError, path.string() + ": truncated pixel data");
    v = static_cast<std::uint16_t>((hi << 8) | lo);
  }
  return img;
}

void write_depth(const DepthMap& depth, const std::filesystem::path& path) {
  if (!(depth.scale > 0.0)) fail(ErrorCode::InvalidConfig, "depth scale must be positive");
  Grid<std::uint16_t> q(depth.values.width, depth.values.height);
  for (std::size_t i = 0; i < q.data.size(); ++i) {
    const double steps = std::nearbyint(depth.values.data[i] / depth.scale);
    if (!(steps >= 0.0 && steps <= 65535.0)) fail(ErrorCode::InvalidConfig, "depth value outside the 16-bit range");
    q.data[i] = static_cast<std::uint16_t>(steps);
  }
  write_pgm16(q, path);
  write_json(sidecar(path), {{"scale", depth.scale}});
}

DepthMap read_depth(const std::filesystem::path& path) {
  const Grid<std::uint16_t> q = read_pgm16(path);
  DepthMap d;
  d.scale = read_json(sidecar(path)).at("scale").get<double>();
  d.values = Grid<double>(q.width, q.height);
  for (std::size_t i = 0; i < q.data.size(); ++i) d.values.data[i] = q.data[i] * d.scale;
  return d;
}

void write_confidence(const Grid<double>& confidence, const std::array<double, 3>& triple,
                      const std::filesystem::path& path) {
  GrayImage q(confidence.width, confidence.height);
  for (std::size_t i = 0; i < q.data.size(); ++i) {
    const double v = confidence.data[i];
    if (v == triple[0]) q.data[i] = 2;
    else if (v == triple[1]) q.data[i] = 1;
    else if (v == triple[2]) q.data[i] = 0;
    else fail(ErrorCode::InvalidConfig, "confidence value " + std::to_string(v) + " is not in the triple");
  }
  write_pgm(q, path);
  write_json(sidecar(path), {{"triple", triple}});
}

Grid<double> read_confidence(const std::filesystem::path& path) {
  const GrayImage q = read_pgm(path);
  const auto triple = read_json(sidecar(path)).at("triple").get<std::array<double, 3>>();
  Grid<double> out(q.width, q.height);
  for (std::size_t i = 0; i < q.data.size(); ++i) {
    if (q.data[i] > 2) fail(ErrorCode::ParseError, path.string() + ": confidence byte outside {0,1,2}");
    out.data[i] = triple[2 - q.data[i]];
  }
  return out;
}

}  // namespace revision
