#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "adatrack/image.hpp"

namespace adatrack {

Frame::Frame(int index, std::vector<Plane8> planes) : index_(index), planes_(std::move(planes)) {
  if (planes_.empty()) throw InvalidInput("frame needs at least one channel");
  for (const auto& p : planes_) {
    if (p.rows() < 1 || p.cols() < 1 || p.rows() != planes_[0].rows() ||
        p.cols() != planes_[0].cols()) {
      throw InvalidInput("frame planes must be non-empty and equally sized");
    }
  }
  means_.reserve(planes_.size());
  for (const auto& p : planes_) {
    // exact integer sum keeps the mean independent of summation order
    std::uint64_t s = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) s += p.data()[i];
    means_.push_back(static_cast<double>(s) / (255.0 * static_cast<double>(p.size())));
  }
}

bool Frame::operator==(const Frame& other) const {
  if (index_ != other.index_ || planes_.size() != other.planes_.size()) return false;
  for (std::size_t c = 0; c < planes_.size(); ++c) {
    if (planes_[c].rows() != other.planes_[c].rows() ||
        planes_[c].cols() != other.planes_[c].cols() || !(planes_[c] == other.planes_[c]).all()) {
      return false;
    }
  }
  return true;
}

namespace {

std::string readHeaderToken(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

Frame readPnm(const std::filesystem::path& path, int index) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path.string());
  const std::string magic = readHeaderToken(in);
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6") {
    throw DataError("unsupported PNM variant in " + path.string());
  }
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(readHeaderToken(in));
    h = std::stoi(readHeaderToken(in));
    maxval = std::stoi(readHeaderToken(in));
  } catch (const std::exception&) {
    throw DataError("malformed PNM header in " + path.string());
  }
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255) {
    throw DataError("unsupported PNM dimensions or depth in " + path.string());
  }
  const int nch = (magic == "P3" || magic == "P6") ? 3 : 1;
  std::vector<Plane8> planes(static_cast<std::size_t>(nch), Plane8(h, w));
  const bool binary = magic == "P5" || magic == "P6";
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int k = 0; k < nch; ++k) {
        int v;
        if (binary) {
          v = in.get();
          if (v == EOF) throw DataError("truncated PNM data in " + path.string());
        } else {
          const std::string tok = readHeaderToken(in);
          if (tok.empty()) throw DataError("truncated PNM data in " + path.string());
          v = std::stoi(tok);
        }
        planes[static_cast<std::size_t>(k)](r, c) =
            static_cast<std::uint8_t>(std::lround(255.0 * std::min(v, maxval) / maxval));
      }
    }
  }
  return Frame(index, std::move(planes));
}

void writePnm(const std::filesystem::path& path, const Frame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write image " + path.string());
  const bool rgb = frame.channels() == 3;
  out << (rgb ? "P6" : "P5") << '\n' << frame.width() << ' ' << frame.height() << "\n255\n";
  std::string row;
  for (int r = 0; r < frame.height(); ++r) {
    row.clear();
    for (int c = 0; c < frame.width(); ++c) {
      for (int k = 0; k < (rgb ? 3 : 1); ++k) row.push_back(static_cast<char>(frame.plane(k)(r, c)));
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

Frame readPng(const std::filesystem::path& path, int index) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError("cannot read PNG " + path.string() + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int nch = color ? 3 : 1;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DataError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  const int w = static_cast<int>(image.width), h = static_cast<int>(image.height);
  std::vector<Plane8> planes(static_cast<std::size_t>(nch), Plane8(h, w));
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      for (int k = 0; k < nch; ++k) {
        planes[static_cast<std::size_t>(k)](r, c) =
            buf[static_cast<std::size_t>((r * w + c) * nch + k)];
      }
    }
  }
  return Frame(index, std::move(planes));
}

void writePng(const std::filesystem::path& path, const Frame& frame) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width());
  image.height = static_cast<png_uint_32>(frame.height());
  const bool rgb = frame.channels() == 3;
  image.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int nch = rgb ? 3 : 1;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(image));
  for (int r = 0; r < frame.height(); ++r) {
    for (int c = 0; c < frame.width(); ++c) {
      for (int k = 0; k < nch; ++k) {
        buf[static_cast<std::size_t>((r * frame.width() + c) * nch + k)] = frame.plane(k)(r, c);
      }
    }
  }
  if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw DataError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

std::string lowerExtension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace

Frame readImage(const std::filesystem::path& path, int index) {
  const std::string ext = lowerExtension(path);
  if (ext == ".png") return readPng(path, index);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return readPnm(path, index);
  throw DataError("unsupported image format: " + path.string());
}

void writeImage(const std::filesystem::path& path, const Frame& frame) {
  if (frame.channels() != 1 && frame.channels() != 3) {
    throw InvalidInput("only grayscale or RGB frames can be written");
  }
  const std::string ext = lowerExtension(path);
  if (ext == ".png") {
    writePng(path, frame);
  } else if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
    writePnm(path, frame);
  } else {
    throw DataError("unsupported image format: " + path.string());
  }
}

}  // namespace adatrack
