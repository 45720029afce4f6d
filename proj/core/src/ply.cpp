// Copyright 2026 The bevprompt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>

#include "bevprompt/errors.hpp"
#include "bevprompt/scene.hpp"

namespace bevprompt {
namespace {

namespace fs = std::filesystem;

enum class Scalar { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

struct Property {
  std::string name;
  Scalar type = Scalar::kFloat32;
  bool is_list = false;
  Scalar count_type = Scalar::kUint8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

enum class Format { kAscii, kBinaryLE };

struct Header {
  Format format = Format::kAscii;
  std::vector<Element> elements;
  std::size_t body_offset = 0;
};

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::kInt8:
    case Scalar::kUint8: return 1;
    case Scalar::kInt16:
    case Scalar::kUint16: return 2;
    case Scalar::kInt32:
    case Scalar::kUint32:
    case Scalar::kFloat32: return 4;
    case Scalar::kFloat64: return 8;
  }
  return 0;
}

Scalar parse_scalar(std::string_view name) {
  if (name == "char" || name == "int8") return Scalar::kInt8;
  if (name == "uchar" || name == "uint8") return Scalar::kUint8;
  if (name == "short" || name == "int16") return Scalar::kInt16;
  if (name == "ushort" || name == "uint16") return Scalar::kUint16;
  if (name == "int" || name == "int32") return Scalar::kInt32;
  if (name == "uint" || name == "uint32") return Scalar::kUint32;
  if (name == "float" || name == "float32") return Scalar::kFloat32;
  if (name == "double" || name == "float64") return Scalar::kFloat64;
  throw Error(ErrorKind::kParse, "unknown PLY property type '" + std::string(name) + "'");
}

bool is_integer(Scalar s) { return s != Scalar::kFloat32 && s != Scalar::kFloat64; }

template <typename T>
T load_le(const std::uint8_t* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* bytes = reinterpret_cast<std::uint8_t*>(&value);
    std::reverse(bytes, bytes + sizeof(T));
  }
  return value;
}

double read_binary(Scalar s, const std::uint8_t* p) {
  switch (s) {
    case Scalar::kInt8: return static_cast<std::int8_t>(*p);
    case Scalar::kUint8: return *p;
    case Scalar::kInt16: return load_le<std::int16_t>(p);
    case Scalar::kUint16: return load_le<std::uint16_t>(p);
    case Scalar::kInt32: return load_le<std::int32_t>(p);
    case Scalar::kUint32: return load_le<std::uint32_t>(p);
    case Scalar::kFloat32: return load_le<float>(p);
    case Scalar::kFloat64: return load_le<double>(p);
  }
  return 0.0;
}

Header parse_header(const std::string& bytes) {
  Header header;
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string_view {
    if (pos >= bytes.size()) throw Error(ErrorKind::kParse, "PLY header is not terminated by end_header");
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string::npos) end = bytes.size();
    std::string_view line(bytes.data() + pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };
  if (next_line() != "ply") throw Error(ErrorKind::kParse, "missing 'ply' magic");
  bool have_format = false;
  while (true) {
    const std::string line(next_line());
    std::istringstream in(line);
    std::string keyword;
    in >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "end_header") break;
    if (keyword == "format") {
      std::string fmt;
      in >> fmt;
      if (fmt == "ascii") {
        header.format = Format::kAscii;
      } else if (fmt == "binary_little_endian") {
        header.format = Format::kBinaryLE;
      } else {
        throw Error(ErrorKind::kUnsupportedFormat, "PLY format '" + fmt + "' is not supported");
      }
      have_format = true;
    } else if (keyword == "element") {
      Element e;
      long long count = -1;
      in >> e.name >> count;
      if (e.name.empty() || count < 0) throw Error(ErrorKind::kParse, "bad element line: " + line);
      e.count = static_cast<std::size_t>(count);
      header.elements.push_back(std::move(e));
    } else if (keyword == "property") {
      if (header.elements.empty()) throw Error(ErrorKind::kParse, "property before any element");
      Property p;
      std::string type;
      in >> type;
      if (type == "list") {
        std::string count_type, item_type;
        in >> count_type >> item_type >> p.name;
        p.is_list = true;
        p.count_type = parse_scalar(count_type);
        p.type = parse_scalar(item_type);
      } else {
        p.type = parse_scalar(type);
        in >> p.name;
      }
      if (p.name.empty()) throw Error(ErrorKind::kParse, "bad property line: " + line);
      header.elements.back().properties.push_back(std::move(p));
    } else {
      throw Error(ErrorKind::kParse, "unexpected PLY header keyword '" + keyword + "'");
    }
  }
  if (!have_format) throw Error(ErrorKind::kParse, "PLY header has no format line");
  header.body_offset = pos;
  return header;
}

struct VertexLayout {
  int x = -1, y = -1, z = -1, r = -1, g = -1, b = -1;
};

VertexLayout vertex_layout(const Element& e) {
  VertexLayout l;
  for (int i = 0; i < static_cast<int>(e.properties.size()); ++i) {
    const auto& p = e.properties[i];
    if (p.is_list) throw Error(ErrorKind::kUnsupportedFormat, "list properties on vertices are not supported");
    if (p.name == "x") l.x = i;
    if (p.name == "y") l.y = i;
    if (p.name == "z") l.z = i;
    if (p.name == "red") l.r = i;
    if (p.name == "green") l.g = i;
    if (p.name == "blue") l.b = i;
  }
  if (l.x < 0 || l.y < 0 || l.z < 0) throw Error(ErrorKind::kParse, "vertex element lacks x/y/z");
  const bool any_color = l.r >= 0 || l.g >= 0 || l.b >= 0;
  const bool all_color = l.r >= 0 && l.g >= 0 && l.b >= 0;
  if (any_color && !all_color) throw Error(ErrorKind::kParse, "vertex colors need red, green and blue");
  return l;
}

std::uint8_t color_channel(double value, Scalar type) {
  double v = value;
  if (!is_integer(type)) {
    v = value * 255.0;
  } else if (type == Scalar::kUint16) {
    v = value * 255.0 / 65535.0;
  }
  if (!std::isfinite(v)) throw Error(ErrorKind::kParse, "non-finite vertex color");
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

void append_vertex(PointCloud& cloud, const std::vector<double>& values, const Element& e, const VertexLayout& l,
                   std::size_t index) {
  const Eigen::Vector3d p(values[l.x], values[l.y], values[l.z]);
  if (!p.allFinite()) throw Error(ErrorKind::kParse, "vertex " + std::to_string(index) + " has a non-finite coordinate");
  cloud.points.push_back(p);
  if (cloud.colors) {
    cloud.colors->push_back({color_channel(values[l.r], e.properties[l.r].type),
                             color_channel(values[l.g], e.properties[l.g].type),
                             color_channel(values[l.b], e.properties[l.b].type)});
  }
}

class AsciiTokens {
 public:
  AsciiTokens(const std::string& bytes, std::size_t offset) : bytes_(bytes), pos_(offset) {}

  double next() {
    while (pos_ < bytes_.size() && std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (pos_ >= bytes_.size()) throw Error(ErrorKind::kParse, "PLY body ended early");
    const char* begin = bytes_.data() + pos_;
    const char* end = bytes_.data() + bytes_.size();
    const char* stop = begin;
    while (stop < end && !std::isspace(static_cast<unsigned char>(*stop))) ++stop;
    const std::string_view token(begin, static_cast<std::size_t>(stop - begin));
    pos_ += token.size();
    if (token == "nan" || token == "NaN" || token == "-nan" || token == "inf" || token == "-inf") {
      return std::numeric_limits<double>::quiet_NaN();
    }
    double value = 0.0;
    const char* first = token.data();
    if (!token.empty() && token.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      throw Error(ErrorKind::kParse, "bad PLY number '" + std::string(token) + "'");
    }
    return value;
  }

 private:
  const std::string& bytes_;
  std::size_t pos_;
};

}  // namespace

PointCloud load_point_cloud(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open point cloud " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const Header header = parse_header(bytes);

  PointCloud cloud;
  bool found = false;
  if (header.format == Format::kAscii) {
    AsciiTokens tokens(bytes, header.body_offset);
    for (const Element& e : header.elements) {
      if (e.name != "vertex") {
        for (std::size_t i = 0; i < e.count; ++i) {
          for (const auto& p : e.properties) {
            const double n = p.is_list ? tokens.next() : 1.0;
            if (p.is_list) {
              for (long k = 0; k < static_cast<long>(n); ++k) tokens.next();
            } else {
              tokens.next();
            }
          }
        }
        continue;
      }
      const VertexLayout layout = vertex_layout(e);
      if (layout.r >= 0) cloud.colors.emplace();
      cloud.points.reserve(e.count);
      std::vector<double> values(e.properties.size());
      for (std::size_t i = 0; i < e.count; ++i) {
        for (auto& v : values) v = tokens.next();
        append_vertex(cloud, values, e, layout, i);
      }
      found = true;
      break;
    }
  } else {
    std::size_t pos = header.body_offset;
    const auto* data = reinterpret_cast<const std::uint8_t*>(bytes.data());
    auto need = [&](std::size_t n) {
      if (pos + n > bytes.size()) throw Error(ErrorKind::kParse, "PLY binary body is truncated");
    };
    for (const Element& e : header.elements) {
      if (e.name != "vertex") {
        for (std::size_t i = 0; i < e.count; ++i) {
          for (const auto& p : e.properties) {
            if (p.is_list) {
              need(scalar_size(p.count_type));
              const auto n = static_cast<std::size_t>(read_binary(p.count_type, data + pos));
              pos += scalar_size(p.count_type);
              need(n * scalar_size(p.type));
              pos += n * scalar_size(p.type);
            } else {
              need(scalar_size(p.type));
              pos += scalar_size(p.type);
            }
          }
        }
        continue;
      }
      const VertexLayout layout = vertex_layout(e);
      if (layout.r >= 0) cloud.colors.emplace();
      std::size_t stride = 0;
      std::vector<std::size_t> offsets;
      for (const auto& p : e.properties) {
        offsets.push_back(stride);
        stride += scalar_size(p.type);
      }
      need(stride * e.count);
      cloud.points.reserve(e.count);
      std::vector<double> values(e.properties.size());
      for (std::size_t i = 0; i < e.count; ++i) {
        const std::uint8_t* row = data + pos + i * stride;
        for (std::size_t k = 0; k < values.size(); ++k) values[k] = read_binary(e.properties[k].type, row + offsets[k]);
        append_vertex(cloud, values, e, layout, i);
      }
      found = true;
      break;
    }
  }
  if (!found) throw Error(ErrorKind::kParse, path.string() + " has no vertex element");
  return cloud;
}

void save_point_cloud(const fs::path& path, const PointCloud& cloud, PlyEncoding encoding, PlyScalar scalar) {
  if (cloud.colors && cloud.colors->size() != cloud.points.size()) {
    throw Error(ErrorKind::kValidation, "colors and points differ in length");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  const bool f64 = scalar == PlyScalar::kFloat64;
  const char* type = f64 ? "double" : "float";
  out << "ply\n"
      << "format " << (encoding == PlyEncoding::kAscii ? "ascii" : "binary_little_endian") << " 1.0\n"
      << "element vertex " << cloud.points.size() << '\n'
      << "property " << type << " x\nproperty " << type << " y\nproperty " << type << " z\n";
  if (cloud.colors) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";

  if (encoding == PlyEncoding::kAscii) {
    char buf[128];
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      const auto& p = cloud.points[i];
      int n = f64 ? std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", p.x(), p.y(), p.z())
                  : std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g", static_cast<double>(static_cast<float>(p.x())),
                                  static_cast<double>(static_cast<float>(p.y())),
                                  static_cast<double>(static_cast<float>(p.z())));
      out.write(buf, n);
      if (cloud.colors) {
        const Rgb& c = (*cloud.colors)[i];
        n = std::snprintf(buf, sizeof buf, " %u %u %u", c[0], c[1], c[2]);
        out.write(buf, n);
      }
      out.put('\n');
    }
  } else {
    std::vector<std::uint8_t> row;
    auto put = [&row](const auto value) {
      const auto* bytes = reinterpret_cast<const std::uint8_t*>(&value);
      const std::size_t start = row.size();
      row.insert(row.end(), bytes, bytes + sizeof(value));
      if constexpr (std::endian::native == std::endian::big) std::reverse(row.begin() + start, row.end());
    };
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      row.clear();
      const auto& p = cloud.points[i];
      for (int k = 0; k < 3; ++k) {
        if (f64) {
          put(p[k]);
        } else {
          put(static_cast<float>(p[k]));
        }
      }
      if (cloud.colors) {
        const Rgb& c = (*cloud.colors)[i];
        row.insert(row.end(), c.begin(), c.end());
      }
      out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
  }
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

}  // namespace bevprompt
