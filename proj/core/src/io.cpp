// Copyright 2026 The rnx Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include "rnx/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "rnx/error.hpp"

namespace rnx {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  } else {
    return v;
  }
}

template <typename T>
void put(std::string& out, T v) {
  const auto le = byteswap_if_big(v);
  char buf[sizeof(T)];
  std::memcpy(buf, &le, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return byteswap_if_big(v);
  }

  std::string get_string(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(fmt::format("weight file truncated while reading {} at byte {}", what, pos_));
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

double parse_number(const std::string& token, std::size_t line, const char* field) {
  const char* begin = token.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE) {
    throw FormatError(fmt::format("line {}: field '{}' is not a number: '{}'", line, field, token));
  }
  return v;
}

struct ParsedObject {
  std::string type;
  Box3D box;
  double score = 1.0;
};

std::vector<ParsedObject> parse_objects(const std::string& text) {
  static const char* const kFields[] = {"truncated", "occluded", "alpha", "x1", "y1", "x2", "y2",
                                        "h",         "w",        "l",     "x",  "y",  "z",  "yaw",
                                        "score"};
  std::vector<ParsedObject> out;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::vector<std::string> t;
    for (std::string tok; tokens >> tok;) t.push_back(tok);
    if (t.empty()) continue;
    if (t.size() != 15 && t.size() != 16) {
      throw FormatError(fmt::format("line {}: expected 15 or 16 fields, got {}", line_no, t.size()));
    }
    double v[15] = {};
    for (std::size_t i = 1; i < t.size(); ++i) v[i - 1] = parse_number(t[i], line_no, kFields[i - 1]);
    ParsedObject obj;
    obj.type = t[0];
    try {
      obj.box = Box3D(v[10], v[11], v[12], v[9], v[8], v[7], v[13]);
    } catch (const Error& e) {
      throw FormatError(fmt::format("line {}: {}", line_no, e.what()));
    }
    if (t.size() == 16) obj.score = v[14];
    out.push_back(std::move(obj));
  }
  return out;
}

std::ptrdiff_t class_index(const std::vector<std::string>& names, const std::string& type) {
  const auto it = std::find(names.begin(), names.end(), type);
  return it == names.end() ? -1 : it - names.begin();
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

RadarPointCloud load_point_cloud(const std::filesystem::path& path, const PointSchema& schema) {
  schema.validate();
  const std::string bytes = read_file(path);
  const std::size_t row_bytes = 4 * schema.column_count();
  if (bytes.size() % row_bytes != 0) {
    throw FormatError(fmt::format("'{}': {} bytes is not a multiple of {} ({} float32 columns)",
                                  path.string(), bytes.size(), row_bytes, schema.column_count()));
  }
  RadarPointCloud cloud{schema, std::vector<float>(bytes.size() / 4)};
  for (std::size_t i = 0; i < cloud.values.size(); ++i) {
    std::uint32_t raw;
    std::memcpy(&raw, bytes.data() + 4 * i, 4);
    cloud.values[i] = std::bit_cast<float>(byteswap_if_big(raw));
  }
  return cloud;
}

void save_point_cloud(const std::filesystem::path& path, const RadarPointCloud& cloud) {
  std::string bytes;
  bytes.reserve(cloud.values.size() * 4);
  for (float v : cloud.values) put(bytes, std::bit_cast<std::uint32_t>(v));
  write_file(path, bytes);
}

GroundTruthSet parse_labels(const std::string& text, const std::vector<std::string>& class_names) {
  GroundTruthSet out;
  for (const ParsedObject& obj : parse_objects(text)) {
    const auto idx = class_index(class_names, obj.type);
    if (idx >= 0) out.boxes.push_back({obj.box, static_cast<std::size_t>(idx)});
  }
  return out;
}

GroundTruthSet load_labels(const std::filesystem::path& path,
                           const std::vector<std::string>& class_names) {
  try {
    return parse_labels(read_file(path), class_names);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<Detection> parse_detections(const std::string& text,
                                        const std::vector<std::string>& class_names) {
  std::vector<Detection> out;
  for (const ParsedObject& obj : parse_objects(text)) {
    const auto idx = class_index(class_names, obj.type);
    if (idx >= 0) out.push_back({obj.box, static_cast<std::size_t>(idx), obj.score});
  }
  return out;
}

std::vector<Detection> load_detections(const std::filesystem::path& path,
                                       const std::vector<std::string>& class_names) {
  try {
    return parse_detections(read_file(path), class_names);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string format_detections(const std::vector<Detection>& dets,
                              const std::vector<std::string>& class_names) {
  std::string out;
  for (const Detection& d : dets) {
    if (d.class_id >= class_names.size()) {
      throw Error(fmt::format("detection class id {} has no name", d.class_id));
    }
    const Box3D& b = d.box;
    out += fmt::format("{} 0 0 0 0 0 0 0 {:.4f} {:.4f} {:.4f} {:.4f} {:.4f} {:.4f} {:.4f} {:.4f}\n",
                       class_names[d.class_id], b.h, b.w, b.l, b.x, b.y, b.z, b.yaw, d.score);
  }
  return out;
}

void save_detections(const std::filesystem::path& path, const std::vector<Detection>& dets,
                     const std::vector<std::string>& class_names) {
  write_file(path, format_detections(dets, class_names));
}

std::string serialize_weights(const WeightStore& store) {
  std::string out = "RNXW";
  put<std::uint32_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, t] : store) {
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    if (t.rank() > 255) throw FormatError("tensor '" + name + "' has too many dimensions");
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (float v : t.data()) put(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

WeightStore deserialize_weights(const std::string& bytes) {
  Reader r(bytes);
  if (r.get_string(4, "magic") != "RNXW") throw FormatError("weight file has bad magic (expected RNXW)");
  const auto version = r.get<std::uint32_t>("version");
  if (version != 1) throw FormatError(fmt::format("unsupported weight file version {}", version));
  const auto count = r.get<std::uint32_t>("entry count");
  WeightStore store;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto name_len = r.get<std::uint16_t>("name length");
    std::string name = r.get_string(name_len, "entry name");
    const auto ndim = r.get<std::uint8_t>("rank");
    Shape shape(ndim);
    for (auto& d : shape) d = r.get<std::uint32_t>("dimension");
    const std::size_t n = shape_numel(shape);
    if (n > (bytes.size() - r.position()) / 4) {
      throw FormatError("weight file truncated in data of '" + name + "'");
    }
    std::vector<float> data(n);
    for (float& v : data) v = std::bit_cast<float>(r.get<std::uint32_t>("tensor data"));
    store.insert(name, Tensor(std::move(shape), std::move(data)));
  }
  if (!r.done()) throw FormatError("weight file has trailing bytes");
  return store;
}

void save_weights(const std::filesystem::path& path, const WeightStore& store) {
  write_file(path, serialize_weights(store));
}

WeightStore load_weights(const std::filesystem::path& path) {
  try {
    return deserialize_weights(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace rnx
