#include "cracklab/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace cracklab {

namespace {

enum class PlyType { kChar, kUChar, kShort, kUShort, kInt, kUInt, kFloat, kDouble };

std::size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::kChar:
    case PlyType::kUChar: return 1;
    case PlyType::kShort:
    case PlyType::kUShort: return 2;
    case PlyType::kInt:
    case PlyType::kUInt:
    case PlyType::kFloat: return 4;
    case PlyType::kDouble: return 8;
  }
  return 0;
}

PlyType parse_ply_type(const std::string& s, std::size_t line) {
  if (s == "char" || s == "int8") return PlyType::kChar;
  if (s == "uchar" || s == "uint8") return PlyType::kUChar;
  if (s == "short" || s == "int16") return PlyType::kShort;
  if (s == "ushort" || s == "uint16") return PlyType::kUShort;
  if (s == "int" || s == "int32") return PlyType::kInt;
  if (s == "uint" || s == "uint32") return PlyType::kUInt;
  if (s == "float" || s == "float32") return PlyType::kFloat;
  if (s == "double" || s == "float64") return PlyType::kDouble;
  throw ParseError("unknown PLY property type '" + s + "'", line);
}

double decode_ply_value(const unsigned char* p, PlyType t) {
  switch (t) {
    case PlyType::kChar: return static_cast<double>(*reinterpret_cast<const signed char*>(p));
    case PlyType::kUChar: return static_cast<double>(*p);
    case PlyType::kShort: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
    case PlyType::kUShort: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
    case PlyType::kInt: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
    case PlyType::kUInt: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
    case PlyType::kFloat: { float v; std::memcpy(&v, p, 4); return v; }
    case PlyType::kDouble: { double v; std::memcpy(&v, p, 8); return v; }
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat;
};

struct VertexRow {
  double x = 0, y = 0, z = 0;
  double intensity = 0;
  double r = 0, g = 0, b = 0;
  double label = 0;
};

void assign_field(VertexRow& row, const std::string& name, double v) {
  if (name == "x") row.x = v;
  else if (name == "y") row.y = v;
  else if (name == "z") row.z = v;
  else if (name == "intensity") row.intensity = v;
  else if (name == "red" || name == "r") row.r = v;
  else if (name == "green" || name == "g") row.g = v;
  else if (name == "blue" || name == "b") row.b = v;
  else if (name == "label") row.label = v;
}

PointCloud load_ply(std::ifstream& in, const std::string& path,
                    std::size_t* dropped) {
  std::string line;
  std::size_t line_no = 1;  // "ply" already consumed
  bool binary = false;
  bool have_format = false;
  std::size_t vertex_count = 0;
  std::vector<PlyProperty> props;
  bool in_vertex_element = false;
  bool seen_vertex_element = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "comment" || tok.empty()) continue;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") binary = false;
      else if (fmt == "binary_little_endian") binary = true;
      else throw UnsupportedFormat("PLY format '" + fmt + "' in " + path);
      have_format = true;
    } else if (tok == "element") {
      std::string name;
      std::size_t count;
      if (!(ls >> name >> count)) throw ParseError("bad element line", line_no);
      if (name == "vertex") {
        vertex_count = count;
        in_vertex_element = true;
        seen_vertex_element = true;
      } else {
        in_vertex_element = false;
        if (count > 0 && seen_vertex_element == false) {
          throw UnsupportedFormat("PLY with non-vertex leading element: " + path);
        }
      }
    } else if (tok == "property") {
      if (!in_vertex_element) continue;  // trailing elements are ignored
      std::string type_s;
      ls >> type_s;
      if (type_s == "list") {
        throw UnsupportedFormat("list property on vertex element: " + path);
      }
      PlyProperty p;
      p.type = parse_ply_type(type_s, line_no);
      if (!(ls >> p.name)) throw ParseError("bad property line", line_no);
      props.push_back(p);
    } else if (tok == "end_header") {
      break;
    } else {
      throw ParseError("unexpected header token '" + tok + "'", line_no);
    }
  }
  if (!have_format || !seen_vertex_element) {
    throw ParseError("PLY header missing format/vertex element", line_no);
  }
  bool has_x = false, has_y = false, has_z = false;
  bool has_intensity = false, has_rgb = false, has_label = false;
  int rgb_seen = 0;
  for (const auto& p : props) {
    if (p.name == "x") has_x = true;
    else if (p.name == "y") has_y = true;
    else if (p.name == "z") has_z = true;
    else if (p.name == "intensity") has_intensity = true;
    else if (p.name == "red" || p.name == "green" || p.name == "blue" ||
             p.name == "r" || p.name == "g" || p.name == "b") ++rgb_seen;
    else if (p.name == "label") has_label = true;
  }
  has_rgb = rgb_seen == 3;
  if (!has_x || !has_y || !has_z) {
    throw ParseError("PLY vertex element lacks x/y/z", line_no);
  }

  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  std::size_t n_dropped = 0;
  auto push_row = [&](const VertexRow& row) {
    if (!std::isfinite(row.x) || !std::isfinite(row.y) || !std::isfinite(row.z)) {
      ++n_dropped;
      return;
    }
    cloud.points.emplace_back(row.x, row.y, row.z);
    if (has_intensity) cloud.intensity.push_back(static_cast<float>(row.intensity));
    if (has_rgb) {
      cloud.color.push_back({static_cast<std::uint8_t>(row.r),
                             static_cast<std::uint8_t>(row.g),
                             static_cast<std::uint8_t>(row.b)});
    }
    if (has_label) cloud.label.push_back(static_cast<std::uint8_t>(row.label));
  };

  if (binary) {
    std::size_t row_size = 0;
    for (const auto& p : props) row_size += ply_type_size(p.type);
    std::vector<unsigned char> buf(row_size);
    for (std::size_t i = 0; i < vertex_count; ++i) {
      in.read(reinterpret_cast<char*>(buf.data()),
              static_cast<std::streamsize>(row_size));
      if (!in) {
        throw ParseError("truncated binary PLY payload in " + path,
                         static_cast<std::size_t>(in.gcount()) + i * row_size);
      }
      VertexRow row;
      std::size_t off = 0;
      for (const auto& p : props) {
        assign_field(row, p.name, decode_ply_value(buf.data() + off, p.type));
        off += ply_type_size(p.type);
      }
      push_row(row);
    }
  } else {
    for (std::size_t i = 0; i < vertex_count; ++i) {
      if (!std::getline(in, line)) {
        throw ParseError("truncated ASCII PLY payload", line_no + i);
      }
      std::istringstream ls(line);
      VertexRow row;
      for (const auto& p : props) {
        double v;
        if (!(ls >> v)) {
          // NaN/Inf tokens are legal vertex garbage: retry as literal text.
          ls.clear();
          std::string word;
          if (!(ls >> word)) throw ParseError("short vertex line", line_no + 1 + i);
          std::transform(word.begin(), word.end(), word.begin(), ::tolower);
          if (word == "nan" || word == "-nan") v = std::nan("");
          else if (word == "inf" || word == "+inf") v = HUGE_VAL;
          else if (word == "-inf") v = -HUGE_VAL;
          else throw ParseError("bad vertex token '" + word + "'", line_no + 1 + i);
        }
        assign_field(row, p.name, v);
      }
      push_row(row);
    }
  }
  if (dropped) *dropped = n_dropped;
  return cloud;
}

PointCloud load_pcd(std::ifstream& in, const std::string& path,
                    std::size_t* dropped) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> fields;
  std::size_t count = 0;
  bool ascii = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "#" || tok.empty() || tok[0] == '#') continue;
    if (tok == "FIELDS") {
      std::string f;
      while (ls >> f) fields.push_back(f);
    } else if (tok == "POINTS") {
      ls >> count;
    } else if (tok == "DATA") {
      std::string mode;
      ls >> mode;
      if (mode != "ascii") {
        throw UnsupportedFormat("PCD DATA " + mode + " unsupported: " + path);
      }
      ascii = true;
      break;
    }
    // VERSION/SIZE/TYPE/COUNT/WIDTH/HEIGHT/VIEWPOINT carry no extra info
    // for ascii payloads.
  }
  if (!ascii) throw ParseError("PCD header missing DATA ascii", line_no);
  if (fields.size() < 3 || fields[0] != "x" || fields[1] != "y" || fields[2] != "z") {
    throw ParseError("PCD FIELDS must start with x y z", line_no);
  }
  int intensity_idx = -1;
  for (std::size_t i = 3; i < fields.size(); ++i) {
    if (fields[i] == "intensity") intensity_idx = static_cast<int>(i);
  }

  PointCloud cloud;
  std::size_t n_dropped = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw ParseError("truncated PCD payload", line_no + i);
    std::istringstream ls(line);
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (vals.size() < fields.size()) throw ParseError("short PCD row", line_no + 1 + i);
    if (!std::isfinite(vals[0]) || !std::isfinite(vals[1]) || !std::isfinite(vals[2])) {
      ++n_dropped;
      continue;
    }
    cloud.points.emplace_back(vals[0], vals[1], vals[2]);
    if (intensity_idx >= 0) {
      cloud.intensity.push_back(static_cast<float>(vals[intensity_idx]));
    }
  }
  if (dropped) *dropped = n_dropped;
  return cloud;
}

}  // namespace

PointCloud load_point_cloud(const std::string& path, std::size_t* dropped) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string magic;
  std::getline(in, magic);
  if (!magic.empty() && magic.back() == '\r') magic.pop_back();
  if (magic == "ply") return load_ply(in, path, dropped);
  // PCD files start with a comment or VERSION line.
  if (magic.rfind("#", 0) == 0 || magic.rfind("VERSION", 0) == 0) {
    in.seekg(0);
    return load_pcd(in, path, dropped);
  }
  throw UnsupportedFormat("unrecognized point cloud file: " + path);
}

void save_point_cloud(const PointCloud& cloud, const std::string& path,
                      bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "ply\n"
      << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n")
      << "element vertex " << cloud.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.has_intensity()) out << "property float intensity\n";
  if (cloud.has_color()) {
    out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  }
  if (cloud.has_label()) out << "property uchar label\n";
  out << "end_header\n";

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (binary) {
      double xyz[3] = {cloud.points[i].x(), cloud.points[i].y(), cloud.points[i].z()};
      out.write(reinterpret_cast<const char*>(xyz), sizeof xyz);
      if (cloud.has_intensity()) {
        float v = cloud.intensity[i];
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
      if (cloud.has_color()) {
        out.write(reinterpret_cast<const char*>(cloud.color[i].data()), 3);
      }
      if (cloud.has_label()) {
        out.write(reinterpret_cast<const char*>(&cloud.label[i]), 1);
      }
    } else {
      std::ostringstream row;
      row.precision(17);
      row << cloud.points[i].x() << " " << cloud.points[i].y() << " "
          << cloud.points[i].z();
      if (cloud.has_intensity()) row << " " << cloud.intensity[i];
      if (cloud.has_color()) {
        row << " " << int(cloud.color[i][0]) << " " << int(cloud.color[i][1])
            << " " << int(cloud.color[i][2]);
      }
      if (cloud.has_label()) row << " " << int(cloud.label[i]);
      out << row.str() << "\n";
    }
  }
  if (!out) throw IoError("write failure on " + path);
}

Trajectory load_trajectory(const std::string& path,
                           std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  Trajectory traj;
  std::string line;
  std::size_t line_no = 0;
  double prev_t = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double t, tx, ty, tz, qw, qx, qy, qz;
    if (!(ls >> t >> tx >> ty >> tz >> qw >> qx >> qy >> qz)) {
      throw ParseError("bad trajectory line in " + path, line_no);
    }
    if (t <= prev_t) {
      throw NonMonotonicTimestamps("timestamp " + std::to_string(t) +
                                   " at line " + std::to_string(line_no) +
                                   " not increasing in " + path);
    }
    prev_t = t;
    Quat q(qw, qx, qy, qz);
    const double norm = q.norm();
    if (std::abs(norm - 1.0) > 1e-6) {
      if (warnings) {
        warnings->push_back("line " + std::to_string(line_no) +
                            ": quaternion norm " + std::to_string(norm) +
                            " renormalized");
      }
    }
    traj.entries.emplace_back(q, Vec3(tx, ty, tz), t);
  }
  return traj;
}

void save_trajectory(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(17);
  for (const auto& p : traj.entries) {
    out << (p.timestamp ? *p.timestamp : 0.0) << " " << p.translation.x()
        << " " << p.translation.y() << " " << p.translation.z() << " "
        << p.rotation.w() << " " << p.rotation.x() << " " << p.rotation.y()
        << " " << p.rotation.z() << "\n";
  }
}

namespace {

int read_pnm_token(std::ifstream& in, const std::string& path) {
  // Skips whitespace and '#' comments between header tokens.
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {}
    } else if (!std::isspace(c)) {
      break;
    }
  }
  if (c == EOF) throw ParseError("truncated PNM header in " + path);
  int value = 0;
  bool any = false;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw ParseError("bad PNM header token in " + path);
  return value;
}

RasterImage load_pnm(std::ifstream& in, bool rgb, const std::string& path) {
  const int w = read_pnm_token(in, path);
  const int h = read_pnm_token(in, path);
  const int maxval = read_pnm_token(in, path);
  if (maxval != 255) throw UnsupportedFormat("PNM maxval != 255: " + path);
  RasterImage img = rgb ? RasterImage::rgb(w, h) : RasterImage::gray(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) {
    throw ParseError("truncated PNM payload in " + path,
                     static_cast<std::size_t>(in.gcount()));
  }
  return img;
}

RasterImage load_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw ParseError("libpng failed to decode " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  png_set_strip_16(png);
  png_set_packing(png);
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
  }
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY &&
      png_get_bit_depth(png, info) < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int ch = static_cast<int>(png_get_channels(png, info));
  if (ch != 1 && ch != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw UnsupportedFormat("PNG with " + std::to_string(ch) +
                            " channels: " + path);
  }
  RasterImage img = ch == 3 ? RasterImage::rgb(w, h) : RasterImage::gray(w, h);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) {
    rows[y] = img.pixels.data() + static_cast<std::size_t>(y) * w * ch;
  }
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

}  // namespace

RasterImage load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  unsigned char sig[2] = {0, 0};
  in.read(reinterpret_cast<char*>(sig), 2);
  if (sig[0] == 'P' && sig[1] == '5') return load_pnm(in, false, path);
  if (sig[0] == 'P' && sig[1] == '6') return load_pnm(in, true, path);
  if (sig[0] == 0x89 && sig[1] == 'P') {
    in.close();
    return load_png(path);
  }
  throw UnsupportedFormat("unrecognized image file: " + path);
}

void save_image(const RasterImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << (img.channels == 3 ? "P6" : "P5") << "\n"
      << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw IoError("write failure on " + path);
}

BinaryMask load_mask(const std::string& path, int expect_w, int expect_h) {
  RasterImage img = load_image(path);
  if (expect_w > 0 && (img.width != expect_w || img.height != expect_h)) {
    throw DimensionMismatch("mask " + path + " is " +
                            std::to_string(img.width) + "x" +
                            std::to_string(img.height) + ", expected " +
                            std::to_string(expect_w) + "x" +
                            std::to_string(expect_h));
  }
  BinaryMask mask(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      int v;
      if (img.channels == 3) {
        v = (img.at(x, y, 0) + img.at(x, y, 1) + img.at(x, y, 2) + 1) / 3;
      } else {
        v = img.at(x, y);
      }
      mask.at(x, y) = v >= 128 ? 1 : 0;
    }
  }
  return mask;
}

void save_mask(const BinaryMask& mask, const std::string& path) {
  RasterImage img = RasterImage::gray(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    img.pixels[i] = mask.bits[i] ? 255 : 0;
  }
  save_image(img, path);
}

void write_measurement_report(const std::vector<CrackMeasurement>& ms,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "crack_id,u,v,frame_id,left_x,left_y,left_z,"
         "right_x,right_y,right_z,width_mm\n";
  out.precision(10);
  for (const auto& m : ms) {
    out << m.crack_id << "," << m.seed.u << "," << m.seed.v << ","
        << m.frame_id << "," << m.edge_left_3d.x() << ","
        << m.edge_left_3d.y() << "," << m.edge_left_3d.z() << ","
        << m.edge_right_3d.x() << "," << m.edge_right_3d.y() << ","
        << m.edge_right_3d.z() << "," << m.width * 1000.0 << "\n";
  }
  if (!out) throw IoError("write failure on " + path);
}

}  // namespace cracklab
