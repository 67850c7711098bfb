#include "poseref/correlation/correlation.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace poseref {

CorrelationPyramid build_correlation(const FeatureMap& f1, const FeatureMap& f2,
                                     int num_levels) {
  if (f1.height != f2.height || f1.width != f2.width || f1.dim() != f2.dim())
    throw std::invalid_argument("build_correlation: feature map shapes differ");
  if (num_levels < 1) throw std::invalid_argument("build_correlation: num_levels < 1");

  CorrelationPyramid pyr;
  CorrelationVolume level0;
  level0.src_height = f1.height;
  level0.src_width = f1.width;
  level0.dst_height = f2.height;
  level0.dst_width = f2.width;
  level0.values = f1.data.transpose() * f2.data;
  pyr.levels.push_back(std::move(level0));
  for (int k = 1; k < num_levels; ++k)
    pyr.levels.push_back(pool_target(pyr.levels.back()));
  return pyr;
}

CorrelationVolume pool_target(const CorrelationVolume& vol) {
  CorrelationVolume out;
  out.src_height = vol.src_height;
  out.src_width = vol.src_width;
  out.dst_height = vol.dst_height / 2;
  out.dst_width = vol.dst_width / 2;
  const int rows = vol.src_height * vol.src_width;
  out.values.resize(rows, out.dst_height * out.dst_width);
  for (int r = 0; r < out.dst_height; ++r) {
    for (int c = 0; c < out.dst_width; ++c) {
      const int i00 = (2 * r) * vol.dst_width + 2 * c;
      const int i01 = i00 + 1;
      const int i10 = i00 + vol.dst_width;
      const int i11 = i10 + 1;
      out.values.col(r * out.dst_width + c) =
          0.25 * (vol.values.col(i00) + vol.values.col(i01) +
                  vol.values.col(i10) + vol.values.col(i11));
    }
  }
  return out;
}

namespace {

// Zero-padded bilinear read of one volume row at target lattice coords (x, y).
double sample_volume_row(const CorrelationVolume& vol, int src_index, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double ax = x - x0;
  const double ay = y - y0;
  double value = 0.0;
  for (int dy = 0; dy <= 1; ++dy) {
    for (int dx = 0; dx <= 1; ++dx) {
      const double w = (dx ? ax : 1.0 - ax) * (dy ? ay : 1.0 - ay);
      if (w == 0.0) continue;
      const int cx = x0 + dx;
      const int cy = y0 + dy;
      if (cx < 0 || cx >= vol.dst_width || cy < 0 || cy >= vol.dst_height) continue;
      value += w * vol.values(src_index, cy * vol.dst_width + cx);
    }
  }
  return value;
}

}  // namespace

Eigen::MatrixXd lookup(const CorrelationPyramid& pyramid,
                       const Grid<Eigen::Vector2d>& coords,
                       const Grid<uint8_t>& mask, int radius) {
  if (pyramid.levels.empty()) throw std::invalid_argument("lookup: empty pyramid");
  if (radius < 0) throw std::invalid_argument("lookup: negative radius");
  const CorrelationVolume& base = pyramid.levels.front();
  if (coords.height() != base.src_height || coords.width() != base.src_width)
    throw std::invalid_argument("lookup: coords shape does not match volume source shape");

  const int side = 2 * radius + 1;
  const int per_level = side * side;
  const int L = pyramid.num_levels() * per_level;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(coords.height() * coords.width(), L);

  for (int r = 0; r < coords.height(); ++r) {
    for (int c = 0; c < coords.width(); ++c) {
      if (!mask.at(r, c)) continue;
      const int row = r * coords.width() + c;
      const Eigen::Vector2d& xy = coords.at(r, c);
      int offset = 0;
      for (int lvl = 0; lvl < pyramid.num_levels(); ++lvl) {
        const double scale = std::pow(2.0, -lvl);
        const double cxs = xy.x() * scale;
        const double cys = xy.y() * scale;
        for (int dy = -radius; dy <= radius; ++dy)
          for (int dx = -radius; dx <= radius; ++dx)
            out(row, offset++) = sample_volume_row(pyramid.levels[lvl], row,
                                                   cxs + dx, cys + dy);
      }
    }
  }
  return out;
}

Eigen::MatrixXd lookup(const CorrelationPyramid& pyramid, const CorrespondenceField& field,
                       const Intrinsics& K, int radius) {
  Grid<Eigen::Vector2d> coords(field.height(), field.width(), Eigen::Vector2d::Zero());
  for (int r = 0; r < field.height(); ++r) {
    for (int c = 0; c < field.width(); ++c) {
      const Eigen::Vector3d& p = field.points.at(r, c);
      // Lattice coords: cell (r, c) sits at coordinate (c, r) = pixel center - 0.5.
      const Eigen::Vector2d px = K.denormalize({p.x(), p.y()});
      coords.at(r, c) = Eigen::Vector2d(px.x() - 0.5, px.y() - 0.5);
    }
  }
  return lookup(pyramid, coords, field.mask, radius);
}

void dump_volume(const CorrelationVolume& vol, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("dump_volume: cannot open " + path);
  out.write("PRCV0001", 8);
  const int32_t dims[4] = {vol.src_height, vol.src_width, vol.dst_height, vol.dst_width};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  for (int i = 0; i < vol.values.rows(); ++i) {
    for (int j = 0; j < vol.values.cols(); ++j) {
      const float v = static_cast<float>(vol.values(i, j));
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  }
}

CorrelationVolume read_volume_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_volume_dump: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "PRCV0001", 8) != 0)
    throw std::runtime_error("read_volume_dump: bad magic in " + path);
  int32_t dims[4];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  CorrelationVolume vol;
  vol.src_height = dims[0];
  vol.src_width = dims[1];
  vol.dst_height = dims[2];
  vol.dst_width = dims[3];
  vol.values.resize(dims[0] * dims[1], dims[2] * dims[3]);
  for (int i = 0; i < vol.values.rows(); ++i) {
    for (int j = 0; j < vol.values.cols(); ++j) {
      float v;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      vol.values(i, j) = v;
    }
  }
  if (!in) throw std::runtime_error("read_volume_dump: truncated file " + path);
  return vol;
}

}  // namespace poseref
