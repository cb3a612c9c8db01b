// SPDX-License-Identifier: Apache-2.0
#include "logitbayes/pointcloud.hpp"

#include "logitbayes/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

namespace logitbayes::pc {
namespace {

bool finite(const Point& p)
{
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z) && std::isfinite(p.reflectance);
}

double squared_distance(const Point& a, const Point& b)
{
  const double dx = static_cast<double>(a.x) - b.x;
  const double dy = static_cast<double>(a.y) - b.y;
  const double dz = static_cast<double>(a.z) - b.z;
  return dx * dx + dy * dy + dz * dz;
}

std::uint32_t to_little_endian(std::uint32_t v)
{
  if constexpr (std::endian::native == std::endian::big)
    return ((v & 0xFFU) << 24) | ((v & 0xFF00U) << 8) | ((v >> 8) & 0xFF00U) | (v >> 24);
  return v;
}

// k nearest other points of every point, by squared distance then index
std::vector<std::vector<std::size_t>> nearest_neighbors(const PointCloud& cloud, std::size_t k)
{
  const std::size_t n = cloud.size();
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<std::pair<double, std::size_t>> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    candidates.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i)
        candidates.emplace_back(squared_distance(cloud[i], cloud[j]), j);
    const std::size_t take = std::min(k, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end());
    for (std::size_t t = 0; t < take; ++t)
      out[i].push_back(candidates[t].second);
  }
  return out;
}

} // namespace

void CalibrationSet::validate() const
{
  if (!p_rect.allFinite() || !r_rect.allFinite() || !lidar_to_cam.allFinite())
    throw ParameterError("calibration matrices must be finite");
  const Eigen::Matrix3d rotation = lidar_to_cam.topLeftCorner<3, 3>();
  const double defect = (rotation * rotation.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (defect > 1e-6)
    throw ParameterError("LiDAR-to-camera rotation is not orthonormal (defect " + std::to_string(defect) + ")");
}

Eigen::Matrix<double, 3, 4> CalibrationSet::projection() const
{
  return p_rect * r_rect * lidar_to_cam;
}

void BBox2D::validate() const
{
  if (!std::isfinite(x_min) || !std::isfinite(y_min) || !std::isfinite(x_max) || !std::isfinite(y_max))
    throw ParameterError("bounding box coordinates must be finite");
  if (!(x_min < x_max) || !(y_min < y_max))
    throw ParameterError("bounding box needs x_min < x_max and y_min < y_max");
}

std::vector<ImagePoint> project_to_image(const PointCloud& cloud, const CalibrationSet& calib)
{
  calib.validate();
  const Eigen::Matrix<double, 3, 4> m = calib.projection();
  std::vector<ImagePoint> out;
  out.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud[i];
    const Eigen::Vector4d h(p.x, p.y, p.z, 1.0);
    const Eigen::Vector3d q = m * h;
    if (!(q.z() > 0.0))
      continue;
    out.push_back(ImagePoint{q.x() / q.z(), q.y() / q.z(), q.z(), i});
  }
  return out;
}

PointCloud crop_to_bbox(const PointCloud& cloud, const CalibrationSet& calib, const BBox2D& box, const CropOptions& options)
{
  box.validate();
  PointCloud kept;
  std::copy_if(cloud.begin(), cloud.end(), std::back_inserter(kept),
               [&](const Point& p) { return !(p.x < options.near_cull); });
  PointCloud out;
  for (const ImagePoint& ip : project_to_image(kept, calib))
    if (box.contains(ip.u, ip.v))
      out.push_back(kept[ip.index]);
  return out;
}

PointCloud cluster_foreground(const PointCloud& cloud, double gap, double confidence)
{
  if (cloud.empty())
    throw ParameterError("cannot cluster an empty point cloud");
  if (!std::isfinite(gap) || gap < 0.0 || !std::isfinite(confidence))
    throw ParameterError("gap must be finite and non-negative, confidence finite");

  const std::size_t n = cloud.size();
  std::vector<double> range(n);
  for (std::size_t i = 0; i < n; ++i)
    range[i] = std::sqrt(squared_distance(cloud[i], Point{}));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return range[a] < range[b]; });

  // cluster id per sorted position
  std::vector<std::size_t> id(n, 0);
  for (std::size_t i = 1; i < n; ++i)
    id[i] = range[order[i]] - range[order[i - 1]] <= gap ? id[i - 1] : id[i - 1] + 1;
  const std::size_t clusters = id.back() + 1;

  std::vector<double> weight(clusters, 0.0);
  for (std::size_t c : id)
    weight[c] += 1.0;
  for (std::size_t k = 0; k < clusters; ++k)
    weight[k] *= confidence - static_cast<double>(k) / static_cast<double>(clusters);
  const auto chosen = static_cast<std::size_t>(std::max_element(weight.begin(), weight.end()) - weight.begin());

  PointCloud out;
  for (std::size_t i = 0; i < n; ++i)
    if (id[i] == chosen)
      out.push_back(cloud[order[i]]);
  return out;
}

PointCloud resample(const PointCloud& cloud, const ResampleOptions& options)
{
  if (cloud.empty())
    throw ParameterError("cannot resample an empty point cloud");
  if (options.target < 1)
    throw ParameterError("resample target must be at least 1");
  const std::size_t n = cloud.size();
  if (n == options.target)
    return cloud;

  std::mt19937_64 rng(options.seed);
  if (n > options.target) {
    PointCloud out;
    out.reserve(options.target);
    std::sample(cloud.begin(), cloud.end(), std::back_inserter(out), options.target, rng);
    return out;
  }

  const auto neighbors = nearest_neighbors(cloud, std::max<std::size_t>(options.neighbors, 1));
  PointCloud out = cloud;
  out.reserve(options.target);
  std::uniform_int_distribution<std::size_t> pick_point(0, n - 1);
  while (out.size() < options.target) {
    const std::size_t a = pick_point(rng);
    const auto& near = neighbors[a];
    std::size_t b = a;
    if (!near.empty()) {
      std::uniform_int_distribution<std::size_t> pick_neighbor(0, near.size() - 1);
      b = near[pick_neighbor(rng)];
    }
    const Point& p = cloud[a];
    const Point& q = cloud[b];
    auto mid = [](float u, float v) { return static_cast<float>(0.5 * (static_cast<double>(u) + v)); };
    out.push_back(Point{mid(p.x, q.x), mid(p.y, q.y), mid(p.z, q.z), mid(p.reflectance, q.reflectance)});
  }
  return out;
}

PointCloud read_kitti_cloud(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open point cloud " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 16 != 0)
    throw ParseError("point cloud " + path.string() + " size " + std::to_string(bytes.size()) +
                     " is not a multiple of 16 bytes");
  PointCloud cloud(bytes.size() / 16);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    std::array<float, 4> v{};
    for (std::size_t c = 0; c < 4; ++c) {
      std::uint32_t raw = 0;
      std::memcpy(&raw, bytes.data() + 16 * i + 4 * c, 4);
      v[c] = std::bit_cast<float>(to_little_endian(raw));
    }
    cloud[i] = Point{v[0], v[1], v[2], v[3]};
    if (!finite(cloud[i]))
      throw ParseError("point " + std::to_string(i) + " of " + path.string() + " is not finite");
  }
  return cloud;
}

void write_kitti_cloud(const std::filesystem::path& path, const PointCloud& cloud)
{
  std::string bytes(cloud.size() * 16, '\0');
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::array<float, 4> v{cloud[i].x, cloud[i].y, cloud[i].z, cloud[i].reflectance};
    for (std::size_t c = 0; c < 4; ++c) {
      const std::uint32_t raw = to_little_endian(std::bit_cast<std::uint32_t>(v[c]));
      std::memcpy(bytes.data() + 16 * i + 4 * c, &raw, 4);
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.write(bytes.data(), static_cast<std::streamsize>(bytes.size())))
    throw IoError("cannot write point cloud " + path.string());
}

CalibrationSet read_kitti_calibration(const std::filesystem::path& path, std::string_view camera)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open calibration file " + path.string());
  std::map<std::string, std::vector<double>, std::less<>> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      if (line.find_first_not_of(" \t\r") == std::string::npos)
        continue;
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 'KEY: values'");
    }
    std::istringstream values(line.substr(colon + 1));
    std::vector<double> v;
    std::string token;
    while (values >> token) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(token, &used));
        if (used != token.size())
          throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + token + "'");
      }
    }
    entries[line.substr(0, colon)] = std::move(v);
  }

  auto fetch = [&](std::string_view key, std::size_t count) -> const std::vector<double>& {
    const auto it = entries.find(key);
    if (it == entries.end())
      throw ParseError(path.string() + ": missing calibration entry " + std::string(key));
    if (it->second.size() != count)
      throw ParseError(path.string() + ": entry " + std::string(key) + " has " + std::to_string(it->second.size()) +
                       " values, expected " + std::to_string(count));
    return it->second;
  };

  CalibrationSet calib;
  const auto& p = fetch(camera, 12);
  const auto& r = fetch("R0_rect", 9);
  const auto& t = fetch("Tr_velo_to_cam", 12);
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 4; ++col) {
      calib.p_rect(row, col) = p[static_cast<std::size_t>(4 * row + col)];
      calib.lidar_to_cam(row, col) = t[static_cast<std::size_t>(4 * row + col)];
    }
    for (int col = 0; col < 3; ++col)
      calib.r_rect(row, col) = r[static_cast<std::size_t>(3 * row + col)];
  }
  calib.validate();
  return calib;
}

} // namespace logitbayes::pc
