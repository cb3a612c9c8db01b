// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace logitbayes::pc {

/// LiDAR return in sensor coordinates (meters, x forward) with reflectance in [0, 1].
struct Point
{
  float x = 0.0F;
  float y = 0.0F;
  float z = 0.0F;
  float reflectance = 0.0F;

  bool operator==(const Point&) const = default;
};

using PointCloud = std::vector<Point>;

/// Camera projection P_rect, rectifying rotation R_rect (homogeneous 4x4) and
/// the rigid LiDAR-to-camera transform.
struct CalibrationSet
{
  Eigen::Matrix<double, 3, 4> p_rect = Eigen::Matrix<double, 3, 4>::Identity();
  Eigen::Matrix4d r_rect = Eigen::Matrix4d::Identity();
  Eigen::Matrix4d lidar_to_cam = Eigen::Matrix4d::Identity();

  /// Throws ParameterError on non-finite entries or a non-orthonormal rotation block.
  void validate() const;
  /// P_rect * R_rect * T_lidar_cam.
  Eigen::Matrix<double, 3, 4> projection() const;
};

/// Image-plane box in pixels.
struct BBox2D
{
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  void validate() const;
  /// Inclusive membership with the one-pixel margin on the max edges.
  bool contains(double u, double v) const noexcept
  {
    return u >= x_min && u <= x_max + 1.0 && v >= y_min && v <= y_max + 1.0;
  }
};

struct ImagePoint
{
  double u;
  double v;
  double depth;      ///< third homogeneous component before the divide
  std::size_t index; ///< position of the source point in the input cloud
};

/// Projects every point in front of the camera; points with depth <= 0 are dropped.
std::vector<ImagePoint> project_to_image(const PointCloud& cloud, const CalibrationSet& calib);

struct CropOptions
{
  double near_cull = 5.0; ///< points with forward coordinate below this are removed first
};

/// Points whose projection falls inside `box`, in input order.
PointCloud crop_to_bbox(const PointCloud& cloud,
                        const CalibrationSet& calib,
                        const BBox2D& box,
                        const CropOptions& options = {});

/// Distance-gap clustering around the sensor origin.
///
/// Points are ordered by distance to the origin and split wherever two
/// consecutive distances differ by more than `gap`. Cluster k (1-based, in
/// order of increasing distance) has its size weighted by
/// confidence - (k - 1) / cluster_count and the heaviest cluster is returned,
/// in order of increasing distance. Ties go to the nearer cluster.
PointCloud cluster_foreground(const PointCloud& cloud, double gap = 0.25, double confidence = 1.0);

struct ResampleOptions
{
  std::size_t target = 512;
  std::size_t neighbors = 4;
  std::uint64_t seed = 0;
};

/// Brings a cloud to exactly `target` points.
///
/// Larger clouds are reduced to a uniform random subset (input order kept).
/// Smaller clouds keep every original point and grow by midpoints between a
/// random original point and one of its `neighbors` nearest original points;
/// reflectance is averaged the same way.
PointCloud resample(const PointCloud& cloud, const ResampleOptions& options = {});

/// KITTI velodyne binary: little-endian float32 quadruples (x, y, z, reflectance).
PointCloud read_kitti_cloud(const std::filesystem::path& path);
void write_kitti_cloud(const std::filesystem::path& path, const PointCloud& cloud);

/// KITTI object calibration text ("KEY: v1 v2 ..."). Uses `camera` (e.g. P2),
/// R0_rect and Tr_velo_to_cam.
CalibrationSet read_kitti_calibration(const std::filesystem::path& path, std::string_view camera = "P2");

} // namespace logitbayes::pc
