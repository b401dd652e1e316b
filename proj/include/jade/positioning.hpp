#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace jade {

/// Array location and broadside heading; headings are counter-clockwise from +x.
///
///                 +y
///     doa > 0      ^   broadside (boresight 90 deg)
///           \      |
///            \     |
///             \    |
///   -x <-------o--------- +x
///   element index grows towards -x
///
/// world bearing = boresight + doa. The element axis points 90 degrees
/// counter-clockwise of boresight, so a positive DOA turns counter-clockwise.
struct TrpPose {
    Eigen::Vector2d position_m = Eigen::Vector2d::Zero();
    double boresight_deg = 90.0;
};

enum class FixMethod { SingleSite, Triangulation };

struct PositionFix {
    Eigen::Vector2d position_m = Eigen::Vector2d::Zero();
    FixMethod method = FixMethod::SingleSite;
    double residual_m = 0.0;
};

double world_bearing_deg(const TrpPose& pose, double doa_deg);

/// DOA and range at which `pose` sees `point`.
std::pair<double, double> doa_range_to(const TrpPose& pose, const Eigen::Vector2d& point);

PositionFix single_site_fix(const TrpPose& pose, double doa_deg, double range_m);

/// Closest points on the two bearing rays; the fix is their midpoint and the
/// residual their distance. Throws GeometryError for co-located poses or rays
/// within 0.1 degrees of parallel.
PositionFix triangulate(const TrpPose& pose1, double doa1_deg, const TrpPose& pose2, double doa2_deg);

inline double tdoa(double toa1_s, double toa2_s) { return toa1_s - toa2_s; }

struct ErrorStats {
    std::size_t count = 0;
    double rmse = 0.0;
    double p50 = 0.0;
    double p80 = 0.0;
    double p90 = 0.0;
    /// (error, cumulative fraction) in ascending error order.
    std::vector<std::pair<double, double>> cdf;
};

/// Nearest-rank percentile of absolute errors, q in [0, 100].
double percentile(std::vector<double> errors, double q);

ErrorStats error_stats_from_errors(std::span<const double> errors);

/// Errors are estimate - truth; RMSE over all pairs.
ErrorStats error_stats(std::span<const double> estimates, std::span<const double> truths);

}  // namespace jade
