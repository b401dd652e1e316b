#include "jade/positioning.hpp"

#include <algorithm>
#include <cmath>

#include "jade/errors.hpp"
#include "jade/types.hpp"

namespace jade {

double world_bearing_deg(const TrpPose& pose, double doa_deg) {
    return pose.boresight_deg + doa_deg;
}

std::pair<double, double> doa_range_to(const TrpPose& pose, const Eigen::Vector2d& point) {
    const Eigen::Vector2d d = point - pose.position_m;
    const double bearing = rad_to_deg(std::atan2(d.y(), d.x()));
    return {std::remainder(bearing - pose.boresight_deg, 360.0), d.norm()};
}

PositionFix single_site_fix(const TrpPose& pose, double doa_deg, double range_m) {
    if (!(range_m >= 0.0)) {
        throw ConfigError("range must be non-negative");
    }
    const double b = deg_to_rad(world_bearing_deg(pose, doa_deg));
    PositionFix fix;
    fix.position_m = pose.position_m + range_m * Eigen::Vector2d(std::cos(b), std::sin(b));
    fix.method = FixMethod::SingleSite;
    return fix;
}

PositionFix triangulate(const TrpPose& pose1, double doa1_deg, const TrpPose& pose2, double doa2_deg) {
    if ((pose1.position_m - pose2.position_m).norm() == 0.0) {
        throw GeometryError("triangulation needs two distinct TRP positions");
    }
    const double b1 = deg_to_rad(world_bearing_deg(pose1, doa1_deg));
    const double b2 = deg_to_rad(world_bearing_deg(pose2, doa2_deg));
    const Eigen::Vector2d u1(std::cos(b1), std::sin(b1));
    const Eigen::Vector2d u2(std::cos(b2), std::sin(b2));
    const double cross = u1.x() * u2.y() - u1.y() * u2.x();
    if (std::abs(cross) < std::sin(deg_to_rad(0.1))) {
        throw GeometryError("bearing lines are parallel within 0.1 degrees");
    }
    // p1 + s u1 and p2 + t u2: least-squares closest points, restricted to the rays.
    const Eigen::Vector2d w = pose1.position_m - pose2.position_m;
    const double c = u1.dot(u2);
    const double den = 1.0 - c * c;
    double s = (c * u2.dot(w) - u1.dot(w)) / den;
    double t = (u2.dot(w) - c * u1.dot(w)) / den;
    s = std::max(s, 0.0);
    t = std::max(t, 0.0);
    const Eigen::Vector2d q1 = pose1.position_m + s * u1;
    const Eigen::Vector2d q2 = pose2.position_m + t * u2;
    PositionFix fix;
    fix.position_m = 0.5 * (q1 + q2);
    fix.method = FixMethod::Triangulation;
    fix.residual_m = (q1 - q2).norm();
    return fix;
}

double percentile(std::vector<double> errors, double q) {
    if (errors.empty()) return 0.0;
    for (double& e : errors) e = std::abs(e);
    std::sort(errors.begin(), errors.end());
    const double n = static_cast<double>(errors.size());
    auto rank = static_cast<std::size_t>(std::ceil(std::clamp(q, 0.0, 100.0) / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, errors.size());
    return errors[rank - 1];
}

ErrorStats error_stats_from_errors(std::span<const double> errors) {
    ErrorStats st;
    st.count = errors.size();
    if (errors.empty()) return st;
    std::vector<double> abs_err(errors.begin(), errors.end());
    double sq = 0.0;
    for (double& e : abs_err) {
        sq += e * e;
        e = std::abs(e);
    }
    st.rmse = std::sqrt(sq / static_cast<double>(errors.size()));
    st.p50 = percentile(abs_err, 50.0);
    st.p80 = percentile(abs_err, 80.0);
    st.p90 = percentile(abs_err, 90.0);
    std::sort(abs_err.begin(), abs_err.end());
    st.cdf.reserve(abs_err.size());
    for (std::size_t i = 0; i < abs_err.size(); ++i) {
        st.cdf.emplace_back(abs_err[i], static_cast<double>(i + 1) / static_cast<double>(abs_err.size()));
    }
    return st;
}

ErrorStats error_stats(std::span<const double> estimates, std::span<const double> truths) {
    if (estimates.size() != truths.size()) {
        throw ConfigError("error_stats needs equally many estimates and truths");
    }
    std::vector<double> err(estimates.size());
    for (std::size_t i = 0; i < err.size(); ++i) err[i] = estimates[i] - truths[i];
    return error_stats_from_errors(err);
}

}  // namespace jade
