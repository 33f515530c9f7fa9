#pragma once

#include "drowsy/face.hpp"

#include <Eigen/Core>

#include <array>
#include <vector>

namespace drowsy {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Pinhole intrinsics without distortion.
struct CameraModel
{
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int image_width = 0;
    int image_height = 0;

    /// Throws InvalidDimensions when the invariants do not hold.
    void validate() const;
    ImageSize image_size() const { return {image_width, image_height}; }
};

/// Uncalibrated approximation: focal length = image width, principal point at the centre.
CameraModel default_camera(int image_width, int image_height);

/// Six 3D points in millimetres, face-fixed frame: origin at the nose tip, y up.
/// Order matches LandmarkSet6::points().
struct FaceModel3D
{
    std::array<Vec3, 6> points;

    static FaceModel3D canonical();

    /// Throws ConfigError for coplanar or asymmetric models.
    void validate() const;

    Vec3 eye_midpoint() const { return 0.5 * (points[0] + points[1]); }
    Vec3 mouth_midpoint() const { return 0.5 * (points[3] + points[4]); }
};

enum class PoseStatus { ok, no_convergence, behind_camera, degenerate };

const char* to_string(PoseStatus s);

struct EulerAngles
{
    double yaw_deg = 0.0;
    double pitch_deg = 0.0;
    double roll_deg = 0.0;
};

struct HeadPose
{
    Vec3 rvec = Vec3::Zero();
    Vec3 tvec = Vec3::Zero();
    double yaw_deg = 0.0;
    double pitch_deg = 0.0;
    double roll_deg = 0.0;
    double reproj_rms_px = 0.0;
    bool converged = false;
    PoseStatus status = PoseStatus::no_convergence;
    int iterations = 0;

    /// True when the pose can be reported downstream.
    bool usable() const { return status == PoseStatus::ok; }
};

struct SolverOptions
{
    int max_iters = 100;
    double tol = 1e-12;
    double lambda0 = 1e-3;
    /// Yaw values (degrees) of the coarse initial rotations.
    std::vector<double> yaw_starts_deg{-45.0, 0.0, 45.0};
};

using Residuals = Eigen::Matrix<double, 12, 1>;
using Jacobian = Eigen::Matrix<double, 12, 6>;
using PoseParams = Eigen::Matrix<double, 6, 1>;

/// R = I + sin(t) K + (1 - cos(t)) K^2, t = |rvec|, K = skew(rvec / t).
Mat3 rodrigues(const Vec3& rvec);

/// Inverse of rodrigues; angle in [0, pi].
Vec3 rotation_to_rvec(const Mat3& R);

/// R = Rz(roll) Ry(yaw) Rx(pitch).
Mat3 euler_to_rotation(const EulerAngles& angles);

/// Inverse of euler_to_rotation with yaw in [-90, 90]. At gimbal lock roll is set to 0.
/// Throws NotARotation if R is not orthonormal with det 1 (1e-9).
EulerAngles rotation_to_euler(const Mat3& R);

/// Pinhole projection with y flipped from model-up to image-down. Throws BehindCamera.
std::array<Point2, 6> project(const FaceModel3D& model, const Vec3& rvec, const Vec3& tvec,
                              const CameraModel& cam);

/// Stacked (u - u_obs, v - v_obs) for the six correspondences.
Residuals reprojection_residuals(const std::array<Point2, 6>& observed, const FaceModel3D& model,
                                 const PoseParams& params, const CameraModel& cam);

/// Analytic derivative of the residuals w.r.t. (rvec, tvec).
Jacobian reprojection_jacobian(const FaceModel3D& model, const PoseParams& params, const CameraModel& cam);

struct RefineResult
{
    PoseParams params = PoseParams::Zero();
    double cost = 0.0; ///< sum of squared residuals
    int iterations = 0;
    bool converged = false;
    std::vector<double> accepted_costs; ///< cost after the start and after every accepted step
};

/// Levenberg-Marquardt from a single starting point.
RefineResult refine_pose(const std::array<Point2, 6>& observed, const FaceModel3D& model, const CameraModel& cam,
                         const PoseParams& start, const SolverOptions& opts = {});

/// Multi-start PnP over the six correspondences. Non-convergence, degenerate input and
/// solutions behind the camera are reported through HeadPose::status, never thrown.
HeadPose solve_pnp(const LandmarkSet6& points, const FaceModel3D& model, const CameraModel& cam,
                   const SolverOptions& opts = {});

} // namespace drowsy
