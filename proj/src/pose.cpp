#include "drowsy/pose.hpp"

#include "drowsy/error.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

namespace drowsy {

namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;
constexpr double kRadPerDeg = std::numbers::pi / 180.0;

Mat3 skew(const Vec3& v)
{
    Mat3 k;
    k << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
        -v.y(), v.x(), 0.0;
    return k;
}

// Projection that reports points behind the camera instead of throwing.
std::optional<Residuals> residuals_or_none(const std::array<Point2, 6>& observed, const FaceModel3D& model,
                                           const PoseParams& params, const CameraModel& cam)
{
    const Mat3 R = rodrigues(params.head<3>());
    const Vec3 t = params.tail<3>();
    Residuals r;
    for (int i = 0; i < 6; ++i)
    {
        const Vec3 X = R * model.points[i] + t;
        if (!(X.z() > 0.0))
            return std::nullopt;
        r(2 * i) = cam.fx * X.x() / X.z() + cam.cx - observed[i].x;
        r(2 * i + 1) = -cam.fy * X.y() / X.z() + cam.cy - observed[i].y;
    }
    return r;
}

// Largest distance of the points from their total-least-squares line.
double collinearity_residual(const std::array<Point2, 6>& pts)
{
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& p : pts)
        mean += Eigen::Vector2d(p.x, p.y);
    mean /= 6.0;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& p : pts)
    {
        const Eigen::Vector2d d = Eigen::Vector2d(p.x, p.y) - mean;
        cov += d * d.transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    const Eigen::Vector2d normal = es.eigenvectors().col(0);
    double worst = 0.0;
    for (const auto& p : pts)
        worst = std::max(worst, std::abs((Eigen::Vector2d(p.x, p.y) - mean).dot(normal)));
    return worst;
}

} // namespace

void CameraModel::validate() const
{
    if (image_width <= 0 || image_height <= 0)
        throw InvalidDimensions("image dimensions must be positive");
    if (!(fx > 0.0) || !(fy > 0.0))
        throw InvalidDimensions("focal lengths must be positive");
    if (!(cx >= 0.0 && cx <= image_width) || !(cy >= 0.0 && cy <= image_height))
        throw InvalidDimensions("principal point outside the image");
}

CameraModel default_camera(int image_width, int image_height)
{
    if (image_width <= 0 || image_height <= 0)
        throw InvalidDimensions("image dimensions must be positive, got " + std::to_string(image_width) + "x" +
                                std::to_string(image_height));
    CameraModel cam;
    cam.fx = cam.fy = static_cast<double>(image_width);
    cam.cx = image_width / 2.0;
    cam.cy = image_height / 2.0;
    cam.image_width = image_width;
    cam.image_height = image_height;
    return cam;
}

FaceModel3D FaceModel3D::canonical()
{
    // Eye centres rather than corners. The chin lies on the line through the eye and mouth
    // midpoints, so the 2D chin extrapolation is exact under weak perspective.
    return {{Vec3(-135.0, 170.0, -135.0), Vec3(135.0, 170.0, -135.0), Vec3(0.0, 0.0, 0.0),
             Vec3(-150.0, -150.0, -125.0), Vec3(150.0, -150.0, -125.0), Vec3(0.0, -330.0, -119.375)}};
}

void FaceModel3D::validate() const
{
    for (const auto& p : points)
        if (!p.allFinite())
            throw ConfigError("face model contains non-finite coordinates");

    Eigen::Matrix<double, 6, 3> centered;
    Vec3 mean = Vec3::Zero();
    for (const auto& p : points)
        mean += p;
    mean /= 6.0;
    for (int i = 0; i < 6; ++i)
        centered.row(i) = (points[i] - mean).transpose();
    const Eigen::JacobiSVD<Eigen::Matrix<double, 6, 3>> svd(centered);
    const auto sv = svd.singularValues();
    if (sv(2) <= 1e-9 * std::max(1.0, sv(0)))
        throw ConfigError("face model points are coplanar");

    auto mirrored = [](const Vec3& a, const Vec3& b) {
        return std::abs(a.x() + b.x()) <= 1e-9 && std::abs(a.y() - b.y()) <= 1e-9 && std::abs(a.z() - b.z()) <= 1e-9;
    };
    if (!mirrored(points[0], points[1]) || !mirrored(points[3], points[4]))
        throw ConfigError("face model must be left/right symmetric about x = 0");
}

const char* to_string(PoseStatus s)
{
    switch (s)
    {
    case PoseStatus::ok: return "ok";
    case PoseStatus::no_convergence: return "no_convergence";
    case PoseStatus::behind_camera: return "behind_camera";
    case PoseStatus::degenerate: return "degenerate";
    }
    return "unknown";
}

Mat3 rodrigues(const Vec3& rvec)
{
    const double theta = rvec.norm();
    if (theta < 1e-12)
        return Mat3::Identity();
    const Mat3 K = skew(rvec / theta);
    return Mat3::Identity() + std::sin(theta) * K + (1.0 - std::cos(theta)) * K * K;
}

Vec3 rotation_to_rvec(const Mat3& R)
{
    const Eigen::AngleAxisd aa(R);
    return aa.angle() * aa.axis();
}

Mat3 euler_to_rotation(const EulerAngles& a)
{
    using Eigen::AngleAxisd;
    return (AngleAxisd(a.roll_deg * kRadPerDeg, Vec3::UnitZ()) * AngleAxisd(a.yaw_deg * kRadPerDeg, Vec3::UnitY()) *
            AngleAxisd(a.pitch_deg * kRadPerDeg, Vec3::UnitX()))
        .toRotationMatrix();
}

EulerAngles rotation_to_euler(const Mat3& R)
{
    if (!R.allFinite())
        throw NotARotation("matrix has non-finite entries");
    const double ortho = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (ortho > 1e-9 || std::abs(R.determinant() - 1.0) > 1e-9)
        throw NotARotation("matrix is not orthonormal with determinant 1");

    // R = Rz(roll) Ry(yaw) Rx(pitch): first column is (cz cy, sz cy, -sy).
    const double cos_yaw = std::hypot(R(0, 0), R(1, 0));
    const double yaw = std::atan2(-R(2, 0), cos_yaw);
    double pitch = 0.0;
    double roll = 0.0;
    if (cos_yaw > 1e-6)
    {
        pitch = std::atan2(R(2, 1), R(2, 2));
        roll = std::atan2(R(1, 0), R(0, 0));
    }
    else
    {
        // Only pitch - s*roll is observable; fix roll = 0.
        const double s = yaw >= 0.0 ? 1.0 : -1.0;
        pitch = std::atan2(s * R(0, 1), R(1, 1));
    }
    return {yaw * kDegPerRad, pitch * kDegPerRad, roll * kDegPerRad};
}

std::array<Point2, 6> project(const FaceModel3D& model, const Vec3& rvec, const Vec3& tvec, const CameraModel& cam)
{
    const Mat3 R = rodrigues(rvec);
    std::array<Point2, 6> out;
    for (int i = 0; i < 6; ++i)
    {
        const Vec3 X = R * model.points[i] + tvec;
        if (!(X.z() > 0.0))
            throw BehindCamera("model point " + std::to_string(i) + " has depth " + std::to_string(X.z()));
        out[i] = {cam.fx * X.x() / X.z() + cam.cx, -cam.fy * X.y() / X.z() + cam.cy};
    }
    return out;
}

Residuals reprojection_residuals(const std::array<Point2, 6>& observed, const FaceModel3D& model,
                                 const PoseParams& params, const CameraModel& cam)
{
    auto r = residuals_or_none(observed, model, params, cam);
    if (!r)
        throw BehindCamera("pose places the model behind the camera");
    return *r;
}

Jacobian reprojection_jacobian(const FaceModel3D& model, const PoseParams& params, const CameraModel& cam)
{
    const Vec3 w = params.head<3>();
    const Vec3 t = params.tail<3>();
    const Mat3 R = rodrigues(w);
    const double theta2 = w.squaredNorm();

    // dR/dw_k = (w_k [w]x + [w x (I - R) e_k]x) R / |w|^2, which tends to [e_k]x at w = 0.
    std::array<Mat3, 3> dR;
    for (int k = 0; k < 3; ++k)
    {
        if (theta2 < 1e-20)
            dR[k] = skew(Vec3::Unit(k));
        else
            dR[k] = (w(k) * skew(w) + skew(w.cross((Mat3::Identity() - R) * Vec3::Unit(k)))) * R / theta2;
    }

    Jacobian J;
    for (int i = 0; i < 6; ++i)
    {
        const Vec3& P = model.points[i];
        const Vec3 X = R * P + t;
        const double iz = 1.0 / X.z();
        Eigen::Matrix<double, 2, 3> dproj;
        dproj << cam.fx * iz, 0.0, -cam.fx * X.x() * iz * iz,
                 0.0, -cam.fy * iz, cam.fy * X.y() * iz * iz;
        Mat3 dX_dw;
        for (int k = 0; k < 3; ++k)
            dX_dw.col(k) = dR[k] * P;
        J.block<2, 3>(2 * i, 0) = dproj * dX_dw;
        J.block<2, 3>(2 * i, 3) = dproj;
    }
    return J;
}

RefineResult refine_pose(const std::array<Point2, 6>& observed, const FaceModel3D& model, const CameraModel& cam,
                         const PoseParams& start, const SolverOptions& opts)
{
    RefineResult out;
    out.params = start;
    auto r0 = residuals_or_none(observed, model, start, cam);
    if (!r0)
    {
        out.cost = std::numeric_limits<double>::infinity();
        return out;
    }
    Residuals r = *r0;
    out.cost = r.squaredNorm();
    out.accepted_costs.push_back(out.cost);

    double lambda = opts.lambda0;
    bool fresh = true;
    Jacobian J;
    Eigen::Matrix<double, 6, 6> H;
    PoseParams g;

    while (out.iterations < opts.max_iters)
    {
        if (out.cost == 0.0)
        {
            out.converged = true;
            break;
        }
        if (fresh)
        {
            J = reprojection_jacobian(model, out.params, cam);
            H = J.transpose() * J;
            g = J.transpose() * r;
            fresh = false;
        }
        ++out.iterations;

        Eigen::Matrix<double, 6, 6> A = H;
        for (int k = 0; k < 6; ++k)
            A(k, k) += lambda * std::max(H(k, k), 1e-12);
        const PoseParams step = A.ldlt().solve(-g);
        const double step_norm = step.norm();

        const PoseParams candidate = out.params + step;
        const auto rc = residuals_or_none(observed, model, candidate, cam);
        const double cost = rc ? rc->squaredNorm() : std::numeric_limits<double>::infinity();

        if (cost < out.cost)
        {
            const double rel = (out.cost - cost) / out.cost;
            out.params = candidate;
            out.cost = cost;
            r = *rc;
            out.accepted_costs.push_back(cost);
            lambda /= 10.0;
            fresh = true;
            if (rel < opts.tol || step_norm < opts.tol)
            {
                out.converged = true;
                break;
            }
        }
        else
        {
            lambda *= 10.0;
            if (step_norm < opts.tol)
            {
                out.converged = true;
                break;
            }
        }
    }
    return out;
}

HeadPose solve_pnp(const LandmarkSet6& points, const FaceModel3D& model, const CameraModel& cam,
                   const SolverOptions& opts)
{
    cam.validate();
    const std::array<Point2, 6> obs = points.points();

    HeadPose pose;
    for (const auto& p : obs)
    {
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
        {
            pose.status = PoseStatus::degenerate;
            return pose;
        }
    }
    const Point2 eyes = midpoint(points.left_eye, points.right_eye);
    const Point2 mouth = midpoint(points.mouth_left, points.mouth_right);
    const double axis_px = norm(mouth - eyes);
    if (collinearity_residual(obs) <= 1e-6 || axis_px < 1e-6)
    {
        pose.status = PoseStatus::degenerate;
        return pose;
    }

    // Coarse start: depth from the eye-mouth distance, lateral offset from the nose ray.
    const double axis_mm = (model.mouth_midpoint() - model.eye_midpoint()).norm();
    const double tz = cam.fx * axis_mm / axis_px;
    const Vec3 t0((points.nose.x - cam.cx) * tz / cam.fx, -(points.nose.y - cam.cy) * tz / cam.fy, tz);

    std::optional<RefineResult> best;
    for (double yaw : opts.yaw_starts_deg)
    {
        PoseParams start;
        start.head<3>() = rotation_to_rvec(euler_to_rotation({yaw, 0.0, 0.0}));
        start.tail<3>() = t0;
        RefineResult res = refine_pose(obs, model, cam, start, opts);
        if (!std::isfinite(res.cost))
            continue;
        if (!best || res.cost < best->cost)
            best = std::move(res);
    }

    if (!best)
    {
        pose.status = PoseStatus::behind_camera;
        return pose;
    }

    pose.rvec = best->params.head<3>();
    pose.tvec = best->params.tail<3>();
    pose.reproj_rms_px = std::sqrt(best->cost / 6.0);
    pose.converged = best->converged;
    pose.iterations = best->iterations;
    const EulerAngles e = rotation_to_euler(rodrigues(pose.rvec));
    pose.yaw_deg = e.yaw_deg;
    pose.pitch_deg = e.pitch_deg;
    pose.roll_deg = e.roll_deg;
    pose.status = pose.converged ? PoseStatus::ok : PoseStatus::no_convergence;
    return pose;
}

} // namespace drowsy
