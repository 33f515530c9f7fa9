#include "drowsy/error.hpp"
#include "drowsy/pose.hpp"

#include <doctest.h>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace drowsy;

namespace {

constexpr double kPi = std::numbers::pi;

Mat3 rot(const Vec3& axis, double deg) { return Eigen::AngleAxisd(deg * kPi / 180.0, axis).toRotationMatrix(); }

Vec3 rvec_of(double yaw, double pitch, double roll) { return rotation_to_rvec(euler_to_rotation({yaw, pitch, roll})); }

LandmarkSet6 projected(double yaw, double pitch, double roll, const Vec3& t,
                       const CameraModel& cam = default_camera(640, 480))
{
    return LandmarkSet6::from_points(project(FaceModel3D::canonical(), rvec_of(yaw, pitch, roll), t, cam));
}

double max_abs_diff(const Mat3& a, const Mat3& b) { return (a - b).cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("default_camera")
{
    const auto a = default_camera(640, 480);
    CHECK(a.fx == 640.0);
    CHECK(a.fy == 640.0);
    CHECK(a.cx == 320.0);
    CHECK(a.cy == 240.0);
    const auto b = default_camera(1920, 1080);
    CHECK(b.fx == 1920.0);
    CHECK(b.cx == 960.0);
    CHECK(b.cy == 540.0);
    CHECK_THROWS_AS(default_camera(0, 480), InvalidDimensions);
    CHECK_THROWS_AS(default_camera(640, -1), InvalidDimensions);
}

TEST_CASE("camera validation")
{
    CameraModel c = default_camera(640, 480);
    c.cx = 700;
    CHECK_THROWS_AS(c.validate(), InvalidDimensions);
    c = default_camera(640, 480);
    c.fy = 0;
    CHECK_THROWS_AS(c.validate(), InvalidDimensions);
}

TEST_CASE("face model validation")
{
    CHECK_NOTHROW(FaceModel3D::canonical().validate());
    FaceModel3D flat = FaceModel3D::canonical();
    for (auto& p : flat.points)
        p.z() = 0.0;
    CHECK_THROWS_AS(flat.validate(), ConfigError);
    FaceModel3D lopsided = FaceModel3D::canonical();
    lopsided.points[1].x() = 140.0;
    CHECK_THROWS_AS(lopsided.validate(), ConfigError);
}

TEST_CASE("canonical chin is collinear with the eye and mouth midpoints")
{
    const auto m = FaceModel3D::canonical();
    const Vec3 axis = m.mouth_midpoint() - m.eye_midpoint();
    const Vec3 chin = m.points[5] - m.mouth_midpoint();
    CHECK(axis.cross(chin).norm() < 1e-9);
    CHECK(chin.norm() / axis.norm() == doctest::Approx(0.5625));
}

TEST_CASE("project: origin and similar triangles")
{
    const auto cam = default_camera(640, 480);
    const auto m = FaceModel3D::canonical();
    auto p = project(m, Vec3::Zero(), Vec3(0, 0, 1000), cam);
    CHECK(p[2].x == doctest::Approx(320.0));
    CHECK(p[2].y == doctest::Approx(240.0));
    p = project(m, Vec3::Zero(), Vec3(100, 0, 1000), cam);
    CHECK(p[2].x == doctest::Approx(384.0));
    CHECK(p[2].y == doctest::Approx(240.0));
    CHECK_THROWS_AS(project(m, Vec3::Zero(), Vec3(0, 0, 50), cam), BehindCamera);
}

TEST_CASE("project matches independently computed image points")
{
    // yaw 20, pitch -10, roll 5, tvec (0, 0, 1000), 640x480 default camera
    const double expected[6][2] = {{180.840321362, 148.654253622}, {366.709486706, 120.460479302},
                                   {320.000000000, 240.000000000}, {214.198618893, 362.627249106},
                                   {411.142404216, 358.962594192}, {326.512949380, 474.864612587}};
    const auto p = projected(20, -10, 5, Vec3(0, 0, 1000)).points();
    for (int i = 0; i < 6; ++i)
    {
        CHECK(p[i].x == doctest::Approx(expected[i][0]).epsilon(1e-10));
        CHECK(p[i].y == doctest::Approx(expected[i][1]).epsilon(1e-10));
    }
}

TEST_CASE("doubling depth halves the projected extent")
{
    // Exact when every point sits at the same depth.
    const auto cam = default_camera(640, 480);
    FaceModel3D flat = FaceModel3D::canonical();
    for (auto& p : flat.points)
        p.z() = 0.0;
    for (double z : {600.0, 1000.0, 1500.0})
    {
        const auto a = project(flat, Vec3::Zero(), Vec3(30, -20, z), cam);
        const auto b = project(flat, Vec3::Zero(), Vec3(30, -20, 2 * z), cam);
        for (int i = 0; i < 6; ++i)
        {
            CHECK(b[i].x - cam.cx == doctest::Approx((a[i].x - cam.cx) / 2).epsilon(1e-12));
            CHECK(b[i].y - cam.cy == doctest::Approx((a[i].y - cam.cy) / 2).epsilon(1e-12));
        }
    }
}

TEST_CASE("doubling depth roughly halves the extent of the canonical face")
{
    const auto cam = default_camera(640, 480);
    auto extent = [](const std::array<Point2, 6>& p) {
        double lo = p[0].y, hi = p[0].y;
        for (const auto& q : p)
        {
            lo = std::min(lo, q.y);
            hi = std::max(hi, q.y);
        }
        return hi - lo;
    };
    for (double z : {1000.0, 2000.0, 4000.0})
    {
        const double ratio = extent(projected(10, 5, -3, Vec3(0, 0, 2 * z), cam).points()) /
                             extent(projected(10, 5, -3, Vec3(0, 0, z), cam).points());
        // relative depth spread of the model bounds the departure from similar triangles
        CHECK(std::abs(ratio - 0.5) <= 200.0 / z);
    }
}

TEST_CASE("rodrigues closed forms")
{
    CHECK(max_abs_diff(rodrigues(Vec3::Zero()), Mat3::Identity()) == 0.0);
    const Mat3 ry = rodrigues(Vec3(0, kPi / 2, 0));
    CHECK(std::abs(ry(0, 2) - 1.0) < 1e-12);
    CHECK(std::abs(ry(2, 0) + 1.0) < 1e-12);

    Mat3 expected;
    expected << 0.9357548033, -0.3029327134, -0.1805400767,
                0.2831649606, 0.9505806179, -0.1273345749,
                0.2101917060, 0.0680313164, 0.9752903090;
    CHECK(max_abs_diff(rodrigues(Vec3(0.1, -0.2, 0.3)), expected) < 1e-9);
}

TEST_CASE("rodrigues then matrix log recovers the vector")
{
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, kPi - 1e-6);
    for (int i = 0; i < 1000; ++i)
    {
        const Vec3 axis = Vec3(n(rng), n(rng), n(rng)).normalized();
        const Vec3 r = angle(rng) * axis;
        CHECK((rotation_to_rvec(rodrigues(r)) - r).norm() < 1e-9);
    }
}

TEST_CASE("rotation_to_euler examples")
{
    const auto id = rotation_to_euler(Mat3::Identity());
    CHECK(id.yaw_deg == 0.0);
    CHECK(id.pitch_deg == 0.0);
    CHECK(id.roll_deg == 0.0);

    const auto y30 = rotation_to_euler(rot(Vec3::UnitY(), 30));
    CHECK(y30.yaw_deg == doctest::Approx(30.0).epsilon(1e-12));
    CHECK(std::abs(y30.pitch_deg) < 1e-12);
    CHECK(std::abs(y30.roll_deg) < 1e-12);

    const Mat3 near_lock = rot(Vec3::UnitZ(), 10) * rot(Vec3::UnitY(), 89.9999) * rot(Vec3::UnitX(), 5);
    const auto e = rotation_to_euler(near_lock);
    CHECK(e.yaw_deg == doctest::Approx(90.0).epsilon(1e-5));
    CHECK(max_abs_diff(euler_to_rotation(e), near_lock) < 1e-6);

    // scipy: Rotation.from_rotvec([0.1,-0.2,0.3]).as_euler('ZYX')
    const auto g = rotation_to_euler(rodrigues(Vec3(0.1, -0.2, 0.3)));
    CHECK(g.yaw_deg == doctest::Approx(-12.133586936).epsilon(1e-9));
    CHECK(g.pitch_deg == doctest::Approx(3.990200230).epsilon(1e-9));
    CHECK(g.roll_deg == doctest::Approx(16.836126792).epsilon(1e-9));
}

TEST_CASE("rotation_to_euler at gimbal lock recomposes exactly")
{
    for (double yaw : {90.0, -90.0})
        for (double pitch : {-40.0, 0.0, 25.0})
            for (double roll : {-30.0, 0.0, 15.0})
            {
                const Mat3 R = euler_to_rotation({yaw, pitch, roll});
                const auto e = rotation_to_euler(R);
                CHECK(e.roll_deg == 0.0);
                CHECK(max_abs_diff(euler_to_rotation(e), R) < 1e-9);
            }
}

TEST_CASE("euler composition round trip on random rotations")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> yaw(-89.0, 89.0);
    std::uniform_real_distribution<double> other(-179.0, 179.0);
    for (int i = 0; i < 2000; ++i)
    {
        const EulerAngles a{yaw(rng), other(rng), other(rng)};
        const Mat3 R = euler_to_rotation(a);
        const auto e = rotation_to_euler(R);
        CHECK(e.yaw_deg == doctest::Approx(a.yaw_deg).epsilon(1e-9));
        CHECK(e.pitch_deg == doctest::Approx(a.pitch_deg).epsilon(1e-9));
        CHECK(e.roll_deg == doctest::Approx(a.roll_deg).epsilon(1e-9));
        CHECK(max_abs_diff(euler_to_rotation(e), R) < 1e-9);
    }
}

TEST_CASE("rotation_to_euler rejects non-rotations")
{
    Mat3 s = Mat3::Identity();
    s(0, 0) = 1.001;
    CHECK_THROWS_AS(rotation_to_euler(s), NotARotation);
    Mat3 reflect = Mat3::Identity();
    reflect(2, 2) = -1.0;
    CHECK_THROWS_AS(rotation_to_euler(reflect), NotARotation);
}

TEST_CASE("analytic Jacobian matches central differences")
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> ang(-40.0, 40.0);
    std::uniform_real_distribution<double> off(-100.0, 100.0);
    std::uniform_real_distribution<double> depth(700.0, 1500.0);
    const auto cam = default_camera(640, 480);
    const auto model = FaceModel3D::canonical();
    const auto obs = projected(0, 0, 0, Vec3(0, 0, 1000)).points();
    for (int trial = 0; trial < 20; ++trial)
    {
        PoseParams p;
        p.head<3>() = rvec_of(ang(rng), ang(rng), ang(rng));
        p.tail<3>() = Vec3(off(rng), off(rng), depth(rng));
        const Jacobian J = reprojection_jacobian(model, p, cam);
        for (int k = 0; k < 6; ++k)
        {
            const double h = k < 3 ? 1e-6 : 1e-4;
            PoseParams a = p, b = p;
            a(k) += h;
            b(k) -= h;
            const Residuals fd = (reprojection_residuals(obs, model, a, cam) - reprojection_residuals(obs, model, b, cam)) / (2 * h);
            const double rel = (fd - J.col(k)).norm() / std::max(1.0, fd.norm());
            CHECK(rel < 1e-5);
        }
    }
}

TEST_CASE("Jacobian at the zero rotation")
{
    const auto cam = default_camera(640, 480);
    const auto model = FaceModel3D::canonical();
    const auto obs = projected(0, 0, 0, Vec3(0, 0, 1000)).points();
    PoseParams p;
    p << 0, 0, 0, 10, -5, 900;
    const Jacobian J = reprojection_jacobian(model, p, cam);
    for (int k = 0; k < 3; ++k)
    {
        PoseParams a = p, b = p;
        a(k) += 1e-6;
        b(k) -= 1e-6;
        const Residuals fd = (reprojection_residuals(obs, model, a, cam) - reprojection_residuals(obs, model, b, cam)) / 2e-6;
        CHECK((fd - J.col(k)).norm() / fd.norm() < 1e-5);
    }
}

TEST_CASE("refine_pose never increases the accepted cost")
{
    std::mt19937_64 rng(12);
    std::normal_distribution<double> noise(0.0, 2.0);
    const auto cam = default_camera(640, 480);
    const auto model = FaceModel3D::canonical();
    for (int trial = 0; trial < 50; ++trial)
    {
        auto obs = projected(15, -5, 3, Vec3(20, 10, 1000)).points();
        for (auto& q : obs)
            q = {q.x + noise(rng), q.y + noise(rng)};
        PoseParams start;
        start << 0, 0, 0, 0, 0, 1100;
        const auto res = refine_pose(obs, model, cam, start);
        REQUIRE(res.accepted_costs.size() >= 2);
        for (std::size_t i = 1; i < res.accepted_costs.size(); ++i)
            CHECK(res.accepted_costs[i] <= res.accepted_costs[i - 1]);
        CHECK(res.iterations <= SolverOptions{}.max_iters);
    }
}

TEST_CASE("refine_pose honours max_iters")
{
    SolverOptions opts;
    opts.max_iters = 3;
    PoseParams start;
    start << 0.3, 0.2, 0.1, 50, 50, 1400;
    const auto res =
        refine_pose(projected(20, -10, 5, Vec3(0, 0, 900)).points(), FaceModel3D::canonical(), default_camera(640, 480), start, opts);
    CHECK(res.iterations == 3);
    CHECK_FALSE(res.converged);
}

TEST_CASE("solve_pnp identity round trip")
{
    const auto pose = solve_pnp(projected(0, 0, 0, Vec3(0, 0, 1000)), FaceModel3D::canonical(), default_camera(640, 480));
    REQUIRE(pose.usable());
    CHECK(std::abs(pose.yaw_deg) < 1e-6);
    CHECK(std::abs(pose.pitch_deg) < 1e-6);
    CHECK(std::abs(pose.roll_deg) < 1e-6);
    CHECK(pose.reproj_rms_px < 1e-8);
    CHECK(pose.converged);
}

TEST_CASE("solve_pnp recovers yaw 20, pitch -10, roll 5 at 900 mm")
{
    const auto pose = solve_pnp(projected(20, -10, 5, Vec3(0, 0, 900)), FaceModel3D::canonical(), default_camera(640, 480));
    REQUIRE(pose.usable());
    CHECK(pose.yaw_deg == doctest::Approx(20.0).epsilon(1e-4 / 20.0));
    CHECK(std::abs(pose.yaw_deg - 20.0) < 1e-4);
    CHECK(std::abs(pose.pitch_deg + 10.0) < 1e-4);
    CHECK(std::abs(pose.roll_deg - 5.0) < 1e-4);
    CHECK((pose.tvec - Vec3(0, 0, 900)).norm() < 1e-3);
}

TEST_CASE("solve_pnp over the pose grid")
{
    const auto cam = default_camera(640, 480);
    const auto model = FaceModel3D::canonical();
    int failures = 0;
    for (double z : {600.0, 1000.0, 1500.0})
        for (double yaw = -45; yaw <= 45; yaw += 15)
            for (double pitch = -30; pitch <= 30; pitch += 15)
                for (double roll : {-20.0, 0.0, 20.0})
                {
                    const auto pose = solve_pnp(projected(yaw, pitch, roll, Vec3(0, 0, z), cam), model, cam);
                    const bool ok = pose.usable() && std::abs(pose.yaw_deg - yaw) <= 0.01 &&
                                    std::abs(pose.pitch_deg - pitch) <= 0.01 && std::abs(pose.roll_deg - roll) <= 0.01 &&
                                    pose.reproj_rms_px <= 1e-6;
                    if (!ok)
                        ++failures;
                }
    CHECK(failures == 0);
}

TEST_CASE("solve_pnp under pixel noise")
{
    const auto cam = default_camera(640, 480);
    const auto model = FaceModel3D::canonical();
    const auto clean = projected(0, 0, 0, Vec3(0, 0, 1000), cam).points();
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> noise(0.0, 0.5);
    std::vector<double> ey, ep, er;
    for (int trial = 0; trial < 100; ++trial)
    {
        auto obs = clean;
        for (auto& q : obs)
            q = {q.x + noise(rng), q.y + noise(rng)};
        const auto pose = solve_pnp(LandmarkSet6::from_points(obs), model, cam);
        REQUIRE(pose.usable());
        ey.push_back(std::abs(pose.yaw_deg));
        ep.push_back(std::abs(pose.pitch_deg));
        er.push_back(std::abs(pose.roll_deg));
    }
    auto median = [](std::vector<double> v) {
        std::nth_element(v.begin(), v.begin() + 50, v.end());
        return v[50];
    };
    CHECK(median(ey) <= 2.0);
    CHECK(median(ep) <= 2.0);
    CHECK(median(er) <= 2.0);
}

TEST_CASE("solve_pnp reports degenerate input")
{
    const auto cam = default_camera(640, 480);
    std::array<Point2, 6> line;
    for (int i = 0; i < 6; ++i)
        line[i] = {100.0 + 10 * i, 50.0 + 5 * i};
    auto pose = solve_pnp(LandmarkSet6::from_points(line), FaceModel3D::canonical(), cam);
    CHECK(pose.status == PoseStatus::degenerate);
    CHECK_FALSE(pose.converged);
    CHECK_FALSE(pose.usable());

    auto pts = projected(0, 0, 0, Vec3(0, 0, 1000)).points();
    pts[3].x = std::nan("");
    pose = solve_pnp(LandmarkSet6::from_points(pts), FaceModel3D::canonical(), cam);
    CHECK(pose.status == PoseStatus::degenerate);
}

TEST_CASE("solve_pnp reports an exhausted iteration budget")
{
    SolverOptions opts;
    opts.max_iters = 1;
    const auto pose =
        solve_pnp(projected(30, 20, -10, Vec3(0, 0, 1000)), FaceModel3D::canonical(), default_camera(640, 480), opts);
    CHECK(pose.status == PoseStatus::no_convergence);
    CHECK_FALSE(pose.usable());
    CHECK(pose.reproj_rms_px >= 0.0);
}

TEST_CASE("solve_pnp is deterministic")
{
    const auto in = projected(12, -7, 3, Vec3(15, -20, 800));
    const auto a = solve_pnp(in, FaceModel3D::canonical(), default_camera(640, 480));
    const auto b = solve_pnp(in, FaceModel3D::canonical(), default_camera(640, 480));
    CHECK(a.rvec == b.rvec);
    CHECK(a.tvec == b.tvec);
    CHECK(a.iterations == b.iterations);
}
