#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>

namespace drowsy {

struct Point2
{
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
    friend bool operator==(Point2, Point2) = default;
};

inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline Point2 midpoint(Point2 a, Point2 b) { return 0.5 * (a + b); }

struct ImageSize
{
    int width = 0;
    int height = 0;
};

/// Face bounding box in pixels, top-left origin, y down.
struct BBox
{
    double x = 0.0;
    double y = 0.0;
    double width = 0.0;
    double height = 0.0;

    double area() const { return width * height; }
};

/// The five points an MTCNN-style detector reports.
struct FiveLandmarks
{
    Point2 left_eye;
    Point2 right_eye;
    Point2 nose;
    Point2 mouth_left;
    Point2 mouth_right;
};

struct FaceObservation
{
    BBox bbox;
    FiveLandmarks landmarks;
    double confidence = 0.0;
    std::int64_t frame_index = 0;
    std::int64_t timestamp_ms = 0;
};

/// Detected landmarks plus the derived chin; the 2D side of the pose solve.
struct LandmarkSet6
{
    Point2 left_eye;
    Point2 right_eye;
    Point2 nose;
    Point2 mouth_left;
    Point2 mouth_right;
    Point2 chin;

    /// Points in solver order: left eye, right eye, nose, mouth left, mouth right, chin.
    std::array<Point2, 6> points() const
    {
        return {left_eye, right_eye, nose, mouth_left, mouth_right, chin};
    }
    static LandmarkSet6 from_points(const std::array<Point2, 6>& p)
    {
        return {p[0], p[1], p[2], p[3], p[4], p[5]};
    }
};

enum class RoiKind { eye, mouth };
enum class EyeSide { left, right };

/// Integer pixel rectangle, half-open [x0,x1) x [y0,y1).
struct RoiRect
{
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;
    RoiKind kind = RoiKind::eye;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    friend bool operator==(const RoiRect&, const RoiRect&) = default;
};

// Face proportions: ROI size as a fraction of the face box.
inline constexpr double kEyeWidthRatio = 0.20;
inline constexpr double kEyeHeightRatio = 0.15;
inline constexpr double kMouthWidthRatio = 0.30;
inline constexpr double kMouthHeightRatio = 0.15;

/// Chin extrapolation factor along the eye-to-mouth axis.
inline constexpr double kDefaultChinRatio = 0.5625;

/// Builds an observation, clamping landmarks into the image. Throws InvalidObservation
/// for a non-positive box, a confidence outside [0,1] or non-finite coordinates.
FaceObservation make_observation(const BBox& bbox, const FiveLandmarks& landmarks, double confidence,
                                 std::int64_t frame_index, std::int64_t timestamp_ms, ImageSize image);

/// chin = m + k (m - e), with e and m the eye and mouth midpoints. Throws DegenerateFace
/// when |m - e| < 1 px.
LandmarkSet6 derive_chin(const FaceObservation& obs, double chin_ratio = kDefaultChinRatio);

/// Landmark-centred rectangle before clamping; size is a fixed fraction of the face box.
RoiRect centered_roi(Point2 center, const BBox& bbox, RoiKind kind);

/// Clamps to the image; throws DegenerateRoi if nothing is left.
RoiRect clamp_roi(const RoiRect& roi, ImageSize image);

RoiRect eye_roi(const FaceObservation& obs, EyeSide which, ImageSize image);
RoiRect mouth_roi(const FaceObservation& obs, ImageSize image);

/// Highest confidence wins; ties go to the larger box, then to the earlier entry.
std::optional<FaceObservation> select_face(std::span<const FaceObservation> candidates);

/// Index form of select_face, for callers that keep side data per candidate.
std::optional<std::size_t> select_face_index(std::span<const FaceObservation> candidates);

} // namespace drowsy
