#include "drowsy/face.hpp"

#include "drowsy/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace drowsy {

namespace {

// Half-up rounding keeps ROI corners exactly translation-covariant under integer shifts.
int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

Point2 clamp_point(Point2 p, ImageSize image)
{
    return {std::clamp(p.x, 0.0, static_cast<double>(image.width)),
            std::clamp(p.y, 0.0, static_cast<double>(image.height))};
}

bool finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

} // namespace

FaceObservation make_observation(const BBox& bbox, const FiveLandmarks& lm, double confidence,
                                 std::int64_t frame_index, std::int64_t timestamp_ms, ImageSize image)
{
    if (!(bbox.width > 0.0) || !(bbox.height > 0.0))
        throw InvalidObservation("bounding box must have positive width and height");
    if (!(confidence >= 0.0 && confidence <= 1.0))
        throw InvalidObservation("confidence " + std::to_string(confidence) + " outside [0,1]");
    if (frame_index < 0 || timestamp_ms < 0)
        throw InvalidObservation("frame index and timestamp must be non-negative");
    if (image.width <= 0 || image.height <= 0)
        throw InvalidObservation("image size must be positive");
    for (Point2 p : {lm.left_eye, lm.right_eye, lm.nose, lm.mouth_left, lm.mouth_right})
        if (!finite(p))
            throw InvalidObservation("non-finite landmark coordinate");

    FaceObservation obs;
    obs.bbox = bbox;
    obs.confidence = confidence;
    obs.frame_index = frame_index;
    obs.timestamp_ms = timestamp_ms;
    obs.landmarks = {clamp_point(lm.left_eye, image), clamp_point(lm.right_eye, image),
                     clamp_point(lm.nose, image), clamp_point(lm.mouth_left, image),
                     clamp_point(lm.mouth_right, image)};
    return obs;
}

LandmarkSet6 derive_chin(const FaceObservation& obs, double chin_ratio)
{
    const FiveLandmarks& lm = obs.landmarks;
    const Point2 eyes = midpoint(lm.left_eye, lm.right_eye);
    const Point2 mouth = midpoint(lm.mouth_left, lm.mouth_right);
    const Point2 axis = mouth - eyes;
    if (norm(axis) < 1.0)
        throw DegenerateFace("eye and mouth midpoints coincide");

    return {lm.left_eye, lm.right_eye, lm.nose, lm.mouth_left, lm.mouth_right, mouth + chin_ratio * axis};
}

RoiRect centered_roi(Point2 center, const BBox& bbox, RoiKind kind)
{
    const double wr = kind == RoiKind::eye ? kEyeWidthRatio : kMouthWidthRatio;
    const double hr = kind == RoiKind::eye ? kEyeHeightRatio : kMouthHeightRatio;
    const int w = round_half_up(wr * bbox.width);
    const int h = round_half_up(hr * bbox.height);

    RoiRect r;
    r.kind = kind;
    r.x0 = round_half_up(center.x - 0.5 * w);
    r.y0 = round_half_up(center.y - 0.5 * h);
    r.x1 = r.x0 + w;
    r.y1 = r.y0 + h;
    return r;
}

RoiRect clamp_roi(const RoiRect& roi, ImageSize image)
{
    RoiRect r = roi;
    r.x0 = std::max(r.x0, 0);
    r.y0 = std::max(r.y0, 0);
    r.x1 = std::min(r.x1, image.width);
    r.y1 = std::min(r.y1, image.height);
    if (r.x1 <= r.x0 || r.y1 <= r.y0)
        throw DegenerateRoi("region of interest has no area inside the image");
    return r;
}

RoiRect eye_roi(const FaceObservation& obs, EyeSide which, ImageSize image)
{
    const Point2 c = which == EyeSide::left ? obs.landmarks.left_eye : obs.landmarks.right_eye;
    return clamp_roi(centered_roi(c, obs.bbox, RoiKind::eye), image);
}

RoiRect mouth_roi(const FaceObservation& obs, ImageSize image)
{
    const Point2 c = midpoint(obs.landmarks.mouth_left, obs.landmarks.mouth_right);
    return clamp_roi(centered_roi(c, obs.bbox, RoiKind::mouth), image);
}

std::optional<std::size_t> select_face_index(std::span<const FaceObservation> candidates)
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < candidates.size(); ++i)
    {
        if (!best)
        {
            best = i;
            continue;
        }
        const FaceObservation& c = candidates[i];
        const FaceObservation& b = candidates[*best];
        // strict comparisons keep the earlier entry on a full tie
        if (c.confidence > b.confidence ||
            (c.confidence == b.confidence && c.bbox.area() > b.bbox.area()))
            best = i;
    }
    return best;
}

std::optional<FaceObservation> select_face(std::span<const FaceObservation> candidates)
{
    if (auto i = select_face_index(candidates))
        return candidates[*i];
    return std::nullopt;
}

} // namespace drowsy
