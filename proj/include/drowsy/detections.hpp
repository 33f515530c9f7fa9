#pragma once

#include "drowsy/classify.hpp"
#include "drowsy/face.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace drowsy {

/// Synthetic ROI content descriptor. Synthetic streams carry it in place of pixels so the
/// classifier stage can be exercised without any image data leaving the generator.
struct RoiHint
{
    State eye = State::unknown;
    State mouth = State::unknown;
};

struct FaceDetection
{
    BBox bbox;
    double confidence = 0.0;
    FiveLandmarks landmarks;
    std::optional<RoiHint> hint;
};

/// One line of the detections stream. An empty face list means nothing was detected.
struct DetectionFrame
{
    std::int64_t frame_index = 0;
    std::int64_t timestamp_ms = 0;
    std::vector<FaceDetection> faces;
};

/// Throws ParseError carrying line_no.
DetectionFrame parse_detection_line(std::string_view line, std::size_t line_no);

/// Serialized form without the trailing line feed; coordinates at six decimals.
std::string format_detection_line(const DetectionFrame& frame);

/// Line-by-line reader that skips blank lines.
class DetectionReader
{
public:
    explicit DetectionReader(std::istream& in) : in_(in) {}

    /// Next frame, or nullopt at end of input. Throws ParseError.
    std::optional<DetectionFrame> next();
    std::size_t line() const { return line_; }

private:
    std::istream& in_;
    std::size_t line_ = 0;
};

} // namespace drowsy
